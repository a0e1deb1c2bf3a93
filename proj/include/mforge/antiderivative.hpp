#pragma once

#include <string>

#include "mforge/expr.hpp"

namespace mforge {

// One-variable antiderivative: closed-form primitive when the rule table
// fires, numeric-backed evaluator (adaptive Simpson from a reference point)
// otherwise.
class Antiderivative {
public:
    static Antiderivative closed(Expr primitive, Expr integrand, std::string var);
    static Antiderivative numeric(Expr integrand, std::string var, double ref);

    bool closed_form() const { return closed_; }
    const Expr& expr() const;  // primitive; requires closed_form()
    const Expr& integrand() const { return integrand_; }
    const std::string& var() const { return var_; }
    double ref() const { return ref_; }

    // Antiderivative value at point[var] with all other symbols bound.
    // Closed: evaluates the primitive. Numeric: integrates the integrand
    // from ref to point[var] with abs tol 1e-10.
    double eval(const EvalPoint& point, const Params& params = {},
                double eps_sing = 1e-9) const;

    // Definite integral over [a, b] in var; `point` binds the remaining
    // symbols.
    double definite(double a, double b, EvalPoint point,
                    const Params& params = {}, double eps_sing = 1e-9) const;

private:
    Antiderivative() = default;
    bool closed_ = false;
    Expr expr_;
    Expr integrand_;
    std::string var_;
    double ref_ = 0;
};

// Integrate e in var. Rule table: power rule; affine substitution for
// powers and for every unary function of an affine argument; u*(a+b u^2)^r;
// 1/(a+b u^2) with the atan/atanh branch chosen by the numeric sign of a*b
// (params supply the values); reduction formula for (a+b u^2)^-n; completed
// square for general quadratic denominators. Anything else falls back to a
// numeric-backed evaluator anchored at `ref` (default 0).
Antiderivative antiderivative(const Expr& e, const std::string& var,
                              const Params& params = {}, double ref = 0.0);

}  // namespace mforge
