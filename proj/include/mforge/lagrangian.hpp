#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "mforge/multiplier.hpp"

namespace mforge {

// Scalar function of (x, v): a closed expression when the antiderivative
// table produced one, otherwise an immutable quadrature-backed closure.
class ScalarFn {
public:
    ScalarFn() = default;
    static ScalarFn closed(Expr e, Params params);
    static ScalarFn numeric(std::function<double(double, double)> fn,
                            std::string note);

    bool is_closed() const { return closed_.has_value(); }
    const Expr& expr() const;  // requires is_closed()
    double operator()(double x, double v) const;
    const std::string& note() const { return note_; }

private:
    std::optional<Expr> closed_;
    Params params_;
    std::function<double(double, double)> fn_;
    std::string note_;
};

enum class LagrangianSource { FromMultiplier, FromIntegral, Catalog };

struct Lagrangian {
    ScalarFn L;
    std::optional<Expr> phi2;  // potential-like term, when closed
    std::string gauge_note;
    NonvanishingResult regular;  // zero-free verdict on d2L/dv2
    LagrangianSource source = LagrangianSource::Catalog;
    Domain domain;
    Params params;
    ZeroTestResult el_check;  // Euler-Lagrange verification at build time
};

// L = double v-antiderivative of mu (anchored at v0) + phi2(x), with
// phi2(x) the x-quadrature of (mu F)(., v0) from 0 and the phi1*v gauge
// term fixed to zero. Verifies the Euler-Lagrange residual before
// returning.
Lagrangian lagrangian_from_multiplier(const Sode& s, const Multiplier& mu,
                                      double v0 = 0.0,
                                      const VerifyOptions& opts = {});

// L(x, v) = v * antiderivative_zeta of I(x, zeta)/zeta^2 evaluated at
// zeta = v. Additive constants and gauge terms are EL-trivial and kept as
// produced.
Lagrangian lagrangian_from_integral(const Sode& s, const FirstIntegral& i,
                                    const VerifyOptions& opts = {});

// dL/dx - [d2L/dvdx * v + d2L/dv2 * F]: the Euler-Lagrange residual with
// the time derivative expanded along the dynamics. Requires a closed L.
Expr euler_lagrange_residual(const Sode& s, const Lagrangian& lag);

// Closed L: zero_test of the symbolic residual. Numeric-backed L: the
// residual is sampled with finite-difference derivatives (h = 1e-5) and
// the tolerance relaxes to 1e-6.
ZeroTestResult euler_lagrange_check(const Sode& s, const Lagrangian& lag,
                                    const VerifyOptions& opts = {});

// Drop top-level additive terms free of every symbol in `vars`; used to
// compare Lagrangians up to irrelevant constants.
Expr strip_constant_terms(const Expr& e,
                          const std::set<std::string>& vars = {"x", "v"});

struct Hamiltonian {
    Expr p_of_v;                 // momentum as a function of (x, v)
    Expr dp_dv;                  // its v-derivative (the multiplier)
    std::optional<Expr> v_of_p;  // closed inverse in (x, p), when found
    std::optional<Expr> H;       // closed H(x, p) iff v_of_p is closed
    Domain domain;               // (x, v) chart; v-interval brackets Newton
    Params params;
    std::string branch_note;
    ScalarFn lagr;  // retained for the numeric H path

    double p_at(double x, double v) const;
    // Inverse momentum map: closed form when available, else damped Newton
    // with a bisection fallback inside the domain's v-interval (tol 1e-12).
    double v_at(double x, double p) const;
    double value(double x, double p) const;  // H(x, p)
};

// Legendre transform on domain d: p = dL/dv, v(p) by affine or
// atanh-pattern inversion when possible (else numeric), H = p v(p) - L.
// Requires closed L, regular (one-signed d2L/dv2) on d.
Hamiltonian legendre(const Lagrangian& lag, const Domain& d,
                     const VerifyOptions& opts = {});

}  // namespace mforge
