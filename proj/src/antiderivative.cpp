#include "mforge/antiderivative.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include "mforge/quadrature.hpp"

namespace mforge {

Antiderivative Antiderivative::closed(Expr primitive, Expr integrand,
                                      std::string var) {
    Antiderivative a;
    a.closed_ = true;
    a.expr_ = std::move(primitive);
    a.integrand_ = std::move(integrand);
    a.var_ = std::move(var);
    return a;
}

Antiderivative Antiderivative::numeric(Expr integrand, std::string var,
                                       double ref) {
    Antiderivative a;
    a.closed_ = false;
    a.integrand_ = std::move(integrand);
    a.var_ = std::move(var);
    a.ref_ = ref;
    return a;
}

const Expr& Antiderivative::expr() const {
    if (!closed_) throw Error("antiderivative has no closed form");
    return expr_;
}

double Antiderivative::eval(const EvalPoint& point, const Params& params,
                            double eps_sing) const {
    if (closed_) return evaluate(expr_, point, params, eps_sing);
    auto it = point.find(var_);
    if (it == point.end())
        throw EvalError(EvalError::Kind::Unbound,
                        "unbound integration variable '" + var_ + "'", var_);
    return definite(ref_, it->second, point, params, eps_sing);
}

double Antiderivative::definite(double a, double b, EvalPoint point,
                                const Params& params, double eps_sing) const {
    if (closed_) {
        point[var_] = b;
        double hi = evaluate(expr_, point, params, eps_sing);
        point[var_] = a;
        double lo = evaluate(expr_, point, params, eps_sing);
        return hi - lo;
    }
    auto f = [&](double z) {
        point[var_] = z;
        return evaluate(integrand_, point, params, eps_sing);
    };
    return integrate(f, a, b, 1e-10);
}

namespace {

bool depends_on(const Expr& e, const std::string& var) {
    return free_symbols(e).count(var) != 0;
}

// Numeric value of a parameter-only expression; nullopt when it involves
// other symbols or cannot be evaluated.
std::optional<double> param_value(const Expr& e, const Params& params) {
    try {
        return evaluate(e, {}, params, 1e-300);
    } catch (const EvalError&) {
        return std::nullopt;
    }
}

struct Quad {
    Expr a, b, c;  // S = a + b*var + c*var^2
    bool pure = false;  // b == 0
};

std::optional<Quad> quadratic_in(const Expr& s, const std::string& var) {
    Expr d1 = differentiate(s, var);
    Expr d2 = differentiate(d1, var);
    if (!differentiate(d2, var).is_zero()) return std::nullopt;
    if (depends_on(d2, var)) return std::nullopt;
    Expr v = Expr::sym(var);
    Expr c = Expr::prod({Expr::num(1, 2), d2});
    Expr b = Expr::sum({d1, Expr::prod({Expr::num(-1), d2, v})});
    if (depends_on(b, var)) return std::nullopt;
    Expr a = Expr::sum({s, Expr::prod({Expr::num(-1), b, v}),
                        Expr::prod({Expr::num(-1), c, v, v})});
    if (depends_on(a, var)) return std::nullopt;
    Quad q;
    q.a = a;
    q.b = b;
    q.c = c;
    q.pure = b.is_zero();
    return q;
}

Expr inv(const Expr& e) { return Expr::pow(e, Expr::num(-1)); }

// ∫ du / (a + c u²) about u = shifted variable expression. Branch by the
// numeric sign of a*c; nullopt when the sign cannot be decided.
std::optional<Expr> quad_inverse_primitive(const Expr& a, const Expr& c,
                                           const Expr& u, const Params& params) {
    auto av = param_value(a, params);
    auto cv = param_value(c, params);
    if (!av || !cv) return std::nullopt;
    double prod = *av * *cv;
    if (*cv == 0) return std::nullopt;
    if (std::fabs(*av) < 1e-14) {
        // degenerate a = 0: ∫ du/(c u²) = -1/(c u)
        return Expr::prod({Expr::num(-1), inv(c), inv(u)});
    }
    if (prod > 0) {
        // atan(s u)/(a s) with s = sqrt(c/a)
        Expr s = sqrt(Expr::prod({c, inv(a)}));
        return Expr::prod({atan(Expr::prod({s, u})), inv(a), inv(s)});
    }
    // atanh(s u)/(a s) with s = sqrt(-c/a)
    Expr s = sqrt(Expr::prod({Expr::num(-1), c, inv(a)}));
    return Expr::prod({atanh(Expr::prod({s, u})), inv(a), inv(s)});
}

// ∫ (a + c u²)^(-n) du for integer n ≥ 1 by the standard reduction
// formula, bottoming out in the atan/atanh branch.
std::optional<Expr> quad_power_primitive(const Expr& a, const Expr& c,
                                         const Expr& u, long long n,
                                         const Params& params) {
    if (n == 1) return quad_inverse_primitive(a, c, u, params);
    auto lower = quad_power_primitive(a, c, u, n - 1, params);
    if (!lower) return std::nullopt;
    Expr s = Expr::sum({a, Expr::prod({c, u, u})});
    Expr coeff = inv(Expr::prod({Expr::num(2 * (n - 1)), a}));
    Expr first = Expr::prod({u, Expr::pow(s, Expr::num(-(n - 1))), coeff});
    Expr second = Expr::prod({Expr::num(2 * n - 3), coeff, *lower});
    return Expr::sum({first, second});
}

// Primitive of f(u) for affine u; the affine slope division happens in the
// caller. ln(|.|) is used where the argument's sign is not controlled.
std::optional<Expr> func_primitive(FuncId f, const Expr& u) {
    switch (f) {
        case FuncId::Sin:
            return Expr::prod({Expr::num(-1), cos(u)});
        case FuncId::Cos:
            return sin(u);
        case FuncId::Tan:
            return Expr::prod({Expr::num(-1), ln(abs(cos(u)))});
        case FuncId::Exp:
            return exp(u);
        case FuncId::Ln:
            return Expr::sum({Expr::prod({u, ln(u)}), Expr::prod({Expr::num(-1), u})});
        case FuncId::Sqrt:
            return Expr::prod({Expr::num(2, 3), Expr::pow(u, Expr::num(3, 2))});
        case FuncId::Abs:
            return Expr::prod({Expr::num(1, 2), u, abs(u)});
        case FuncId::Sign:
            return abs(u);
        case FuncId::Tanh:
            // ∫tanh = ln(cosh); expressed through exp since cosh is not in
            // the function set
            return ln(Expr::sum({exp(u), exp(Expr::prod({Expr::num(-1), u}))}));
        case FuncId::Atan:
            return Expr::sum(
                {Expr::prod({u, atan(u)}),
                 Expr::prod({Expr::num(-1, 2),
                             ln(Expr::sum({Expr::num(1), Expr::prod({u, u})}))})});
        case FuncId::Atanh:
            return Expr::sum(
                {Expr::prod({u, atanh(u)}),
                 Expr::prod({Expr::num(1, 2),
                             ln(Expr::sum({Expr::num(1),
                                           Expr::prod({Expr::num(-1), u, u})}))})});
    }
    return std::nullopt;
}

// Integrate a single var-dependent factor. Returns nullopt when no rule
// applies.
std::optional<Expr> integrate_factor(const Expr& f, const std::string& var,
                                     const Params& params) {
    Expr v = Expr::sym(var);

    if (f.kind() == Kind::Symbol && f.name() == var)
        return Expr::prod({Expr::num(1, 2), v, v});

    if (f.kind() == Kind::Power && !depends_on(f.exponent(), var)) {
        const Expr& base = f.base();
        const Expr& r = f.exponent();
        if (!r.is_number()) return std::nullopt;
        double rv = r.number().value();

        // pure power of the variable
        if (base.kind() == Kind::Symbol && base.name() == var) {
            if (rv == -1.0) return ln(abs(v));
            Expr r1 = Expr::sum({r, Expr::num(1)});
            return Expr::prod({Expr::pow(v, r1), inv(r1)});
        }

        auto q = quadratic_in(base, var);
        if (!q) return std::nullopt;

        if (q->c.is_zero()) {
            // affine base: ∫(A v + B)^r = base^(r+1)/(A (r+1)), r ≠ -1
            if (q->b.is_zero()) return std::nullopt;  // var-free, caller bug
            if (rv == -1.0)
                return Expr::prod({ln(abs(base)), inv(q->b)});
            Expr r1 = Expr::sum({r, Expr::num(1)});
            return Expr::prod({Expr::pow(base, r1), inv(q->b), inv(r1)});
        }
        if (q->pure) {
            if (rv == -1.0) return quad_inverse_primitive(q->a, q->c, v, params);
            if (r.number().is_integer() && rv <= -2.0)
                return quad_power_primitive(q->a, q->c, v,
                                            -r.number().as_integer(), params);
            return std::nullopt;
        }
        // general quadratic, r = -1: complete the square
        if (rv == -1.0) {
            Expr shift = Expr::prod({q->b, Expr::num(1, 2), inv(q->c)});
            Expr u = Expr::sum({v, shift});
            // a0 = a - b²/(4c)
            Expr a0 = Expr::sum(
                {q->a, Expr::prod({Expr::num(-1, 4), q->b, q->b, inv(q->c)})});
            return quad_inverse_primitive(a0, q->c, u, params);
        }
        return std::nullopt;
    }

    if (f.kind() == Kind::Func) {
        auto lin = linear_in(f.arg(), var);
        if (!lin || lin->first.is_zero()) return std::nullopt;
        auto prim = func_primitive(f.func(), f.arg());
        if (!prim) return std::nullopt;
        return Expr::prod({*prim, inv(lin->first)});
    }

    if (f.kind() == Kind::Sum) {
        // affine or pure-quadratic polynomial factor (most are pre-expanded;
        // this handles a residual bare sum defensively)
        auto q = quadratic_in(f, var);
        if (!q) return std::nullopt;
        return Expr::sum({Expr::prod({q->a, v}),
                          Expr::prod({Expr::num(1, 2), q->b, v, v}),
                          Expr::prod({Expr::num(1, 3), q->c, v, v, v})});
    }

    return std::nullopt;
}

// Integrate one additive term (a product of a var-free coefficient and
// var-dependent core factors).
std::optional<Expr> integrate_term(const Expr& term, const std::string& var,
                                   const Params& params) {
    std::vector<Expr> coeff, core;
    if (term.kind() == Kind::Product) {
        for (const auto& f : term.kids())
            (depends_on(f, var) ? core : coeff).push_back(f);
    } else if (depends_on(term, var)) {
        core.push_back(term);
    } else {
        coeff.push_back(term);
    }

    Expr v = Expr::sym(var);
    std::optional<Expr> prim;
    if (core.empty()) {
        prim = v;
    } else if (core.size() == 1) {
        prim = integrate_factor(core[0], var, params);
    } else if (core.size() == 2) {
        // u-substitution: var * (a + c var²)^r
        const Expr* lin = nullptr;
        const Expr* rest = nullptr;
        for (int i = 0; i < 2; ++i) {
            const Expr& f = core[i];
            if (f.kind() == Kind::Symbol && f.name() == var) {
                lin = &core[i];
                rest = &core[1 - i];
            }
        }
        if (lin && rest && rest->kind() == Kind::Power &&
            rest->exponent().is_number() && !depends_on(rest->exponent(), var)) {
            auto q = quadratic_in(rest->base(), var);
            if (q && q->pure && !q->c.is_zero()) {
                const Expr& r = rest->exponent();
                double rv = r.number().value();
                if (rv == -1.0) {
                    prim = Expr::prod(
                        {ln(abs(rest->base())), Expr::num(1, 2), inv(q->c)});
                } else {
                    Expr r1 = Expr::sum({r, Expr::num(1)});
                    prim = Expr::prod({Expr::pow(rest->base(), r1), Expr::num(1, 2),
                                       inv(q->c), inv(r1)});
                }
            }
        }
    }
    if (!prim) return std::nullopt;
    std::vector<Expr> out = coeff;
    out.push_back(*prim);
    return Expr::prod(std::move(out));
}

}  // namespace

Antiderivative antiderivative(const Expr& e, const std::string& var,
                              const Params& params, double ref) {
    Expr expanded = expand_in(e, var);
    // Pairwise products formed during expansion can regroup powers into new
    // var-dependent sums (u^-1 * u^2 collapses to a bare u); re-expand until
    // stable so every term reaches integrate_term in factored-core form.
    for (int pass = 0; pass < 3; ++pass) {
        Expr again = expand_in(expanded, var);
        if (again == expanded) break;
        expanded = std::move(again);
    }
    std::vector<Expr> terms;
    if (expanded.kind() == Kind::Sum)
        terms.assign(expanded.kids().begin(), expanded.kids().end());
    else
        terms.push_back(expanded);

    std::vector<Expr> prims;
    prims.reserve(terms.size());
    for (const auto& t : terms) {
        auto p = integrate_term(t, var, params);
        if (!p) return Antiderivative::numeric(e, var, ref);
        prims.push_back(std::move(*p));
    }
    return Antiderivative::closed(Expr::sum(std::move(prims)), e, var);
}

}  // namespace mforge
