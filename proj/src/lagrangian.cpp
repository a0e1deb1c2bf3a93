#include "mforge/lagrangian.hpp"

#include <cmath>
#include <limits>

#include "mforge/antiderivative.hpp"
#include "mforge/quadrature.hpp"

namespace mforge {

ScalarFn ScalarFn::closed(Expr e, Params params) {
    ScalarFn s;
    s.closed_ = std::move(e);
    s.params_ = std::move(params);
    return s;
}

ScalarFn ScalarFn::numeric(std::function<double(double, double)> fn,
                           std::string note) {
    ScalarFn s;
    s.fn_ = std::move(fn);
    s.note_ = std::move(note);
    return s;
}

const Expr& ScalarFn::expr() const {
    if (!closed_) throw Error("no closed form: " + note_);
    return *closed_;
}

double ScalarFn::operator()(double x, double v) const {
    if (closed_) return evaluate(*closed_, {{"x", x}, {"v", v}}, params_);
    return fn_(x, v);
}

namespace {

// Finite-difference Euler-Lagrange residual scan for quadrature-backed L
// (central differences, h = 1e-5, scaled tolerance 1e-6).
ZeroTestResult el_check_numeric(const Sode& s, const Lagrangian& lag,
                                const VerifyOptions& opts) {
    const double h = 1e-5;
    const double tol = std::max(opts.tol, 1e-6);
    ZeroTestResult r;
    std::vector<EvalPoint> pts =
        sample_points(lag.domain, 10 * opts.samples, opts.seed);
    for (const auto& p : pts) {
        if (r.used >= opts.samples) break;
        double x = p.at("x"), v = p.at("v");
        double f, lx, lvx, lvv;
        try {
            f = evaluate(s.force, p, s.params);
            lx = (lag.L(x + h, v) - lag.L(x - h, v)) / (2 * h);
            lvv = (lag.L(x, v + h) - 2 * lag.L(x, v) + lag.L(x, v - h)) /
                  (h * h);
            lvx = (lag.L(x + h, v + h) - lag.L(x + h, v - h) -
                   lag.L(x - h, v + h) + lag.L(x - h, v - h)) /
                  (4 * h * h);
        } catch (const Error&) {
            ++r.skipped;
            continue;
        }
        double resid = lx - (lvx * v + lvv * f);
        double scale =
            1 + std::abs(lx) + std::abs(lvx * v) + std::abs(lvv * f);
        double scaled = std::abs(resid) / scale;
        ++r.used;
        if (scaled > r.max_scaled) r.max_scaled = scaled;
        if (scaled >= tol) {
            r.verdict = Verdict::Nonzero;
            r.witness = p;
            r.witness_value = scaled;
            return r;
        }
    }
    if (r.used == 0)
        throw VerifyError(
            "Euler-Lagrange check found no nonsingular sample points");
    r.verdict = r.used >= opts.samples ? Verdict::Zero : Verdict::Inconclusive;
    return r;
}

// Sampling regularity check on a numeric-backed L: finite-difference
// d2L/dv2 must keep one sign and stay away from zero.
NonvanishingResult regular_check_numeric(const ScalarFn& L, const Domain& dom,
                                         std::uint64_t seed) {
    const double h = 1e-4;
    NonvanishingResult r;
    r.ok = true;
    r.min_abs = std::numeric_limits<double>::infinity();
    for (const auto& p : sample_points(dom, 256, seed)) {
        double x = p.at("x"), v = p.at("v");
        double m;
        try {
            m = (L(x, v + h) - 2 * L(x, v) + L(x, v - h)) / (h * h);
        } catch (const Error&) {
            continue;
        }
        if (std::abs(m) < 1e-9) {
            r.ok = false;
            r.reason = "d2L/dv2 vanishes at a sampled point";
            r.witness = p;
            return r;
        }
        int sg = m > 0 ? 1 : -1;
        if (r.sign == 0) r.sign = sg;
        if (sg != r.sign) {
            r.ok = false;
            r.reason = "d2L/dv2 changes sign across the domain";
            r.witness = p;
            return r;
        }
        r.min_abs = std::min(r.min_abs, std::abs(m));
    }
    if (r.sign == 0) {
        r.ok = false;
        r.reason = "no nonsingular samples for the regularity check";
    }
    return r;
}

}  // namespace

Lagrangian lagrangian_from_multiplier(const Sode& s, const Multiplier& mu,
                                      double v0, const VerifyOptions& opts) {
    if (!mu.verified())
        throw VerifyError(
            "lagrangian_from_multiplier requires a verified multiplier");
    if (!mu.domain.interval("v").contains(v0))
        throw VerifyError("anchor v0 lies outside the multiplier's v-interval");

    Expr x = Expr::sym("x");
    Expr v = Expr::sym("v");
    Expr v0e = Expr::num(v0);

    // Potential-like term: phi2(x) = integral_0^x (mu F)(zeta, v0) dzeta.
    Expr mu_f0 = substitute(mu.expr * s.force, "v", v0e);
    Antiderivative phi2_ad = antiderivative(mu_f0, "x", s.params, 0.0);
    std::optional<Expr> phi2;
    if (phi2_ad.closed_form())
        phi2 = phi2_ad.expr() - substitute(phi2_ad.expr(), "x", Expr::num(0));

    // Double antiderivative of mu in v, anchored at v0 so no spurious
    // x-dependent constant breaks the Euler-Lagrange balance.
    std::optional<Expr> mass_term;
    Antiderivative inner = antiderivative(mu.expr, "v", s.params, v0);
    if (inner.closed_form()) {
        Antiderivative outer =
            antiderivative(inner.expr(), "v", s.params, v0);
        if (outer.closed_form()) {
            Expr w0 = substitute(inner.expr(), "v", v0e);
            Expr m0 = substitute(outer.expr(), "v", v0e);
            mass_term = outer.expr() - m0 - w0 * (v - v0e);
        }
    }

    Lagrangian lag;
    lag.source = LagrangianSource::FromMultiplier;
    lag.domain = mu.domain;
    lag.params = s.params;
    lag.phi2 = phi2;
    lag.gauge_note =
        "phi1 fixed to zero; double antiderivative anchored at v0; phi2 "
        "anchored at x = 0";

    if (mass_term && phi2) {
        lag.L = ScalarFn::closed(*mass_term + *phi2, s.params);
        lag.regular = nonvanishing(
            differentiate(differentiate(lag.L.expr(), "v"), "v"), lag.domain,
            s.params, 256, opts.seed);
    } else {
        // Iterated integral collapsed to a single weighted quadrature:
        // M(x, v) = integral_v0^v (v - s) mu(x, s) ds.
        Expr mu_e = mu.expr;
        Params pr = s.params;
        auto fn = [mu_e, pr, v0, phi2_ad](double xx, double vv) {
            auto f = [&](double sv) {
                return (vv - sv) * evaluate(mu_e, {{"x", xx}, {"v", sv}}, pr);
            };
            double m = integrate(f, v0, vv, 1e-12);
            return m + phi2_ad.definite(0.0, xx, {}, pr);
        };
        lag.L = ScalarFn::numeric(
            fn, "quadrature-backed Lagrangian (no table antiderivative)");
        lag.regular = mu.certificate;  // d2L/dv2 = mu by construction
    }
    lag.el_check = euler_lagrange_check(s, lag, opts);
    return lag;
}

Lagrangian lagrangian_from_integral(const Sode& s, const FirstIntegral& i,
                                    const VerifyOptions& opts) {
    if (!i.ok())
        throw VerifyError(
            "lagrangian_from_integral requires a verified first integral");

    std::string zv = "zeta";
    auto used = free_symbols(i.expr);
    while (used.count(zv) || s.params.count(zv)) zv += "_";

    Expr zeta = Expr::sym(zv);
    Expr kernel = substitute(i.expr, "v", zeta) / (zeta * zeta);

    Interval vi = i.domain.interval("v");
    bool v_excludes_zero = vi.lo > 0.0 || vi.hi < 0.0;
    double ref = v_excludes_zero ? 0.5 * (vi.lo + vi.hi) : 1.0;

    Antiderivative ad = antiderivative(kernel, zv, s.params, ref);

    Lagrangian lag;
    lag.source = LagrangianSource::FromIntegral;
    lag.domain = i.domain;
    lag.params = s.params;
    lag.gauge_note =
        "built from a first integral; additive constants and gauge terms "
        "left as produced";

    if (ad.closed_form()) {
        Expr L = Expr::sym("v") * substitute(ad.expr(), zv, Expr::sym("v"));
        lag.L = ScalarFn::closed(L, s.params);
        lag.regular = nonvanishing(
            differentiate(differentiate(L, "v"), "v"), lag.domain, s.params,
            256, opts.seed);
    } else {
        if (!v_excludes_zero)
            throw Error(
                "kernel singularity: the 1/zeta^2 kernel has no closed "
                "antiderivative and the v-interval contains zeta = 0");
        Params pr = s.params;
        auto fn = [ad, pr, ref](double xx, double vv) {
            return vv * ad.definite(ref, vv, {{"x", xx}}, pr);
        };
        lag.L = ScalarFn::numeric(
            fn, "quadrature-backed Lagrangian (no table antiderivative)");
        lag.regular = regular_check_numeric(lag.L, lag.domain, opts.seed);
    }
    lag.el_check = euler_lagrange_check(s, lag, opts);
    return lag;
}

Expr euler_lagrange_residual(const Sode& s, const Lagrangian& lag) {
    const Expr& L = lag.L.expr();
    Expr lx = differentiate(L, "x");
    Expr lv = differentiate(L, "v");
    Expr lvx = differentiate(lv, "x");
    Expr lvv = differentiate(lv, "v");
    return lx - (lvx * Expr::sym("v") + lvv * s.force);
}

ZeroTestResult euler_lagrange_check(const Sode& s, const Lagrangian& lag,
                                    const VerifyOptions& opts) {
    if (lag.L.is_closed())
        return zero_test(euler_lagrange_residual(s, lag), lag.domain,
                         s.params, opts);
    return el_check_numeric(s, lag, opts);
}

Expr strip_constant_terms(const Expr& e, const std::set<std::string>& vars) {
    std::vector<Expr> terms;
    if (e.kind() == Kind::Sum)
        terms = e.kids();
    else
        terms.push_back(e);
    std::vector<Expr> kept;
    for (const Expr& t : terms) {
        auto fs = free_symbols(t);
        for (const auto& name : vars)
            if (fs.count(name)) {
                kept.push_back(t);
                break;
            }
    }
    return Expr::sum(std::move(kept));
}

namespace {

// p = C*atanh(arg) + D with arg affine in v and C, D v-free: solve for v.
std::optional<Expr> invert_atanh_pattern(const Expr& p, const Expr& ph) {
    std::vector<Expr> terms;
    if (p.kind() == Kind::Sum)
        terms = p.kids();
    else
        terms.push_back(p);

    std::optional<Expr> coeff, arg;
    std::vector<Expr> rest;
    for (const Expr& t : terms) {
        std::vector<Expr> factors;
        if (t.kind() == Kind::Product)
            factors = t.kids();
        else
            factors.push_back(t);
        std::optional<Expr> hit;
        std::vector<Expr> others;
        for (const Expr& f : factors) {
            if (f.kind() == Kind::Func && f.func() == FuncId::Atanh &&
                free_symbols(f.arg()).count("v") && !hit) {
                hit = f.arg();
            } else {
                others.push_back(f);
            }
        }
        if (hit) {
            if (coeff) return std::nullopt;  // two atanh terms: give up
            Expr c = Expr::prod(std::move(others));
            if (free_symbols(c).count("v")) return std::nullopt;
            coeff = c;
            arg = hit;
        } else {
            if (free_symbols(t).count("v")) return std::nullopt;
            rest.push_back(t);
        }
    }
    if (!coeff) return std::nullopt;
    auto ab = linear_in(*arg, "v");
    if (!ab) return std::nullopt;
    Expr d = Expr::sum(std::move(rest));
    Expr inner = tanh((ph - d) / *coeff);
    return (inner - ab->second) / ab->first;
}

}  // namespace

double Hamiltonian::p_at(double x, double v) const {
    return evaluate(p_of_v, {{"x", x}, {"v", v}}, params);
}

double Hamiltonian::v_at(double x, double pval) const {
    if (v_of_p) return evaluate(*v_of_p, {{"x", x}, {"p", pval}}, params);
    Interval vi = domain.interval("v");
    double lo = vi.lo, hi = vi.hi;
    auto fp = [&](double v) {
        return evaluate(p_of_v, {{"x", x}, {"v", v}}, params) - pval;
    };
    double flo = fp(lo), fhi = fp(hi);
    if (flo == 0) return lo;
    if (fhi == 0) return hi;
    if ((flo > 0) == (fhi > 0))
        throw Error(
            "momentum value not attained on the domain's v-interval");
    double v = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        double f = fp(v);
        if (std::abs(f) < 1e-12 * (1 + std::abs(pval))) return v;
        if ((f > 0) == (flo > 0)) {
            lo = v;
            flo = f;
        } else {
            hi = v;
            fhi = f;
        }
        double deriv = evaluate(dp_dv, {{"x", x}, {"v", v}}, params);
        double vn = deriv != 0 ? v - f / deriv
                               : std::numeric_limits<double>::quiet_NaN();
        if (!std::isfinite(vn) || vn <= lo || vn >= hi) vn = 0.5 * (lo + hi);
        if (std::abs(vn - v) < 1e-13 * (1 + std::abs(vn))) return vn;
        v = vn;
    }
    throw Error(
        "momentum inversion did not converge (Newton with bisection "
        "fallback)");
}

double Hamiltonian::value(double x, double pval) const {
    if (H) return evaluate(*H, {{"x", x}, {"p", pval}}, params);
    double v = v_at(x, pval);
    return pval * v - lagr(x, v);
}

Hamiltonian legendre(const Lagrangian& lag, const Domain& d,
                     const VerifyOptions& opts) {
    if (!lag.L.is_closed())
        throw Error("legendre requires a closed-form Lagrangian");
    const Expr& L = lag.L.expr();
    Expr p = differentiate(L, "v");
    Expr dp = differentiate(p, "v");
    NonvanishingResult reg = nonvanishing(dp, d, lag.params, 256, opts.seed);
    if (!reg.ok)
        throw VerifyError("legendre: d2L/dv2 " + reg.reason +
                          "; the Lagrangian is not regular on the requested "
                          "domain");

    Hamiltonian h;
    h.p_of_v = p;
    h.dp_dv = dp;
    h.domain = d;
    h.params = lag.params;
    h.lagr = lag.L;
    Expr ph = Expr::sym("p");
    if (auto ab = linear_in(p, "v")) {
        h.v_of_p = (ph - ab->second) / ab->first;
        h.branch_note = "momentum affine in v";
    } else if (auto inv = invert_atanh_pattern(p, ph)) {
        h.v_of_p = *inv;
        h.branch_note =
            "atanh-pattern inverse; valid on the branch where the atanh "
            "argument stays in (-1, 1)";
    } else {
        h.branch_note =
            "no table inverse; v(p) solved by safeguarded Newton on the "
            "domain's v-interval";
    }
    if (h.v_of_p) h.H = ph * *h.v_of_p - substitute(L, "v", *h.v_of_p);
    return h;
}

}  // namespace mforge
