#include "mforge/multiplier.hpp"

#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace mforge {

namespace {

// Random points in `dom`, used to sample the range of a first integral.
std::vector<EvalPoint> domain_samples(const Domain& dom, std::size_t n,
                                      std::uint64_t seed) {
    return sample_points(dom, n, seed);
}

}  // namespace

Expr multiplier_residual(const Sode& s, const Expr& mu) {
    Expr v = Expr::sym("v");
    Expr mu_f = mu * s.force;
    return v * differentiate(mu, "x") + differentiate(mu_f, "v");
}

Expr integral_residual(const Sode& s, const Expr& i) {
    return sode_to_field(s).apply(i);
}

Multiplier verify_multiplier(const Sode& s, const Expr& mu,
                             std::optional<Domain> dom,
                             const VerifyOptions& opts) {
    Domain d = dom ? *dom : s.domain;
    Multiplier m;
    m.expr = mu;
    m.domain = d;
    m.residual = multiplier_residual(s, mu);
    m.residual_check = zero_test(m.residual, d, s.params, opts);
    m.certificate = nonvanishing(mu, d, s.params, 256, opts.seed);
    return m;
}

FirstIntegral verify_integral(const Sode& s, const Expr& i,
                              std::optional<Domain> dom,
                              const VerifyOptions& opts) {
    Domain d = dom ? *dom : s.domain;
    FirstIntegral out;
    out.expr = i;
    out.domain = d;
    out.residual = integral_residual(s, i);
    out.verified = zero_test(out.residual, d, s.params, opts);
    return out;
}

FirstIntegral integral_from_ratio(const Multiplier& mu1, const Multiplier& mu2,
                                  const Sode& s, const VerifyOptions& opts) {
    if (!mu1.verified() || !mu2.verified())
        throw VerifyError(
            "integral_from_ratio requires verified multipliers; run "
            "verify_multiplier first");
    Domain d = Domain::intersect(mu1.domain, mu2.domain);
    NonvanishingResult denom_ok =
        nonvanishing(mu2.expr, d, s.params, 256, opts.seed);
    if (!denom_ok.ok)
        throw VerifyError("integral_from_ratio: denominator multiplier " +
                          denom_ok.reason + " on the intersected domain");
    return verify_integral(s, mu1.expr / mu2.expr, d, opts);
}

Multiplier scale_multiplier(const Multiplier& mu, const Expr& g,
                            const FirstIntegral& i, const Sode& s,
                            const VerifyOptions& opts) {
    std::set<std::string> vars = free_symbols(g);
    for (const auto& [name, value] : s.params) vars.erase(name);
    if (vars.size() > 1)
        throw VerifyError(
            "scale_multiplier: G must depend on a single placeholder symbol");

    Expr scaled = mu.expr;
    if (!vars.empty()) {
        const std::string& u = *vars.begin();
        // Certify G along the sampled range of I before composing.
        for (const auto& p : domain_samples(mu.domain, 256, opts.seed)) {
            double ival;
            try {
                ival = evaluate(i.expr, p, s.params);
            } catch (const EvalError&) {
                continue;
            }
            double gval;
            try {
                gval = evaluate(g, {{u, ival}}, s.params);
            } catch (const EvalError&) {
                continue;
            }
            if (std::abs(gval) < 1e-12)
                throw VerifyError("scale_multiplier: G vanishes at sampled "
                                  "integral value " +
                                  std::to_string(ival));
        }
        scaled = substitute(g, u, i.expr) * mu.expr;
    } else {
        // Constant G: still reject a vanishing constant.
        double gval = evaluate(g, {}, s.params);
        if (std::abs(gval) < 1e-12)
            throw VerifyError("scale_multiplier: constant G is zero");
        scaled = g * mu.expr;
    }
    return verify_multiplier(s, scaled, mu.domain, opts);
}

}  // namespace mforge
