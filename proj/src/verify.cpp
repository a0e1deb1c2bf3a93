#include "mforge/verify.hpp"

#include <cmath>
#include <random>

namespace mforge {

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Zero: return "zero";
        case Verdict::Nonzero: return "nonzero";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

namespace {

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

EvalPoint draw(const Domain& d, std::mt19937_64& rng) {
    EvalPoint p;
    for (const auto& [name, iv] : d.vars)
        p[name] = iv.lo + uniform01(rng) * iv.width();
    return p;
}

}  // namespace

ZeroTestResult zero_test(const Expr& e, const Domain& d, const Params& params,
                         const VerifyOptions& opts) {
    std::vector<Expr> terms;
    if (e.kind() == Kind::Sum)
        terms.assign(e.kids().begin(), e.kids().end());
    else
        terms.push_back(e);

    std::mt19937_64 rng(opts.seed);
    ZeroTestResult res;
    int draws = 0;
    const int max_draws = 10 * opts.samples;
    while (res.used < opts.samples && draws < max_draws) {
        ++draws;
        EvalPoint p = draw(d, rng);
        double total = 0, scale = 1;
        bool singular = false;
        for (const auto& t : terms) {
            try {
                double tv = evaluate(t, p, params, d.eps_sing);
                total += tv;
                scale += std::fabs(tv);
            } catch (const EvalError& err) {
                if (err.kind() == EvalError::Kind::Unbound) throw;
                singular = true;
                break;
            }
        }
        if (singular) {
            ++res.skipped;
            continue;
        }
        ++res.used;
        double scaled = std::fabs(total) / scale;
        if (scaled > res.max_scaled) res.max_scaled = scaled;
        if (scaled >= opts.tol) {
            res.verdict = Verdict::Nonzero;
            res.witness = p;
            res.witness_value = scaled;
            return res;
        }
    }
    if (res.used == 0)
        throw VerifyError(
            "zero test found no nonsingular sample points in the domain");
    res.verdict = res.used >= opts.samples ? Verdict::Zero : Verdict::Inconclusive;
    return res;
}

namespace {

void corner_points(const Domain& d, std::vector<EvalPoint>& out) {
    // All 2^k corners, capped for high-dimensional boxes.
    size_t k = d.vars.size();
    if (k == 0 || k > 10) return;
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
        EvalPoint p;
        size_t bit = 0;
        for (const auto& [name, iv] : d.vars) {
            p[name] = (mask >> bit) & 1 ? iv.hi : iv.lo;
            ++bit;
        }
        out.push_back(std::move(p));
    }
}

}  // namespace

NonvanishingResult nonvanishing(const Expr& e, const Domain& d,
                                const Params& params, int samples,
                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    NonvanishingResult res;
    res.min_abs = HUGE_VAL;

    std::vector<EvalPoint> probes;
    corner_points(d, probes);
    int draws = 0, used = 0;
    const int max_draws = 10 * samples;
    size_t probe_idx = 0;
    while ((used < samples || probe_idx < probes.size()) && draws < max_draws + static_cast<int>(probes.size())) {
        ++draws;
        bool is_probe = probe_idx < probes.size();
        EvalPoint p = is_probe ? probes[probe_idx++] : draw(d, rng);
        double v;
        try {
            v = evaluate(e, p, params, d.eps_sing);
        } catch (const EvalError& err) {
            if (err.kind() == EvalError::Kind::Unbound) throw;
            continue;  // singular probes do not count either way
        }
        if (!is_probe) ++used;
        double scaled = std::fabs(v);
        if (scaled < res.min_abs) res.min_abs = scaled;
        if (v == 0 || scaled < 1e-12) {
            res.ok = false;
            res.witness = p;
            res.reason = "value vanishes at a sampled point";
            return res;
        }
        int s = v > 0 ? 1 : -1;
        if (res.sign == 0) {
            res.sign = s;
        } else if (res.sign != s) {
            res.ok = false;
            res.witness = p;
            res.reason = "sign change across the domain";
            return res;
        }
    }
    if (used == 0) {
        res.ok = false;
        res.reason = "no nonsingular sample points in the domain";
        return res;
    }
    res.ok = true;
    return res;
}

}  // namespace mforge
