#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mforge/domain.hpp"
#include "mforge/expr.hpp"

namespace mforge {

struct VerifyOptions {
    int samples = 64;
    double tol = 1e-9;
    std::uint64_t seed = kDefaultSeed;
};

enum class Verdict { Zero, Nonzero, Inconclusive };

const char* verdict_name(Verdict v);

struct ZeroTestResult {
    Verdict verdict = Verdict::Inconclusive;
    std::optional<EvalPoint> witness;  // set when Nonzero
    double witness_value = 0;          // scaled residual at the witness
    double max_scaled = 0;             // largest scaled residual seen
    int used = 0;                      // nonsingular points evaluated
    int skipped = 0;                   // singular/out-of-domain draws skipped
    bool zero() const { return verdict == Verdict::Zero; }
};

// Probabilistic identity test: draws `samples` nonsingular points (skipping
// singular draws, up to 10x oversampling) and declares the expression zero
// iff at every point |e(p)| / (1 + sum_i |t_i(p)|) < tol, where t_i are the
// top-level additive terms of e. Fewer nonsingular points than requested
// yields Inconclusive; none at all is an error (empty working domain).
ZeroTestResult zero_test(const Expr& e, const Domain& d, const Params& params = {},
                         const VerifyOptions& opts = {});

struct NonvanishingResult {
    bool ok = false;
    int sign = 0;                      // common sign of all samples
    double min_abs = 0;                // smallest |value| observed
    std::optional<EvalPoint> witness;  // vanishing point / sign flip site
    std::string reason;
};

// Probabilistic non-vanishing certificate: `samples` random points plus the
// corner probes of the box must all evaluate to the same sign with no
// scaled near-zero value.
NonvanishingResult nonvanishing(const Expr& e, const Domain& d,
                                const Params& params = {}, int samples = 256,
                                std::uint64_t seed = kDefaultSeed);

}  // namespace mforge
