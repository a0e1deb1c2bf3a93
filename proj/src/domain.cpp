#include "mforge/domain.hpp"

#include <random>

namespace mforge {

namespace {

// 53-bit uniform in [0, 1); fixed construction so results are identical
// across platforms for a given seed.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::vector<EvalPoint> sample_points(const Domain& d, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<EvalPoint> out;
    out.reserve(static_cast<size_t>(n > 0 ? n : 0));
    for (int i = 0; i < n; ++i) {
        EvalPoint p;
        for (const auto& [name, iv] : d.vars)
            p[name] = iv.lo + uniform01(rng) * iv.width();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace mforge
