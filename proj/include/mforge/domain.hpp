#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mforge/errors.hpp"
#include "mforge/expr.hpp"

namespace mforge {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

struct Interval {
    double lo = 0;
    double hi = 0;

    Interval() = default;
    Interval(double l, double h) : lo(l), hi(h) {
        if (!(lo <= hi)) throw Error("interval with lo > hi");
    }
    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

// Axis-aligned box over named variables, plus the singularity guard used
// by evaluation on this domain. Degenerate intervals [a, a] are allowed.
struct Domain {
    std::map<std::string, Interval> vars;
    double eps_sing = 1e-9;

    Domain& with(const std::string& name, double lo, double hi) {
        vars[name] = Interval(lo, hi);
        return *this;
    }

    Domain with(const std::string& name, Interval iv) const {
        Domain out = *this;
        out.vars[name] = iv;
        return out;
    }

    bool has(const std::string& name) const { return vars.count(name) != 0; }

    const Interval& interval(const std::string& name) const {
        auto it = vars.find(name);
        if (it == vars.end()) throw Error("domain has no variable '" + name + "'");
        return it->second;
    }

    bool contains(const EvalPoint& p) const {
        for (const auto& [name, iv] : vars) {
            auto it = p.find(name);
            if (it == p.end() || !iv.contains(it->second)) return false;
        }
        return true;
    }

    // Intersection over the union of variable sets; throws on empty overlap
    // of a shared variable.
    static Domain intersect(const Domain& a, const Domain& b) {
        Domain out = a;
        out.eps_sing = std::min(a.eps_sing, b.eps_sing);
        for (const auto& [name, iv] : b.vars) {
            auto it = out.vars.find(name);
            if (it == out.vars.end()) {
                out.vars[name] = iv;
            } else {
                double lo = std::max(it->second.lo, iv.lo);
                double hi = std::min(it->second.hi, iv.hi);
                if (lo > hi)
                    throw VerifyError("empty domain intersection for '" + name + "'");
                it->second = Interval(lo, hi);
            }
        }
        return out;
    }
};

// Deterministic uniform sampling (seeded); same seed, same points.
std::vector<EvalPoint> sample_points(const Domain& d, int n,
                                     std::uint64_t seed = kDefaultSeed);

}  // namespace mforge
