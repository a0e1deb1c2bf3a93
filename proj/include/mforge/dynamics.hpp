#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mforge/field.hpp"

namespace mforge {

enum class Method { Rk4, Rk45 };

struct IntegratorConfig {
    Method method = Method::Rk4;
    double step = 1e-3;      // fixed-step size (rk4)
    double abs_tol = 1e-10;  // adaptive tolerances (rk45)
    double rel_tol = 1e-10;
    double t0 = 0.0;
    double t_end = 1.0;
};

struct Trajectory {
    std::vector<std::string> names;  // state coordinate names, t excluded
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::string method;
    double step = 0;         // uniform step when rk4 (final step may clamp)
    bool truncated = false;  // stopped at a domain exit, never extrapolated

    EvalPoint point_at(std::size_t i) const;
};

// Integrate the flow of a field of the form ∂t + Σ f_i ∂x_i from the given
// state (aligned with the non-t coordinates). Fixed-step RK4 or adaptive
// Dormand-Prince RK45. Stops early, flagging truncation, as soon as a step
// leaves `dom` or hits a singular evaluation; throws when the initial
// state is already outside.
Trajectory integrate(const VectorField& field, const std::vector<double>& x0,
                     const IntegratorConfig& cfg, const Domain& dom,
                     const Params& params = {});

struct ConservationDrift {
    double max_rel = 0;
    std::vector<double> series;  // |Q(t) - Q(0)| / max(1, |Q(0)|) per step
};

// Drift of the would-be conserved quantity Q along the trajectory.
ConservationDrift conservation_drift(const Trajectory& traj, const Expr& q,
                                     const Params& params = {});

// CSV export: header t,<names>[,Q], one row per stored step, 17 significant
// digits. Q column present when q is non-null.
void export_csv(const Trajectory& traj, std::ostream& os,
                const Expr* q = nullptr, const Params& params = {});

}  // namespace mforge
