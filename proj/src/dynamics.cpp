#include "mforge/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mforge {

EvalPoint Trajectory::point_at(std::size_t i) const {
    EvalPoint p;
    p["t"] = times.at(i);
    for (std::size_t j = 0; j < names.size(); ++j) p[names[j]] = states.at(i)[j];
    return p;
}

namespace {

struct Rhs {
    const std::vector<std::string>& names;
    const std::vector<Expr>& comps;  // aligned with names
    const Params& params;

    std::vector<double> operator()(double t,
                                   const std::vector<double>& y) const {
        EvalPoint p;
        p["t"] = t;
        for (std::size_t i = 0; i < names.size(); ++i) p[names[i]] = y[i];
        std::vector<double> dy(names.size());
        for (std::size_t i = 0; i < names.size(); ++i)
            dy[i] = evaluate(comps[i], p, params);
        return dy;
    }
};

std::vector<double> axpy(const std::vector<double>& y, double a,
                         const std::vector<double>& k) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i] + a * k[i];
    return out;
}

bool in_domain(const Domain& dom, const std::vector<std::string>& names,
               const std::vector<double>& y) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!dom.has(names[i])) continue;
        if (!dom.interval(names[i]).contains(y[i])) return false;
    }
    return true;
}

std::vector<double> rk4_step(const Rhs& f, double t,
                             const std::vector<double>& y, double h) {
    auto k1 = f(t, y);
    auto k2 = f(t + h / 2, axpy(y, h / 2, k1));
    auto k3 = f(t + h / 2, axpy(y, h / 2, k2));
    auto k4 = f(t + h, axpy(y, h, k3));
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = y[i] + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return out;
}

// Dormand-Prince 5(4) pair.
const double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
const double kC[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
const double kB5[7] = {35.0 / 384,      0,           500.0 / 1113, 125.0 / 192,
                       -2187.0 / 6784,  11.0 / 84,   0};
const double kB4[7] = {5179.0 / 57600,  0,           7571.0 / 16695,
                       393.0 / 640,     -92097.0 / 339200,
                       187.0 / 2100,    1.0 / 40};

}  // namespace

Trajectory integrate(const VectorField& field, const std::vector<double>& x0,
                     const IntegratorConfig& cfg, const Domain& dom,
                     const Params& params) {
    if (field.coords.empty() || field.coords.front() != "t")
        throw Error("integrate expects a field whose first coordinate is t");
    if (!(field.comps.front() == Expr::num(1)))
        throw Error("integrate expects a unit time component");
    std::vector<std::string> names(field.coords.begin() + 1,
                                   field.coords.end());
    std::vector<Expr> comps(field.comps.begin() + 1, field.comps.end());
    if (x0.size() != names.size())
        throw Error("initial state size does not match the field chart");
    if (!in_domain(dom, names, x0))
        throw Error("initial state outside the domain");
    if (cfg.t_end <= cfg.t0) throw Error("t_end must exceed t0");

    Rhs f{names, comps, params};
    Trajectory traj;
    traj.names = names;
    traj.times.push_back(cfg.t0);
    traj.states.push_back(x0);

    if (cfg.method == Method::Rk4) {
        if (!(cfg.step > 0)) throw Error("step must be positive");
        traj.method = "rk4";
        traj.step = cfg.step;
        double t = cfg.t0;
        std::vector<double> y = x0;
        while (t < cfg.t_end - 1e-12 * (1 + std::abs(cfg.t_end))) {
            double h = std::min(cfg.step, cfg.t_end - t);
            std::vector<double> yn;
            try {
                yn = rk4_step(f, t, y, h);
            } catch (const EvalError&) {
                traj.truncated = true;
                break;
            }
            if (!in_domain(dom, names, yn)) {
                traj.truncated = true;
                break;
            }
            t += h;
            y = yn;
            traj.times.push_back(t);
            traj.states.push_back(y);
        }
        return traj;
    }

    if (!(cfg.abs_tol > 0) || !(cfg.rel_tol > 0))
        throw Error("tolerances must be positive");
    traj.method = "rk45";
    double t = cfg.t0;
    std::vector<double> y = x0;
    double h = std::min(1e-2, cfg.t_end - cfg.t0);
    const double h_min = 1e-14 * (cfg.t_end - cfg.t0);
    while (t < cfg.t_end - 1e-12 * (1 + std::abs(cfg.t_end))) {
        h = std::min(h, cfg.t_end - t);
        std::vector<std::vector<double>> k(7);
        bool singular = false;
        try {
            for (int s = 0; s < 7; ++s) {
                std::vector<double> ys = y;
                for (int j = 0; j < s; ++j)
                    if (kA[s][j] != 0) ys = axpy(ys, h * kA[s][j], k[j]);
                k[s] = f(t + kC[s] * h, ys);
            }
        } catch (const EvalError&) {
            singular = true;
        }
        if (!singular) {
            std::vector<double> y5(y.size()), y4(y.size());
            double err = 0;
            for (std::size_t i = 0; i < y.size(); ++i) {
                double d5 = 0, d4 = 0;
                for (int s = 0; s < 7; ++s) {
                    d5 += kB5[s] * k[s][i];
                    d4 += kB4[s] * k[s][i];
                }
                y5[i] = y[i] + h * d5;
                y4[i] = y[i] + h * d4;
                double sc = cfg.abs_tol +
                            cfg.rel_tol * std::max(std::abs(y[i]),
                                                   std::abs(y5[i]));
                double e = (y5[i] - y4[i]) / sc;
                err += e * e;
            }
            err = std::sqrt(err / y.size());
            if (err <= 1.0) {
                if (!in_domain(dom, names, y5)) {
                    traj.truncated = true;
                    break;
                }
                t += h;
                y = y5;
                traj.times.push_back(t);
                traj.states.push_back(y);
            }
            double fac = 0.9 * std::pow(err > 0 ? err : 1e-10, -0.2);
            h *= std::min(5.0, std::max(0.2, fac));
        } else {
            h *= 0.5;
        }
        if (h < h_min) {
            if (singular) {
                traj.truncated = true;
                break;
            }
            throw Error("adaptive step size underflow");
        }
    }
    return traj;
}

ConservationDrift conservation_drift(const Trajectory& traj, const Expr& q,
                                     const Params& params) {
    ConservationDrift out;
    if (traj.times.empty()) return out;
    double q0 = evaluate(q, traj.point_at(0), params);
    double scale = std::max(1.0, std::abs(q0));
    out.series.reserve(traj.times.size());
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        double qi = evaluate(q, traj.point_at(i), params);
        double d = std::abs(qi - q0) / scale;
        out.series.push_back(d);
        out.max_rel = std::max(out.max_rel, d);
    }
    return out;
}

void export_csv(const Trajectory& traj, std::ostream& os, const Expr* q,
                const Params& params) {
    os << "t";
    for (const auto& n : traj.names) os << "," << n;
    if (q) os << ",Q";
    os << "\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        put(traj.times[i]);
        for (double v : traj.states[i]) {
            os << ",";
            put(v);
        }
        if (q) {
            os << ",";
            put(evaluate(*q, traj.point_at(i), params));
        }
        os << "\n";
    }
}

}  // namespace mforge
