#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mforge/dynamics.hpp"
#include "mforge/nonlocal.hpp"

using namespace mforge;

namespace {

const Params kKA = {{"k", 1.0}, {"a", 1.0}};

Domain box2() {
    Domain d;
    d.with("x", -2, 2).with("v", -2, 2);
    return d;
}

Sode harmonic(double a, Domain d) {
    return Sode("harmonic", parse("-a^2*x"), {{"a", a}}, d);
}

Sode oscillator1() {
    return Sode("osc1", parse("(k*v^2 - a^2)*x/(1 + k*x^2)"), kKA, box2());
}

IntegratorConfig rk4_cfg(double h, double t_end) {
    IntegratorConfig cfg;
    cfg.method = Method::Rk4;
    cfg.step = h;
    cfg.t_end = t_end;
    return cfg;
}

}  // namespace

TEST_CASE("integrate rk4: harmonic oscillator closes after one period") {
    Sode s = harmonic(1.0, box2());
    double period = 2 * std::acos(-1.0);
    Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                              rk4_cfg(1e-3, period), s.domain, s.params);
    REQUIRE(!tr.truncated);
    CHECK(tr.method == "rk4");
    CHECK(tr.times.back() == doctest::Approx(period).epsilon(1e-12));
    CHECK(std::abs(tr.states.back()[0] - 1.0) < 1e-8);
    CHECK(std::abs(tr.states.back()[1]) < 1e-8);
}

TEST_CASE("integrate rk4: final step clamps to t_end") {
    Sode s = harmonic(1.0, box2());
    Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                              rk4_cfg(1e-2, 0.0105), s.domain, s.params);
    REQUIRE(tr.times.size() == 3);
    CHECK(tr.times[1] == doctest::Approx(0.01));
    CHECK(tr.times.back() == doctest::Approx(0.0105));
}

TEST_CASE("integrate: domain exit truncates instead of extrapolating") {
    Sode s("drift", Expr::num(0), {}, box2());
    Trajectory tr = integrate(sode_to_field_extended(s), {0.0, 1.0},
                              rk4_cfg(0.1, 10.0), s.domain, s.params);
    CHECK(tr.truncated);
    CHECK(tr.times.back() >= 1.9);
    CHECK(tr.times.back() <= 2.0 + 1e-12);
    for (const auto& st : tr.states) CHECK(std::abs(st[0]) <= 2.0);
}

TEST_CASE("integrate: precondition errors") {
    Sode s = harmonic(1.0, box2());
    VectorField f = sode_to_field_extended(s);
    // Spatial chart without the time coordinate.
    CHECK_THROWS_AS(integrate(sode_to_field(s), {1.0, 0.0}, rk4_cfg(1e-2, 1.0),
                              s.domain, s.params),
                    Error);
    CHECK_THROWS_AS(integrate(f, {1.0}, rk4_cfg(1e-2, 1.0), s.domain, s.params),
                    Error);
    CHECK_THROWS_AS(integrate(f, {3.0, 0.0}, rk4_cfg(1e-2, 1.0), s.domain,
                              s.params),
                    Error);
    CHECK_THROWS_AS(integrate(f, {1.0, 0.0}, rk4_cfg(-1e-2, 1.0), s.domain,
                              s.params),
                    Error);
    CHECK_THROWS_AS(integrate(f, {1.0, 0.0}, rk4_cfg(1e-2, 0.0), s.domain,
                              s.params),
                    Error);
}

TEST_CASE("conservation_drift: first integrals stay flat") {
    SUBCASE("harmonic energy") {
        Sode s = harmonic(1.0, box2());
        Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                                  rk4_cfg(1e-3, 10.0), s.domain, s.params);
        ConservationDrift d =
            conservation_drift(tr, parse("a^2*x^2 + v^2"), s.params);
        CHECK(d.max_rel < 1e-10);
        CHECK(d.series.size() == tr.times.size());
        CHECK(d.series.front() == 0.0);
    }
    SUBCASE("nonlinear oscillator ratio integral") {
        Sode s = oscillator1();
        Trajectory tr = integrate(sode_to_field_extended(s), {0.5, 0.0},
                                  rk4_cfg(1e-3, 20.0), s.domain, s.params);
        REQUIRE(!tr.truncated);
        Expr q = parse("(1 + k*x^2)/(k*v^2 - a^2)");
        CHECK(conservation_drift(tr, q, s.params).max_rel < 1e-8);
    }
    SUBCASE("variable-mass oscillator integral") {
        Sode s("osc2", parse("-k*x*v^2/(1 + k*x^2) - a^2*x/(1 + k*x^2)^3"),
               kKA, box2());
        Trajectory tr = integrate(sode_to_field_extended(s), {0.3, 0.1},
                                  rk4_cfg(1e-3, 20.0), s.domain, s.params);
        REQUIRE(!tr.truncated);
        Expr q = parse("(k*(1 + k*x^2)^2*v^2 - a^2)/(1 + k*x^2)");
        CHECK(conservation_drift(tr, q, s.params).max_rel < 1e-8);
    }
    SUBCASE("constant quantity has zero drift") {
        Sode s = harmonic(1.0, box2());
        Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                                  rk4_cfg(1e-2, 1.0), s.domain, s.params);
        CHECK(conservation_drift(tr, parse("a^2"), s.params).max_rel == 0.0);
    }
}

TEST_CASE("conservation_drift: Lagrangian energy along the flow") {
    Sode s = oscillator1();
    Expr lag = parse("(v^2 - a^2*x^2)/(2*(1 + k*x^2))");
    Expr energy = Expr::sym("v") * differentiate(lag, "v") - lag;
    Trajectory tr = integrate(sode_to_field_extended(s), {0.5, 0.0},
                              rk4_cfg(1e-3, 20.0), s.domain, s.params);
    CHECK(conservation_drift(tr, energy, s.params).max_rel < 1e-8);
}

TEST_CASE("integrate rk4: fourth-order convergence on the exact solution") {
    Domain d;
    d.with("x", -2, 2).with("v", -4, 4);
    Sode s = harmonic(3.0, d);
    const double t_end = 6.4;
    auto err = [&](double h) {
        Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                                  rk4_cfg(h, t_end), s.domain, s.params);
        REQUIRE(!tr.truncated);
        double ex = std::cos(3 * t_end);
        double ev = -3 * std::sin(3 * t_end);
        return std::hypot(tr.states.back()[0] - ex, tr.states.back()[1] - ev);
    };
    double e1 = err(4e-3), e2 = err(2e-3), e3 = err(1e-3);
    CAPTURE(e1);
    CAPTURE(e2);
    CAPTURE(e3);
    CHECK(e1 / e2 > 12.0);
    CHECK(e1 / e2 < 20.0);
    CHECK(e2 / e3 > 12.0);
    CHECK(e2 / e3 < 20.0);
}

TEST_CASE("integrate: covering flow projects onto the base flow") {
    Sode s = harmonic(1.0, box2());
    ExtendedSystem es = extend(s, Expr::num(1), Interval(-5.0, 5.0));
    Trajectory base = integrate(sode_to_field_extended(s), {1.0, 0.0},
                                rk4_cfg(1e-3, 1.0), s.domain, s.params);
    Trajectory cov = integrate(es.field, {1.0, 0.0, 0.25}, rk4_cfg(1e-3, 1.0),
                               es.domain, s.params);
    REQUIRE(base.times.size() == cov.times.size());
    for (std::size_t i = 0; i < base.times.size(); ++i) {
        CHECK(std::abs(base.states[i][0] - cov.states[i][0]) < 1e-12);
        CHECK(std::abs(base.states[i][1] - cov.states[i][1]) < 1e-12);
    }
    // dw/dt = -a^2 x integrates to w0 - a sin(a t) from x(0) = 1.
    CHECK(std::abs(cov.states.back()[2] - (0.25 - std::sin(1.0))) < 1e-8);
}

TEST_CASE("integrate rk45: adaptive run matches the closed orbit") {
    Sode s = harmonic(1.0, box2());
    double period = 2 * std::acos(-1.0);
    IntegratorConfig cfg;
    cfg.method = Method::Rk45;
    cfg.abs_tol = 1e-10;
    cfg.rel_tol = 1e-10;
    cfg.t_end = period;
    Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0}, cfg,
                              s.domain, s.params);
    REQUIRE(!tr.truncated);
    CHECK(tr.method == "rk45");
    CHECK(tr.times.size() < 2000);
    CHECK(std::abs(tr.states.back()[0] - 1.0) < 1e-7);
    CHECK(std::abs(tr.states.back()[1]) < 1e-7);
    CHECK(conservation_drift(tr, parse("a^2*x^2 + v^2"), s.params).max_rel <
          1e-7);
}

TEST_CASE("export_csv: header, rows, and conserved column") {
    Sode s = harmonic(1.0, box2());
    Trajectory tr = integrate(sode_to_field_extended(s), {1.0, 0.0},
                              rk4_cfg(0.5, 1.5), s.domain, s.params);
    REQUIRE(tr.times.size() == 4);

    Expr q = parse("a^2*x^2 + v^2");
    std::ostringstream with_q;
    export_csv(tr, with_q, &q, s.params);
    std::istringstream lines(with_q.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "t,x,v,Q");
    std::getline(lines, line);
    CHECK(line == "0,1,0,1");
    int rows = 1;
    while (std::getline(lines, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);

    std::ostringstream without_q;
    export_csv(tr, without_q, nullptr, s.params);
    CHECK(without_q.str().substr(0, 6) == "t,x,v\n");
}
