#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mforge/field.hpp"
#include "mforge/verify.hpp"

using namespace mforge;

namespace {

const Params kKA = {{"k", 1.0}, {"a", 1.0}};

Domain box2() {
    Domain d;
    d.with("x", -2, 2).with("v", -2, 2);
    return d;
}

Sode oscillator1(Params p = kKA) {
    return Sode("osc1", parse("(k*v^2 - a^2)*x/(1 + k*x^2)"), p, box2());
}

Sode oscillator2(Params p = kKA) {
    return Sode("osc2", parse("-k*x*v^2/(1 + k*x^2) - a^2*x/(1 + k*x^2)^3"),
                p, box2());
}

Sode harmonic_sode() {
    return Sode("harmonic", parse("-a^2*x"), {{"a", 1.0}}, box2());
}

void check_zero(const Expr& e, const Domain& d, const Params& params) {
    ZeroTestResult r = zero_test(e, d, params);
    CAPTURE(render(e));
    CHECK(r.verdict == Verdict::Zero);
}

}  // namespace

TEST_CASE("sode_to_field: components of the three stock systems") {
    VectorField g1 = sode_to_field(oscillator1());
    CHECK(g1.coords == std::vector<std::string>{"x", "v"});
    CHECK(g1.component("x") == Expr::sym("v"));
    CHECK(g1.component("v") == parse("x*(k*v^2 - a^2)/(1 + k*x^2)"));

    VectorField gh = sode_to_field(harmonic_sode());
    CHECK(gh.component("v") == parse("-a^2*x"));

    VectorField g2 = sode_to_field(oscillator2());
    CHECK(g2.component("v") ==
          parse("-k*x*v^2/(1 + k*x^2) - a^2*x/(1 + k*x^2)^3"));

    VectorField ext = sode_to_field_extended(oscillator1());
    CHECK(ext.coords == std::vector<std::string>{"t", "x", "v"});
    CHECK(ext.component("t") == Expr::num(1));
    CHECK(ext.component("x") == Expr::sym("v"));
}

TEST_CASE("sode: autonomy invariant rejects stray symbols") {
    CHECK_THROWS_AS(Sode("bad", parse("x + y"), kKA, box2()), Error);
    CHECK_NOTHROW(Sode("ok", parse("k*x + a*v"), kKA, box2()));
}

TEST_CASE("vector field: apply is the directional derivative") {
    VectorField g = sode_to_field(harmonic_sode());
    // Γ(x^2/2) = x v.
    CHECK(g.apply(parse("x^2/2")) == parse("x*v"));
    CHECK_THROWS_AS(VectorField({"x"}, {Expr::sym("x"), Expr::sym("v")}),
                    Error);
}

TEST_CASE("divergence: stock values and chart requirement") {
    CHECK(divergence(sode_to_field(oscillator1())) ==
          parse("2*k*x*v/(1 + k*x^2)"));
    CHECK(divergence(sode_to_field(harmonic_sode())) == Expr::num(0));
    CHECK(divergence(sode_to_field(oscillator2())) ==
          parse("-2*k*x*v/(1 + k*x^2)"));
    CHECK_THROWS_AS(divergence(sode_to_field_extended(oscillator1())), Error);
}

TEST_CASE("divergence: product rule div(fX) = X(f) + f div X") {
    VectorField x = sode_to_field(oscillator1());
    Expr f = parse("sin(x) + v^2");
    std::vector<Expr> scaled;
    for (const Expr& c : x.comps) scaled.push_back(f * c);
    VectorField fx(x.coords, scaled);
    Expr resid = divergence(fx) - (x.apply(f) + f * divergence(x));
    check_zero(resid, box2(), kKA);
}

TEST_CASE("lie_bracket: basic identities") {
    VectorField ddx({"x"}, {Expr::num(1)});
    VectorField xddx({"x"}, {Expr::sym("x")});
    VectorField b = lie_bracket(ddx, xddx);
    CHECK(b.component("x") == Expr::num(1));

    VectorField g = sode_to_field(oscillator1());
    VectorField self = lie_bracket(g, g);
    for (const Expr& c : self.comps) CHECK(c == Expr::num(0));

    VectorField other({"q", "p"}, {Expr::sym("p"), Expr::sym("q")});
    CHECK_THROWS_AS(lie_bracket(g, other), Error);
}

TEST_CASE("lie_bracket: antisymmetry and bilinearity on random fields") {
    Domain d = box2();
    VectorField x({"x", "v"}, {parse("x*v"), parse("cos(x)")});
    VectorField z({"x", "v"}, {parse("v^2"), parse("x + v")});
    VectorField w({"x", "v"}, {parse("exp(x/4)"), parse("x*v^2")});

    VectorField xz = lie_bracket(x, z);
    VectorField zx = lie_bracket(z, x);
    for (std::size_t i = 0; i < xz.comps.size(); ++i)
        check_zero(xz.comps[i] + zx.comps[i], d, {});

    double ca = 0.75, cb = -1.5;
    std::vector<Expr> combo;
    for (std::size_t i = 0; i < x.comps.size(); ++i)
        combo.push_back(Expr::num(ca) * x.comps[i] +
                        Expr::num(cb) * z.comps[i]);
    VectorField lin = lie_bracket(VectorField(x.coords, combo), w);
    VectorField xw = lie_bracket(x, w);
    VectorField zw = lie_bracket(z, w);
    for (std::size_t i = 0; i < lin.comps.size(); ++i)
        check_zero(lin.comps[i] - (Expr::num(ca) * xw.comps[i] +
                                   Expr::num(cb) * zw.comps[i]),
                   d, {});
}

TEST_CASE("lie_bracket: Jacobi identity on stock fields") {
    Domain d = box2();
    VectorField x = sode_to_field(oscillator1());
    VectorField z = sode_to_field(oscillator2());
    VectorField w({"x", "v"}, {parse("sin(x)"), parse("v^2")});

    auto jac = [&](const VectorField& p, const VectorField& q,
                   const VectorField& r) {
        return lie_bracket(p, lie_bracket(q, r));
    };
    VectorField j1 = jac(x, z, w);
    VectorField j2 = jac(z, w, x);
    VectorField j3 = jac(w, x, z);
    for (std::size_t i = 0; i < j1.comps.size(); ++i)
        check_zero(j1.comps[i] + j2.comps[i] + j3.comps[i], d, kKA);
}

TEST_CASE("lie_bracket: covering symmetry commutes with the covering flow") {
    // X̄ = ∂t + v∂x + F∂v + (F/v)∂w and Y = e^w(∂x + (F/v)∂v + (F/v^2)∂w).
    Expr f = parse("(k*v^2 - a^2)*x/(1 + k*x^2)");
    Expr ew = exp(Expr::sym("w"));
    VectorField xbar({"t", "x", "v", "w"},
                     {Expr::num(1), Expr::sym("v"), f, f / Expr::sym("v")});
    VectorField y({"t", "x", "v", "w"},
                  {Expr::num(0), ew, ew * f / Expr::sym("v"),
                   ew * f / (Expr::sym("v") * Expr::sym("v"))});
    Domain d;
    d.with("x", -2, 2).with("v", 0.3, 2).with("w", -1, 1);
    VectorField b = lie_bracket(y, xbar);
    for (const Expr& c : b.comps) check_zero(c, d, kKA);
}

TEST_CASE("prolong: time translation is inert") {
    PointSymmetryAnsatz tt{Expr::num(1), {"x", "v"},
                           {Expr::num(0), Expr::num(0)}};
    VectorField pr = prolong(tt, 3);
    CHECK(pr.component("t") == Expr::num(1));
    for (const std::string& c : pr.coords)
        if (c != "t") CHECK(pr.component(c) == Expr::num(0));
}

TEST_CASE("prolong: scaling field gains the first jet coordinate") {
    PointSymmetryAnsatz sc{Expr::num(0), {"x"}, {Expr::sym("x")}};
    VectorField pr = prolong(sc, 1);
    CHECK(pr.coords == std::vector<std::string>{"t", "x", "x_1"});
    CHECK(pr.component("x") == Expr::sym("x"));
    CHECK(pr.component("x_1") == Expr::sym("x_1"));
    CHECK(pr.component("t") == Expr::num(0));
}

TEST_CASE("prolong: order-k field projects onto order k-1") {
    PointSymmetryAnsatz an{parse("t*x"), {"x"}, {parse("x^2 + t")}};
    VectorField p1 = prolong(an, 1);
    VectorField p2 = prolong(an, 2);
    for (const std::string& c : p1.coords)
        CHECK(p2.component(c) == p1.component(c));
    CHECK(p2.coords.size() == p1.coords.size() + 1);
}

TEST_CASE("prolong: hand-checked first coefficient") {
    // xi = t, phi = x: phi^(1) = D(x) - x_1 D(t) = x_1 - x_1 = 0.
    PointSymmetryAnsatz an{Expr::sym("t"), {"x"}, {Expr::sym("x")}};
    VectorField pr = prolong(an, 1);
    CHECK(pr.component("x_1") == Expr::num(0));
}

TEST_CASE("total_derivative: first integral, clock, and derivation rule") {
    Sode s = oscillator1();
    Expr i = parse("(1 + k*x^2)/(k*v^2 - a^2)");
    CHECK(total_derivative(i, s) == Expr::num(0));
    CHECK(total_derivative(Expr::sym("t"), s) == Expr::num(1));

    Expr e1 = parse("x*v + t");
    Expr e2 = parse("cos(x) + v^3");
    Expr resid = total_derivative(e1 * e2, s) -
                 (total_derivative(e1, s) * e2 + e1 * total_derivative(e2, s));
    Domain d = box2().with("t", Interval{0.0, 2.0});
    check_zero(resid, d, kKA);
}
