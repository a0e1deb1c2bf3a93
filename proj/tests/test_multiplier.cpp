#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mforge/multiplier.hpp"

using namespace mforge;

namespace {

const Params kKA = {{"k", 1.0}, {"a", 1.0}};

Domain box2() {
    Domain d;
    d.with("x", -2, 2).with("v", -2, 2);
    return d;
}

// v-interval on which k*v^2 - a^2 keeps one sign (k = a = 1).
Domain inner1() {
    Domain d;
    d.with("x", -2, 2).with("v", -0.99, 0.99);
    return d;
}

// v-interval on which k*(1 + k*x^2)^2*v^2 - a^2 keeps one sign (k = a = 1).
Domain narrow2() {
    Domain d;
    d.with("x", -2, 2).with("v", -0.15, 0.15);
    return d;
}

Sode oscillator1(Params p = kKA) {
    return Sode("osc1", parse("(k*v^2 - a^2)*x/(1 + k*x^2)"), p, box2());
}

Sode oscillator2(Params p = kKA) {
    return Sode("osc2", parse("-k*x*v^2/(1 + k*x^2) - a^2*x/(1 + k*x^2)^3"),
                p, box2());
}

Sode harmonic_sode(double a = 1.0) {
    return Sode("harmonic", parse("-a^2*x"), {{"a", a}}, box2());
}

void check_zero(const Expr& e, const Domain& d, const Params& params) {
    ZeroTestResult r = zero_test(e, d, params);
    CAPTURE(render(e));
    CHECK(r.verdict == Verdict::Zero);
}

}  // namespace

TEST_CASE("multiplier_residual: closed forms") {
    Sode s = oscillator1();
    // For mu = 1 the residual collapses to dF/dv.
    CHECK(multiplier_residual(s, Expr::num(1)) == differentiate(s.force, "v"));
    // mu*F = x/(1 + k*x^2) is v-free, so the residual vanishes identically.
    CHECK(multiplier_residual(s, parse("1/(k*v^2 - a^2)")) == Expr::num(0));
}

TEST_CASE("verify_multiplier: oscillator 1 pair") {
    Sode s = oscillator1();

    Multiplier m1 = verify_multiplier(s, parse("1/(1 + k*x^2)"));
    CHECK(m1.verified());
    CHECK(m1.certificate.sign == 1);
    CHECK(m1.residual_check.used >= 64);

    Multiplier m2 = verify_multiplier(s, parse("1/(k*v^2 - a^2)"), inner1());
    CHECK(m2.verified());
    CHECK(m2.certificate.sign == -1);

    Multiplier bad = verify_multiplier(s, Expr::num(1));
    CHECK_FALSE(bad.verified());
    CHECK(bad.residual_check.verdict == Verdict::Nonzero);
    CHECK(bad.residual_check.witness.has_value());
    CHECK(bad.certificate.ok);  // 1 never vanishes; only the residual fails
}

TEST_CASE("verify_multiplier: oscillator 2 pair") {
    Sode s = oscillator2();

    Multiplier m1 = verify_multiplier(s, parse("1 + k*x^2"));
    CHECK(m1.verified());
    CHECK(m1.certificate.sign == 1);
    CHECK(m1.certificate.min_abs >= 0.99);

    Multiplier m2 =
        verify_multiplier(s, parse("k*(1 + k*x^2)^2*v^2 - a^2"), narrow2());
    CHECK(m2.verified());
    CHECK(m2.certificate.sign == -1);
}

TEST_CASE("verify_multiplier: harmonic oscillator, parameter-dependent case") {
    // mu = exp(x^2 + v^2) satisfies the condition iff a^2 = 1:
    // residual = 2*x*v*(1 - a^2)*mu.
    Expr mu = parse("exp(x^2 + v^2)");
    Multiplier unit = verify_multiplier(harmonic_sode(1.0), Expr::num(1));
    CHECK(unit.verified());

    Multiplier good = verify_multiplier(harmonic_sode(1.0), mu);
    CHECK(good.verified());

    Multiplier off = verify_multiplier(harmonic_sode(2.0), mu);
    CHECK_FALSE(off.verified());
    CHECK(off.residual_check.verdict == Verdict::Nonzero);
}

TEST_CASE("verify_integral: stock constants of motion and a non-integral") {
    Sode s = oscillator1();
    FirstIntegral i1 =
        verify_integral(s, parse("(1 + k*x^2)/(k*v^2 - a^2)"), inner1());
    CHECK(i1.ok());

    FirstIntegral not_i = verify_integral(s, Expr::sym("x"));
    CHECK_FALSE(not_i.ok());
    CHECK(not_i.verified.verdict == Verdict::Nonzero);
    CHECK(not_i.residual == Expr::sym("v"));

    FirstIntegral ih = verify_integral(harmonic_sode(1.0), parse("a^2*x^2 + v^2"));
    CHECK(ih.ok());

    // Free particle: velocity itself is conserved.
    FirstIntegral iv = verify_integral(harmonic_sode(0.0), Expr::sym("v"));
    CHECK(iv.ok());
}

TEST_CASE("integral_from_ratio: oscillator 1") {
    Sode s = oscillator1();
    Multiplier m1 = verify_multiplier(s, parse("1/(1 + k*x^2)"));
    Multiplier m2 = verify_multiplier(s, parse("1/(k*v^2 - a^2)"), inner1());

    FirstIntegral i = integral_from_ratio(m2, m1, s);
    CHECK(i.expr == parse("(1 + k*x^2)/(k*v^2 - a^2)"));
    CHECK(i.ok());
    // Domain is the intersection of the two multiplier domains.
    CHECK(i.domain.interval("v").hi == doctest::Approx(0.99));
    CHECK(i.domain.interval("x").hi == doctest::Approx(2.0));

    FirstIntegral one = integral_from_ratio(m1, m1, s);
    CHECK(one.expr == Expr::num(1));
    CHECK(one.ok());
}

TEST_CASE("integral_from_ratio: oscillator 2") {
    Sode s = oscillator2();
    Multiplier m1 = verify_multiplier(s, parse("1 + k*x^2"));
    Multiplier m2 =
        verify_multiplier(s, parse("k*(1 + k*x^2)^2*v^2 - a^2"), narrow2());

    FirstIntegral i = integral_from_ratio(m2, m1, s);
    CHECK(i.expr == parse("(k*(1 + k*x^2)^2*v^2 - a^2)/(1 + k*x^2)"));
    CHECK(i.ok());
    CHECK(i.domain.interval("v").hi == doctest::Approx(0.15));
}

TEST_CASE("integral_from_ratio: error paths") {
    Sode s = oscillator1();
    Multiplier m1 = verify_multiplier(s, parse("1/(1 + k*x^2)"));
    Multiplier bad = verify_multiplier(s, Expr::num(1));
    CHECK_THROWS_AS(integral_from_ratio(bad, m1, s), VerifyError);
    CHECK_THROWS_AS(integral_from_ratio(m1, bad, s), VerifyError);

    // A stale certificate does not bypass the denominator recheck.
    Multiplier forged = m1;
    forged.expr = Expr::sym("v");
    CHECK_THROWS_AS(integral_from_ratio(m1, forged, s), VerifyError);
}

TEST_CASE("scale_multiplier: G(I)*mu family") {
    Sode s = oscillator1();
    Multiplier m1 = verify_multiplier(s, parse("1/(1 + k*x^2)"), inner1());
    FirstIntegral i =
        verify_integral(s, parse("(1 + k*x^2)/(k*v^2 - a^2)"), inner1());
    REQUIRE(m1.verified());
    REQUIRE(i.ok());

    // G(u) = u turns the first multiplier into the second.
    Multiplier m2 = scale_multiplier(m1, Expr::sym("u"), i, s);
    CHECK(m2.expr == parse("1/(k*v^2 - a^2)"));
    CHECK(m2.verified());

    // Constant G only rescales.
    Multiplier doubled = scale_multiplier(m1, Expr::num(2), i, s);
    CHECK(doubled.expr == parse("2/(1 + k*x^2)"));
    CHECK(doubled.verified());

    CHECK_THROWS_AS(scale_multiplier(m1, Expr::num(0), i, s), VerifyError);
    CHECK_THROWS_AS(scale_multiplier(m1, parse("u*w"), i, s), VerifyError);

    // G vanishing on the sampled range of I: I = 1 everywhere, G(u) = u - 1.
    FirstIntegral unit = verify_integral(s, Expr::num(1), inner1());
    REQUIRE(unit.ok());
    CHECK_THROWS_AS(scale_multiplier(m1, parse("u - 1"), unit, s), VerifyError);
}

TEST_CASE("scale_multiplier: exponential scaling on the harmonic oscillator") {
    Sode s = harmonic_sode(1.0);
    Multiplier unit = verify_multiplier(s, Expr::num(1));
    FirstIntegral e = verify_integral(s, parse("a^2*x^2 + v^2"));
    REQUIRE(unit.verified());
    REQUIRE(e.ok());

    Multiplier scaled = scale_multiplier(unit, parse("exp(u)"), e, s);
    CHECK(scaled.expr == parse("exp(a^2*x^2 + v^2)"));
    CHECK(scaled.verified());
}

TEST_CASE("residual identity: v dmu/dx + d(mu F)/dv = mu div(Gamma) + Gamma(mu)") {
    Sode s = oscillator1();
    VectorField g = sode_to_field(s);
    Expr div = divergence(g);
    for (const char* src : {"x + v^2", "sin(x)*v", "1 + v^2", "exp(x*v)"}) {
        Expr mu = parse(src);
        Expr diff = multiplier_residual(s, mu) - (mu * div + g.apply(mu));
        check_zero(diff, box2(), kKA);
    }
}
