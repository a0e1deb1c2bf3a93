#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mforge/domain.hpp"
#include "mforge/expr.hpp"
#include "mforge/quadrature.hpp"
#include "mforge/verify.hpp"

using namespace mforge;

namespace {

const Params kKA = {{"k", 1.0}, {"a", 1.0}};

Expr normalize_copy(const Expr& e) { return substitute(e, {}); }

// Central finite difference in one variable.
double fd(const Expr& e, const std::string& var, EvalPoint p, const Params& params,
          double h = 1e-6) {
    EvalPoint hi = p, lo = p;
    hi[var] += h;
    lo[var] -= h;
    return (evaluate(e, hi, params) - evaluate(e, lo, params)) / (2 * h);
}

}  // namespace

TEST_CASE("parse: oscillator force term") {
    Expr f = parse("(k*v^2 - a^2)*x/(1 + k*x^2)");
    auto syms = free_symbols(f);
    CHECK(syms == std::set<std::string>{"a", "k", "v", "x"});
    // F(0.5, 0.25) at k=1, a=1: (0.0625-1)*0.5/1.25 = -0.375
    CHECK(evaluate(f, {{"x", 0.5}, {"v", 0.25}}, kKA) == doctest::Approx(-0.375).epsilon(1e-12));
}

TEST_CASE("parse: zero constant and harmonic integral") {
    CHECK(parse("0").is_zero());
    Expr e = parse("x^2 + v^2");
    CHECK(e.kind() == Kind::Sum);
    REQUIRE(e.kids().size() == 2);
    CHECK(e.kids()[0].kind() == Kind::Power);
    CHECK(e.kids()[1].kind() == Kind::Power);
}

TEST_CASE("parse: errors carry position and expectations") {
    try {
        parse("2*/x");
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.line() == 1);
        CHECK(err.col() == 3);
    }
    try {
        parse("x +\n y * foo(x)");
        FAIL("expected ParseError");
    } catch (const ParseError& err) {
        CHECK(err.line() == 2);
        CHECK(!err.expected().empty());  // lists the known function set
        CHECK(std::string(err.what()).find("foo") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("x + "), ParseError);
    CHECK_THROWS_AS(parse("(x"), ParseError);
    CHECK_THROWS_AS(parse("x 2"), ParseError);
    CHECK_THROWS_AS(parse("x $ y"), ParseError);
}

TEST_CASE("parse: precedence and associativity") {
    CHECK(parse("2^3^2") == parse("2^(3^2)"));
    CHECK(evaluate(parse("2^3^2"), {}) == doctest::Approx(512.0));
    CHECK(parse("-x^2") == parse("-(x^2)"));
    CHECK(parse("a - b - c") == parse("(a - b) - c"));
    CHECK(parse("a/b/c") == parse("a/(b*c)"));
    CHECK(parse("x^-2") == parse("1/x^2"));
    CHECK(evaluate(parse("1e-3"), {}) == doctest::Approx(0.001).epsilon(1e-15));
    CHECK(evaluate(parse("2.5e2"), {}) == doctest::Approx(250.0));
}

TEST_CASE("normalization: constant folding and like terms") {
    CHECK(parse("x - x").is_zero());
    CHECK(parse("1/2 + 1/2") == parse("1"));
    CHECK(parse("0.5*x + 0.5*x") == parse("x"));
    CHECK(parse("x*x") == parse("x^2"));
    CHECK(parse("x^2*x^-2") == parse("1"));
    CHECK(parse("sqrt(x)^2") == parse("x"));
    CHECK(parse("(x*y)^2") == parse("x^2*y^2"));
    CHECK(parse("2*x + 3*x") == parse("5*x"));
    CHECK(parse("x + y") == parse("y + x"));
    CHECK(parse("sqrt(4)") == parse("2"));
    CHECK(parse("sqrt(9/4)") == parse("3/2"));
}

TEST_CASE("normalization is idempotent") {
    const char* corpus[] = {
        "(k*v^2 - a^2)*x/(1 + k*x^2)",
        "v^2/(2*(1+k*x^2)) - a^2*x^2/(2*(1+k*x^2))",
        "(1+k*x^2)/(k*v^2 - a^2)",
        "exp(w)/v",
        "-v*atanh(sqrt(k)*v/a)/(sqrt(k)*a) + ln((1+k*x^2)/(a^2 - k*v^2))/(2*k)",
        "sin(x)^2 + cos(x)^2",
        "k*(1+k*x^2)^2*v^2 - a^2",
    };
    for (const char* src : corpus) {
        Expr e = parse(src);
        Expr n = normalize_copy(e);
        CHECK(n == e);
        CHECK(normalize_copy(n) == n);
    }
}

TEST_CASE("render round trip on catalog expressions") {
    const char* corpus[] = {
        "(k*v^2 - a^2)*x/(1 + k*x^2)",
        "1/(1+k*x^2)",
        "1/(k*v^2 - a^2)",
        "(1+k*x^2)/(k*v^2-a^2)",
        "(k*(1+k*x^2)^2*v^2-a^2)/(1+k*x^2)",
        "-k*x*v^2/(1+k*x^2) - a^2*x/(1+k*x^2)^3",
        "exp(w)/v",
        "x^2 + v^2",
        "2*k*x*v/(1+k*x^2)",
        "-v*atanh(sqrt(k)*v/a)/(sqrt(k)*a)",
        "a^4*x^2*(2+k*x^2)/(4*(1+k*x^2)^2)",
        "x^-3 - 2.5*x + sign(v)",
        "1/12*k*v^4*(1+k*x^2)^2 - v^2*a^2/2",
        "tan(x) + tanh(v) - atan(w)",
        "abs(1 - k*v^2/a^2)",
        "x^(1/2) + x^(-3/2)",
        "-3/4",
        "1.5e-7*x",
    };
    for (const char* src : corpus) {
        Expr e = parse(src);
        Expr back = parse(render(e));
        INFO("source: ", src, " rendered: ", render(e));
        CHECK(back == e);
    }
}

TEST_CASE("differentiate: power rule against closed forms") {
    Expr L = parse("v^2/(2*(1+k*x^2))");
    CHECK(differentiate(L, "v") == parse("v/(1+k*x^2)"));
    Expr mu = parse("1/(1+k*x^2)");
    Expr d = differentiate(mu, "x");
    CHECK(d == parse("-2*k*x/(1+k*x^2)^2"));
    CHECK(differentiate(parse("a^2"), "x").is_zero());
}

TEST_CASE("differentiate agrees with central finite differences") {
    const char* corpus[] = {
        "(k*v^2 - a^2)*x/(1 + k*x^2)",
        "1/(1+k*x^2)",
        "v^2/(2*(1+k*x^2)) - a^2*x^2/(2*(1+k*x^2))",
        "exp(w)/v",
        "atanh(v/2)*v - ln(1 - v^2/4)",
        "sqrt(1 + x^2)*sin(x) + cos(v)*tan(x/4)",
        "atan(x*v) + tanh(x - v)",
    };
    Domain d;
    d.with("x", -1.5, 1.5).with("v", 0.3, 1.8).with("w", -1, 1);
    auto pts = sample_points(d, 32, kDefaultSeed);
    for (const char* src : corpus) {
        Expr e = parse(src);
        for (const std::string var : {"x", "v"}) {
            Expr de = differentiate(e, var);
            for (const auto& p : pts) {
                double sym, num;
                try {
                    sym = evaluate(de, p, kKA);
                    num = fd(e, var, p, kKA);
                } catch (const EvalError&) {
                    continue;
                }
                CHECK(std::fabs(sym - num) <= 1e-6 * (1 + std::fabs(sym)));
            }
        }
    }
}

TEST_CASE("differentiate: abs and sign rule") {
    Expr e = parse("abs(x)");
    Expr de = differentiate(e, "x");
    CHECK(de == parse("sign(x)"));
    CHECK(evaluate(de, {{"x", -3.0}}) == -1.0);
    CHECK(evaluate(de, {{"x", 0.0}}) == 0.0);
    CHECK(differentiate(parse("sign(x)"), "x").is_zero());
    // d/dv ln|k v^2 - a^2| = 2kv/(kv^2-a^2) numerically on the negative branch
    Expr lnabs = ln(abs(parse("k*v^2 - a^2")));
    Expr dl = differentiate(lnabs, "v");
    double got = evaluate(dl, {{"v", 0.5}}, kKA);
    CHECK(got == doctest::Approx(2 * 0.5 / (0.25 - 1)).epsilon(1e-12));
}

TEST_CASE("evaluate: direct substitution and guards") {
    Expr I1 = parse("(1+k*x^2)/(k*v^2-a^2)");
    CHECK(evaluate(I1, {{"x", 0.0}, {"v", 0.0}}, kKA) == doctest::Approx(-1.0));
    CHECK(evaluate(parse("1/(1+k*x^2)"), {{"x", 1.0}}, kKA) == doctest::Approx(0.5));
    CHECK(evaluate(parse("x*v"), {{"x", 2.0}, {"v", 3.0}}) == doctest::Approx(6.0));

    CHECK_THROWS_AS(evaluate(parse("atanh(v)"), {{"v", 1.5}}), EvalError);
    try {
        evaluate(parse("atanh(v)"), {{"v", 1.5}});
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::OutOfDomain);
    }
    try {
        evaluate(parse("1/x"), {{"x", 1e-12}});
        FAIL("expected singular");
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::Singular);
        CHECK(!err.offending().empty());
    }
    try {
        evaluate(parse("x + q"), {{"x", 1.0}});
        FAIL("expected unbound");
    } catch (const EvalError& err) {
        CHECK(err.kind() == EvalError::Kind::Unbound);
        CHECK(err.offending() == "q");
    }
    CHECK_THROWS_AS(evaluate(parse("ln(x)"), {{"x", -1.0}}), EvalError);
    CHECK_THROWS_AS(evaluate(parse("sqrt(x)"), {{"x", -0.5}}), EvalError);
    CHECK_THROWS_AS(evaluate(parse("x^(1/2)"), {{"x", -2.0}}), EvalError);
}

TEST_CASE("zero_test: multiplier condition for oscillator one") {
    // v dmu/dx + d(mu F)/dv with mu = 1/(1+k x^2)
    Expr F = parse("(k*v^2 - a^2)*x/(1 + k*x^2)");
    Expr mu = parse("1/(1+k*x^2)");
    Expr residual = Expr::sym("v") * differentiate(mu, "x") +
                    differentiate(mu * F, "v");
    Domain d;
    d.with("x", -2, 2).with("v", -2, 2);
    auto res = zero_test(residual, d, kKA);
    CHECK(res.verdict == Verdict::Zero);
    CHECK(res.used == 64);
}

TEST_CASE("zero_test: trivial verdicts") {
    Domain d;
    d.with("x", 1, 2).with("v", 1, 2);
    CHECK(zero_test(parse("x - x"), d).verdict == Verdict::Zero);

    auto nz = zero_test(parse("x*v"), d);
    CHECK(nz.verdict == Verdict::Nonzero);
    REQUIRE(nz.witness.has_value());
    CHECK(evaluate(parse("x*v"), *nz.witness) != 0.0);

    // never report zero for the constant 1
    CHECK(zero_test(parse("1"), d).verdict == Verdict::Nonzero);
    CHECK(zero_test(parse("1e-30"), d).verdict == Verdict::Zero);
}

TEST_CASE("zero_test: singular skipping and empty domain") {
    Domain d;
    d.with("x", 0, 0);  // degenerate at the pole of 1/x
    CHECK_THROWS_AS(zero_test(parse("1/x"), d), VerifyError);

    Domain half;
    half.with("x", -1, 1);
    // 1/x - 1/x: singular draws near 0 are skipped, the rest agree
    auto res = zero_test(parse("1/x - 1/x"), half);
    CHECK(res.verdict == Verdict::Zero);
}

TEST_CASE("zero_test: deterministic for fixed seed") {
    Domain d;
    d.with("x", 1, 2).with("v", 1, 2);
    auto a = zero_test(parse("x*v"), d);
    auto b = zero_test(parse("x*v"), d);
    REQUIRE(a.witness.has_value());
    REQUIRE(b.witness.has_value());
    CHECK(a.witness->at("x") == b.witness->at("x"));
    CHECK(a.max_scaled == b.max_scaled);
}

TEST_CASE("nonvanishing certificate") {
    Domain d;
    d.with("x", -2, 2);
    CHECK(nonvanishing(parse("1 + k*x^2"), d, kKA).ok);
    CHECK(nonvanishing(parse("1 + k*x^2"), d, kKA).sign == 1);
    auto bad = nonvanishing(parse("x"), d, {});
    CHECK(!bad.ok);
    CHECK(!bad.reason.empty());

    Domain v;
    v.with("v", -0.99, 0.99);
    CHECK(nonvanishing(parse("k*v^2 - a^2"), v, kKA).sign == -1);
}

TEST_CASE("sample_points: determinism, bounds, degenerate interval") {
    Domain d;
    d.with("x", -2, 2);
    auto a = sample_points(d, 64, 42);
    auto b = sample_points(d, 64, 42);
    REQUIRE(a.size() == 64);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].at("x") == b[i].at("x"));
        CHECK(a[i].at("x") >= -2.0);
        CHECK(a[i].at("x") <= 2.0);
    }
    Domain deg;
    deg.with("y", 1.5, 1.5);
    auto pts = sample_points(deg, 1, kDefaultSeed);
    CHECK(pts[0].at("y") == 1.5);
}

TEST_CASE("quadrature: adaptive Simpson against frozen oracles") {
    auto f = [](double z) { return std::exp(z * z); };
    // reference computed with 30-digit arithmetic
    CHECK(integrate(f, 0, 1) == doctest::Approx(1.46265174590718160880).epsilon(1e-12));
    CHECK(integrate(f, 1, 0) == doctest::Approx(-1.46265174590718160880).epsilon(1e-12));
    CHECK(integrate(f, 1, 1) == 0.0);
    auto g = [](double z) { return -z / ((1 + z * z) * (1 + z * z)); };
    CHECK(integrate(g, 0, 0.8) ==
          doctest::Approx(-0.8 * 0.8 / (2 * (1 + 0.64))).epsilon(1e-12));
}

TEST_CASE("expand_in and linear_in helpers") {
    Expr e = parse("(k*z^2 - a^2)/(z^2*(1+k*x^2))");
    Expr ex = expand_in(e, "z");
    // expansion splits into k/(1+k x^2) - a^2 z^-2/(1+k x^2)
    CHECK(ex.kind() == Kind::Sum);
    Domain d;
    d.with("z", 0.5, 2).with("x", -1, 1);
    CHECK(zero_test(ex - e, d, kKA).verdict == Verdict::Zero);

    auto lin = linear_in(parse("(1+k*x^2)*v - a^2"), "v");
    REQUIRE(lin.has_value());
    CHECK(lin->first == parse("1+k*x^2"));
    CHECK(lin->second == parse("-a^2"));
    CHECK(!linear_in(parse("v^2"), "v").has_value());
    CHECK(!linear_in(parse("atanh(v)"), "v").has_value());
    auto cst = linear_in(parse("x^2"), "v");
    REQUIRE(cst.has_value());
    CHECK(cst->first.is_zero());
}
