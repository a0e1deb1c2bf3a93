#include "mforge/nonlocal.hpp"

#include <algorithm>
#include <set>

#include "mforge/antiderivative.hpp"

namespace mforge {

namespace {

// Structural rewrite: ln(abs(u)) -> ln(u). Valid as a primitive rebase;
// both have the same symbolic derivative and the downstream exp-fold
// restores definedness for negative u.
Expr strip_ln_abs(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol:
            return e;
        case Kind::Func: {
            Expr a = strip_ln_abs(e.arg());
            if (e.func() == FuncId::Ln && a.kind() == Kind::Func &&
                a.func() == FuncId::Abs)
                return ln(a.arg());
            return Expr::apply(e.func(), a);
        }
        case Kind::Power:
            return Expr::pow(strip_ln_abs(e.base()), strip_ln_abs(e.exponent()));
        case Kind::Product:
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const Expr& k : e.kids()) kids.push_back(strip_ln_abs(k));
            return e.kind() == Kind::Product ? Expr::prod(std::move(kids))
                                             : Expr::sum(std::move(kids));
        }
    }
    return e;
}

// exp(c*ln(u) + rest) -> u^c * exp(rest), applied recursively.
Expr fold_exp_of_ln(const Expr& e) {
    switch (e.kind()) {
        case Kind::Number:
        case Kind::Symbol:
            return e;
        case Kind::Power:
            return Expr::pow(fold_exp_of_ln(e.base()),
                             fold_exp_of_ln(e.exponent()));
        case Kind::Product:
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const Expr& k : e.kids()) kids.push_back(fold_exp_of_ln(k));
            return e.kind() == Kind::Product ? Expr::prod(std::move(kids))
                                             : Expr::sum(std::move(kids));
        }
        case Kind::Func: {
            Expr a = fold_exp_of_ln(e.arg());
            if (e.func() != FuncId::Exp) return Expr::apply(e.func(), a);
            std::vector<Expr> terms;
            if (a.kind() == Kind::Sum)
                terms = a.kids();
            else
                terms.push_back(a);
            std::vector<Expr> factors;
            std::vector<Expr> rest;
            for (const Expr& t : terms) {
                if (t.kind() == Kind::Func && t.func() == FuncId::Ln) {
                    factors.push_back(t.arg());
                    continue;
                }
                if (t.kind() == Kind::Product) {
                    std::vector<Expr> others;
                    std::optional<Expr> ln_arg;
                    for (const Expr& f : t.kids()) {
                        if (!ln_arg && f.kind() == Kind::Func &&
                            f.func() == FuncId::Ln)
                            ln_arg = f.arg();
                        else
                            others.push_back(f);
                    }
                    if (ln_arg) {
                        factors.push_back(
                            Expr::pow(*ln_arg, Expr::prod(std::move(others))));
                        continue;
                    }
                }
                rest.push_back(t);
            }
            if (factors.empty()) return Expr::apply(FuncId::Exp, a);
            factors.push_back(mforge::exp(Expr::sum(std::move(rest))));
            return Expr::prod(std::move(factors));
        }
    }
    return e;
}

}  // namespace

ExtendedSystem extend(const Sode& s, const Expr& h, Interval w_range,
                      const VerifyOptions& opts) {
    std::set<std::string> fs = free_symbols(h);
    fs.erase("v");
    for (const auto& [name, value] : s.params) fs.erase(name);
    if (!fs.empty())
        throw VerifyError("extend: h must depend on v only, found symbol " +
                          *fs.begin());

    Domain vdom;
    vdom = vdom.with("v", s.domain.interval("v"));
    NonvanishingResult cert = nonvanishing(h, vdom, s.params, 256, opts.seed);
    if (!cert.ok)
        throw VerifyError("extend: h " + cert.reason + " on the v-interval");

    ExtendedSystem es;
    es.base = s;
    es.h = h;
    es.haux = s.force * h;
    es.field = VectorField({"t", "x", "v", "w"},
                           {Expr::num(1), Expr::sym("v"), s.force, es.haux});
    es.domain = s.domain.with("w", w_range);
    return es;
}

Expr characteristic_g(const Expr& h, const Expr& g_outer,
                      const Params& params) {
    Antiderivative ad = antiderivative(h, "v", params, 1.0);
    if (!ad.closed_form())
        throw Error(
            "characteristic_g: no table antiderivative for h; supply an h "
            "with a closed primitive");
    Expr primitive = strip_ln_abs(ad.expr());

    std::set<std::string> fs = free_symbols(g_outer);
    for (const auto& [name, value] : params) fs.erase(name);
    if (fs.size() > 1)
        throw Error(
            "characteristic_g: G must be an expression in one placeholder "
            "symbol");
    Expr arg = Expr::sym("w") - primitive;
    Expr g = fs.empty() ? g_outer : substitute(g_outer, *fs.begin(), arg);
    return fold_exp_of_ln(g);
}

Expr characteristic_g(const Expr& h, const Params& params) {
    Expr u = Expr::sym("u");
    return characteristic_g(h, mforge::exp(u), params);
}

NonlocalSymmetryCandidate build_symmetry(const ExtendedSystem& es,
                                         const Expr& g,
                                         const VerifyOptions& opts) {
    std::set<std::string> fs = free_symbols(g);
    if (fs.count("t") || fs.count("x"))
        throw VerifyError(
            "build_symmetry: g must be t- and x-independent (a function of "
            "v and w)");

    VectorField xh({"t", "x", "v", "w"},
                   {Expr::num(0), Expr::sym("v"), es.base.force, es.haux});

    bool degenerate_force =
        zero_test(es.base.force, es.base.domain, es.base.params, opts)
            .verdict == Verdict::Zero;
    Expr xh_g = xh.apply(g);
    if (!degenerate_force) {
        ZeroTestResult fi = zero_test(xh_g, es.domain, es.base.params, opts);
        if (fi.verdict != Verdict::Zero)
            throw VerifyError(
                "build_symmetry: g is not a first-integral of X_H (X_H g "
                "failed the zero test)");
    }

    NonlocalSymmetryCandidate c;
    c.g = g;
    std::vector<Expr> ycomps;
    for (const Expr& comp : xh.comps) ycomps.push_back(g * comp);
    c.y = VectorField(xh.coords, std::move(ycomps));
    c.lambda = -(differentiate(g, "t") + xh_g);

    VectorField br = lie_bracket(c.y, es.field);
    std::vector<Expr> rcomps;
    for (std::size_t i = 0; i < br.comps.size(); ++i)
        rcomps.push_back(br.comps[i] - c.lambda * es.field.comps[i]);
    c.bracket_residual = VectorField(es.field.coords, std::move(rcomps));

    for (const Expr& comp : c.bracket_residual.comps)
        c.component_checks.push_back(
            zero_test(comp, es.domain, es.base.params, opts));
    return c;
}

std::vector<Expr> determining_residuals(const ExtendedSystem& es,
                                        const PointSymmetryAnsatz& ansatz) {
    std::vector<std::string> want = {"x", "v", "w"};
    std::vector<std::string> got = ansatz.deps;
    std::sort(got.begin(), got.end());
    std::vector<std::string> sorted_want = want;
    std::sort(sorted_want.begin(), sorted_want.end());
    if (got != sorted_want)
        throw Error(
            "determining_residuals: ansatz must cover the dependent "
            "coordinates x, v, w");

    VectorField pr = prolong(ansatz, 1);
    std::vector<Expr> deltas = {
        Expr::sym(jet_name("x", 1)) - Expr::sym("v"),
        Expr::sym(jet_name("v", 1)) - es.base.force,
        Expr::sym(jet_name("w", 1)) - es.haux,
    };
    std::vector<Expr> out;
    for (const Expr& d : deltas) {
        Expr r = pr.apply(d);
        r = substitute(r, jet_name("x", 1), Expr::sym("v"));
        r = substitute(r, jet_name("v", 1), es.base.force);
        r = substitute(r, jet_name("w", 1), es.haux);
        out.push_back(r);
    }
    return out;
}

}  // namespace mforge
