#pragma once

#include <vector>

#include "mforge/multiplier.hpp"

namespace mforge {

// Covering of a Sode by one auxiliary variable w with dw/dt = Haux = F*h(v):
// X̄_H = ∂t + v ∂x + F ∂v + Haux ∂w on (t, x, v, w).
struct ExtendedSystem {
    Sode base;
    Expr h;     // in v (parameters allowed)
    Expr haux;  // F * h
    VectorField field;
    Domain domain;  // base domain plus the w interval
};

// Assemble the covering. h must depend on v only (parameters aside) and be
// non-vanishing on the base v-interval (sampled certificate).
ExtendedSystem extend(const Sode& s, const Expr& h,
                      Interval w_range = Interval(-1.0, 1.0),
                      const VerifyOptions& opts = {});

// g = G(w - antiderivative of h), the characteristic first-integral of
// X_H's (v, w) block: it satisfies dg/dv + h dg/dw = 0. G is an expression
// in one placeholder symbol; the one-argument form uses G = exp. Requires
// a table antiderivative for h. ln(abs(.)) primitives are rebased to
// ln(.) and exp-of-ln factors folded so e.g. h = 1/v yields exp(w)/v.
Expr characteristic_g(const Expr& h, const Expr& g_outer,
                      const Params& params = {});
Expr characteristic_g(const Expr& h, const Params& params = {});

struct NonlocalSymmetryCandidate {
    Expr g;                        // in (v, w)
    VectorField y;                 // g * X_H, zero ∂t component
    Expr lambda;                   // -(∂t g + X_H g)
    VectorField bracket_residual;  // [Y, X̄_H] - lambda * X̄_H
    std::vector<ZeroTestResult> component_checks;

    bool ok() const {
        for (const auto& c : component_checks)
            if (c.verdict != Verdict::Zero) return false;
        return !component_checks.empty();
    }
};

// Y = g X_H. Preconditions: g is t- and x-independent and X_H g passes the
// zero test (g is a first-integral of the spatial field); the latter check
// is skipped when F itself vanishes identically, where any g works. The
// bracket residual is computed and zero-tested componentwise.
NonlocalSymmetryCandidate build_symmetry(const ExtendedSystem& es,
                                         const Expr& g,
                                         const VerifyOptions& opts = {});

// Residuals of the classical point-symmetry determining equations of the
// extended system, regenerated by first-order prolongation of the ansatz
// applied to x' - v, v' - F, w' - Haux and substitution of the on-shell
// relations. All zero iff the ansatz is a point symmetry.
std::vector<Expr> determining_residuals(const ExtendedSystem& es,
                                        const PointSymmetryAnsatz& ansatz);

// On-shell total derivative along the covering flow:
// ∂t e + v ∂x e + F ∂v e + Haux ∂w e.
inline Expr total_derivative(const Expr& e, const ExtendedSystem& es) {
    return es.field.apply(e);
}

}  // namespace mforge
