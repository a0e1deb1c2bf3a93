#pragma once

#include <string>
#include <vector>

#include "mforge/domain.hpp"
#include "mforge/expr.hpp"

namespace mforge {

// Vector field over an ordered list of named coordinates; components are
// stored normalized and may reference coordinates and parameters only.
struct VectorField {
    std::vector<std::string> coords;
    std::vector<Expr> comps;

    VectorField() = default;
    VectorField(std::vector<std::string> c, std::vector<Expr> e);

    const Expr& component(const std::string& coord) const;
    bool same_chart(const VectorField& o) const { return coords == o.coords; }

    // Directional derivative X(f) = sum_i X^i ∂f/∂x_i.
    Expr apply(const Expr& f) const;
};

// Second-order ODE x'' = F(x, v) in normal form with parameter bindings and
// a working domain. F is autonomous: free variables within {x, v, params}.
struct Sode {
    std::string name;
    Expr force;  // F(x, v)
    Params params;
    Domain domain;

    Sode() = default;
    Sode(std::string n, Expr f, Params p, Domain d);
};

// Γ = v ∂x + F ∂v on (x, v).
VectorField sode_to_field(const Sode& s);
// ∂t + Γ on (t, x, v); a distinct value from Γ.
VectorField sode_to_field_extended(const Sode& s);

// ∂x(X^x) + ∂v(X^v) relative to the area form; the field must live on
// exactly two coordinates.
Expr divergence(const VectorField& x);

// [X, Z]^i = X(Z^i) − Z(X^i); same coordinate chart required.
VectorField lie_bracket(const VectorField& x, const VectorField& z);

// Point-symmetry generator data: ξ ∂t + Σ coeffs[j] ∂deps[j]; coefficients
// depend on t and the dependent coordinates only (no jet coordinates).
struct PointSymmetryAnsatz {
    Expr xi;
    std::vector<std::string> deps;
    std::vector<Expr> coeffs;
};

// Jet coordinate name for derivative order i ≥ 1 (dep itself for i = 0).
std::string jet_name(const std::string& dep, int order);

// Prolong to jet order k ≥ 1 on coordinates (t, dep, dep_1, ..., dep_k per
// dependent variable) via phi^(i+1) = D(phi^(i)) − dep_{i+1} D(ξ), with D
// the truncated total derivative.
VectorField prolong(const PointSymmetryAnsatz& ansatz, int order);

// On-shell total derivative ∂t e + v ∂x e + F ∂v e along the Sode.
Expr total_derivative(const Expr& e, const Sode& s);

}  // namespace mforge
