#include "mforge/field.hpp"

#include <algorithm>

namespace mforge {

VectorField::VectorField(std::vector<std::string> c, std::vector<Expr> e)
    : coords(std::move(c)), comps(std::move(e)) {
    if (coords.size() != comps.size())
        throw Error("vector field: coordinate/component count mismatch");
}

const Expr& VectorField::component(const std::string& coord) const {
    for (size_t i = 0; i < coords.size(); ++i)
        if (coords[i] == coord) return comps[i];
    throw Error("vector field has no coordinate '" + coord + "'");
}

Expr VectorField::apply(const Expr& f) const {
    std::vector<Expr> terms;
    terms.reserve(coords.size());
    for (size_t i = 0; i < coords.size(); ++i)
        terms.push_back(Expr::prod({comps[i], differentiate(f, coords[i])}));
    return Expr::sum(std::move(terms));
}

Sode::Sode(std::string n, Expr f, Params p, Domain d)
    : name(std::move(n)), force(std::move(f)), params(std::move(p)),
      domain(std::move(d)) {
    for (const auto& sym : free_symbols(force)) {
        if (sym == "x" || sym == "v" || params.count(sym)) continue;
        throw Error("force term uses unbound symbol '" + sym +
                    "' (autonomous form allows x, v, and parameters)");
    }
}

VectorField sode_to_field(const Sode& s) {
    return VectorField({"x", "v"}, {Expr::sym("v"), s.force});
}

VectorField sode_to_field_extended(const Sode& s) {
    return VectorField({"t", "x", "v"}, {Expr::num(1), Expr::sym("v"), s.force});
}

Expr divergence(const VectorField& x) {
    if (x.coords.size() != 2)
        throw Error("divergence requires exactly two coordinates, got " +
                    std::to_string(x.coords.size()));
    return Expr::sum({differentiate(x.comps[0], x.coords[0]),
                      differentiate(x.comps[1], x.coords[1])});
}

VectorField lie_bracket(const VectorField& x, const VectorField& z) {
    if (!x.same_chart(z)) throw Error("lie bracket: coordinate charts differ");
    std::vector<Expr> comps;
    comps.reserve(x.coords.size());
    for (size_t i = 0; i < x.coords.size(); ++i)
        comps.push_back(Expr::sum(
            {x.apply(z.comps[i]), Expr::prod({Expr::num(-1), z.apply(x.comps[i])})}));
    return VectorField(x.coords, std::move(comps));
}

std::string jet_name(const std::string& dep, int order) {
    if (order == 0) return dep;
    return dep + "_" + std::to_string(order);
}

VectorField prolong(const PointSymmetryAnsatz& ansatz, int order) {
    if (order < 1) throw Error("prolongation order must be >= 1");
    if (ansatz.deps.size() != ansatz.coeffs.size())
        throw Error("ansatz: dependent-variable/coefficient count mismatch");
    // point symmetry: coefficients restricted to base coordinates
    std::vector<std::string> base = {"t"};
    for (const auto& d : ansatz.deps) base.push_back(d);

    // truncated total derivative on the jet chart of order `order`:
    // D = ∂t + Σ_j Σ_{i<order} dep^j_{i+1} ∂dep^j_i  (top-order coordinates
    // have no successor and never appear differentiated below)
    std::vector<std::string> jet_coords = {"t"};
    std::vector<Expr> d_comps = {Expr::num(1)};
    for (const auto& dep : ansatz.deps) {
        for (int i = 0; i <= order; ++i) {
            jet_coords.push_back(jet_name(dep, i));
            d_comps.push_back(i < order ? Expr::sym(jet_name(dep, i + 1))
                                        : Expr::num(0));
        }
    }
    VectorField d_total(jet_coords, d_comps);

    std::vector<Expr> comps = {ansatz.xi};
    Expr dxi = d_total.apply(ansatz.xi);
    std::vector<std::string> out_coords = {"t"};
    for (size_t j = 0; j < ansatz.deps.size(); ++j) {
        Expr phi = ansatz.coeffs[j];
        out_coords.push_back(jet_name(ansatz.deps[j], 0));
        comps.push_back(phi);
        for (int i = 1; i <= order; ++i) {
            // phi^(i) = D(phi^(i-1)) − dep_i · D(ξ)
            phi = Expr::sum(
                {d_total.apply(phi),
                 Expr::prod({Expr::num(-1), Expr::sym(jet_name(ansatz.deps[j], i)),
                             dxi})});
            out_coords.push_back(jet_name(ansatz.deps[j], i));
            comps.push_back(phi);
        }
    }
    // reorder components to match the jet chart layout (t, then each dep
    // block); they already are, by construction above
    return VectorField(std::move(out_coords), std::move(comps));
}

Expr total_derivative(const Expr& e, const Sode& s) {
    return sode_to_field_extended(s).apply(e);
}

}  // namespace mforge
