#pragma once

#include <string>
#include <vector>

#include "mforge/lagrangian.hpp"

namespace mforge {

// Expression text reproduced from the source material but not certified by
// our own constructions (suspected misprints); flag is always
// "unverified-print".
struct PrintedForm {
    std::string label;
    std::string text;
    std::string flag = "unverified-print";
};

struct TaggedMultiplier {
    std::string tag;
    Multiplier value;
};
struct TaggedIntegral {
    std::string tag;
    FirstIntegral value;
};
struct TaggedLagrangian {
    std::string tag;
    Lagrangian value;
};
struct TaggedHamiltonian {
    std::string tag;
    Hamiltonian value;
};

// Self-certifying bundle: construction runs every verification (multiplier
// residual, integral residual, Euler-Lagrange, Legendre round trip) and
// throws CatalogError on any failure.
struct CatalogEntry {
    std::string name;
    Sode sode;
    std::vector<TaggedMultiplier> multipliers;
    std::vector<TaggedIntegral> integrals;
    std::vector<TaggedLagrangian> lagrangians;
    std::vector<TaggedHamiltonian> hamiltonians;
    std::vector<PrintedForm> printed;
    std::string notes;

    const Multiplier& multiplier(const std::string& tag) const;
    const FirstIntegral& integral(const std::string& tag) const;
    const Lagrangian& lagrangian(const std::string& tag) const;
    const Hamiltonian& hamiltonian(const std::string& tag) const;
};

// x'' = (k v^2 - a^2) x / (1 + k x^2). Artifacts: mu1 = 1/(1+k x^2),
// mu2 = 1/(k v^2 - a^2) on a branch domain, I = mu2/mu1, L1, H1, and the
// non-mechanical L2, H2 on the k > 0 branch. k < 0 restricts x to
// |x| < 0.99/sqrt(-k); k = 0 stores the harmonic limit forms (the ratio
// construction degenerates there).
CatalogEntry oscillator_one(double k, double alpha);

// x'' = -k x v^2/(1+k x^2) - a^2 x/(1+k x^2)^3, k != 0. Artifacts:
// mu1 = 1+k x^2, mu2 = k (1+k x^2)^2 v^2 - a^2 on a branch domain,
// I = mu2/mu1, L1, H1, L2, H2. The printed phi2 coefficient for L2 is
// stored as unverified-print; the certified value carries a^4.
CatalogEntry oscillator_two(double k, double alpha);

// x'' = -a^2 x; mu = 1; I = a^2 x^2 + v^2 (I = v when a = 0);
// L = (v^2 - a^2 x^2)/2.
CatalogEntry harmonic(double alpha);

// Lookup by CLI name: oscillator1, oscillator2, harmonic.
CatalogEntry catalog_by_name(const std::string& name, double k = 1.0,
                             double alpha = 1.0);

}  // namespace mforge
