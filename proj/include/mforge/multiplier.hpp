#pragma once

#include <optional>

#include "mforge/field.hpp"
#include "mforge/verify.hpp"

namespace mforge {

// A certified Jacobi multiplier: non-vanishing on its domain, residual of
// the multiplier condition passes the zero test.
struct Multiplier {
    Expr expr;
    Domain domain;
    NonvanishingResult certificate;
    ZeroTestResult residual_check;
    Expr residual;

    bool verified() const {
        return certificate.ok && residual_check.verdict == Verdict::Zero;
    }
};

// A certified constant of motion: Γ(expr) passes the zero test.
struct FirstIntegral {
    Expr expr;
    Expr residual;  // Γ applied to expr
    ZeroTestResult verified;
    Domain domain;

    bool ok() const { return verified.verdict == Verdict::Zero; }
};

// v ∂μ/∂x + ∂(μF)/∂v, the multiplier condition residual.
Expr multiplier_residual(const Sode& s, const Expr& mu);

// Γ(I), the first-integral condition residual.
Expr integral_residual(const Sode& s, const Expr& i);

// Run both the non-vanishing certificate and the residual zero test over
// `dom` (default: the Sode's own domain).
Multiplier verify_multiplier(const Sode& s, const Expr& mu,
                             std::optional<Domain> dom = std::nullopt,
                             const VerifyOptions& opts = {});

FirstIntegral verify_integral(const Sode& s, const Expr& i,
                              std::optional<Domain> dom = std::nullopt,
                              const VerifyOptions& opts = {});

// First integral mu1.expr / mu2.expr (the ratio-of-multipliers
// construction). Both inputs must be verified; domains are intersected and
// the denominator must be non-vanishing there.
FirstIntegral integral_from_ratio(const Multiplier& mu1, const Multiplier& mu2,
                                  const Sode& s,
                                  const VerifyOptions& opts = {});

// New multiplier G(I)·mu. G is an expression in a single placeholder
// symbol (anything not bound by params); it must be non-vanishing on the
// sampled range of I over the working domain.
Multiplier scale_multiplier(const Multiplier& mu, const Expr& g,
                            const FirstIntegral& i, const Sode& s,
                            const VerifyOptions& opts = {});

}  // namespace mforge
