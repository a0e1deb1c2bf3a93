#pragma once

#include <functional>

namespace mforge {

// Adaptive Simpson quadrature with absolute tolerance; interval halving
// with the standard /15 Richardson acceptance test. Throws Error when the
// recursion depth limit is hit before the tolerance is met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10, int max_depth = 40);

}  // namespace mforge
