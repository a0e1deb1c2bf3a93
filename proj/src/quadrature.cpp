#include "mforge/quadrature.hpp"

#include <cmath>

#include "mforge/errors.hpp"

namespace mforge {

namespace {

double simpson(double fa, double fm, double fb, double h) {
    return (fa + 4 * fm + fb) * h / 6;
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(fa, flm, fm, m - a);
    double right = simpson(fm, frm, fb, b - m);
    double delta = left + right - whole;
    if (std::fabs(delta) <= 15 * tol) return left + right + delta / 15;
    if (depth <= 0)
        throw Error("adaptive quadrature hit depth limit before tolerance");
    return adapt(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, int max_depth) {
    if (a == b) return 0;
    double sgn = 1;
    if (a > b) {
        std::swap(a, b);
        sgn = -1;
    }
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = simpson(fa, fm, fb, b - a);
    return sgn * adapt(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace mforge
