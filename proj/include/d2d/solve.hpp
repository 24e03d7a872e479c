// Scalar root finding and 1-D maximization used by the solvers.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace d2d {

struct RootResult {
    double x = 0.0;
    double fx = 0.0;     // residual at x
    int iterations = 0;
};

// Bisection for a continuous f with f(lo) and f(hi) of opposite sign.
// Monotone f makes this guaranteed-convergent, which is why the solvers
// prefer it over Newton near degenerate brackets.
template <typename F>
RootResult bisect_root(F&& f, double lo, double hi,
                       double xtol = 1e-14, int max_iter = 200) {
    if (!(lo <= hi)) throw std::invalid_argument("bisect_root: lo > hi");
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return {lo, 0.0, 0};
    if (fhi == 0.0) return {hi, 0.0, 0};
    if ((flo > 0.0) == (fhi > 0.0))
        throw std::runtime_error("bisect_root: endpoints do not bracket a sign change");
    const double span = std::max(1.0, std::abs(hi - lo));
    int it = 0;
    double mid = 0.5 * (lo + hi), fmid = 0.0;
    while (it < max_iter) {
        mid = 0.5 * (lo + hi);
        fmid = f(mid);
        ++it;
        if (fmid == 0.0) break;
        if ((fmid > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
        if (hi - lo < xtol * span) {
            mid = 0.5 * (lo + hi);
            fmid = f(mid);
            break;
        }
    }
    return {mid, fmid, it};
}

// Golden-section maximization of a unimodal f on [lo, hi].
template <typename F>
double golden_section_max(F&& f, double lo, double hi, double xtol = 1e-10) {
    static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;   // 0.618...
    static const double invphi2 = (3.0 - std::sqrt(5.0)) / 2.0;  // 0.382...
    double a = lo, b = hi;
    double h = b - a;
    if (h <= xtol) return 0.5 * (a + b);
    double c = a + invphi2 * h;
    double d = a + invphi * h;
    double fc = f(c);
    double fd = f(d);
    while (h > xtol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            h = b - a;
            c = a + invphi2 * h;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            h = b - a;
            d = a + invphi * h;
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

// Grid scan followed by golden-section refinement around the best grid
// neighborhood; the pre-grid guards against multimodality.
template <typename F>
double grid_then_golden_max(F&& f, double lo, double hi, int grid_points,
                            double xtol = 1e-10) {
    if (grid_points < 3) throw std::invalid_argument("grid_then_golden_max: grid too small");
    double best_x = lo, best_v = -std::numeric_limits<double>::infinity();
    const double step = (hi - lo) / (grid_points - 1);
    for (int i = 0; i < grid_points; ++i) {
        const double x = (i == grid_points - 1) ? hi : lo + i * step;
        const double v = f(x);
        if (v > best_v) {
            best_v = v;
            best_x = x;
        }
    }
    const double a = std::max(lo, best_x - step);
    const double b = std::min(hi, best_x + step);
    return golden_section_max(f, a, b, xtol);
}

}  // namespace d2d
