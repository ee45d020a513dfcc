#pragma once

#include <cmath>
#include <stdexcept>

namespace wdro {

struct ScalarMinResult {
    double x = 0.0;        // best probed argument
    double fx = 0.0;       // value there
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int evals = 0;
};

/**
 * Golden-section search for the minimum of a unimodal (here: convex) function
 * on [lo, hi], run until the bracket width is at most xtol. Endpoints are
 * probed too, so boundary minima are reported at the boundary value. Returns
 * the best probed point together with the final bracket.
 */
template <typename F>
ScalarMinResult golden_section_min(F&& f, double lo, double hi, double xtol, int max_iter = 400) {
    if (!(lo <= hi)) throw std::invalid_argument("golden_section_min: need lo <= hi");
    ScalarMinResult r;
    r.bracket_lo = lo;
    r.bracket_hi = hi;
    double best_x = lo;
    double best_f = f(lo);
    ++r.evals;
    if (hi > lo) {
        const double fhi = f(hi);
        ++r.evals;
        if (fhi < best_f) {
            best_f = fhi;
            best_x = hi;
        }
    }
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;  // 1/phi
    double a = lo, b = hi;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    r.evals += 2;
    for (int it = 0; it < max_iter && (b - a) > xtol; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + invphi * (b - a);
            fd = f(d);
        }
        ++r.evals;
    }
    if (fc < best_f) {
        best_f = fc;
        best_x = c;
    }
    if (fd < best_f) {
        best_f = fd;
        best_x = d;
    }
    r.x = best_x;
    r.fx = best_f;
    r.bracket_lo = a;
    r.bracket_hi = b;
    return r;
}

} // namespace wdro
