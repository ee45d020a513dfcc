#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wdro/common.hpp"

namespace wdro {

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vec x;
    double value = 0.0;
    int iterations = 0;
};

/**
 * Dense two-phase primal simplex for  min c'x  s.t.  Ax = b, x >= 0.
 *
 * Bland's rule for both entering and leaving variables, so the method
 * terminates on degenerate problems (transport polytopes are highly
 * degenerate). Redundant equality rows are detected at the end of phase 1
 * and dropped. Sized for the verification oracles in this project (at most
 * a few thousand variables), not for production LP work.
 */
class SimplexSolver {
  public:
    LpResult solve(const Mat& a, const Vec& b, const Vec& c) {
        const std::size_t m0 = a.rows;
        n_ = a.cols;
        if (b.size() != m0 || c.size() != n_)
            throw std::invalid_argument("SimplexSolver: shape mismatch");

        m_ = m0;
        ncols_ = n_ + m0;              // structural + artificial
        t_.assign((m_ + 1) * (ncols_ + 1), 0.0);
        basis_.assign(m_, 0);

        for (std::size_t i = 0; i < m0; ++i) {
            const double sign = b[i] < 0.0 ? -1.0 : 1.0;
            for (std::size_t j = 0; j < n_; ++j) at(i, j) = sign * a(i, j);
            at(i, n_ + i) = 1.0;
            rhs(i) = sign * b[i];
            basis_[i] = n_ + i;
        }

        LpResult r;

        // Phase 1: minimize the sum of artificials.
        for (std::size_t j = 0; j <= ncols_; ++j) obj(j) = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < n_; ++j) obj(j) -= at(i, j);
            obj(ncols_) -= rhs(i);
        }
        r.iterations += iterate(ncols_);
        if (-obj(ncols_) > 1e-8) {
            r.status = LpStatus::infeasible;
            return r;
        }
        drop_artificials();

        // Phase 2 with the original objective.
        for (std::size_t j = 0; j <= ncols_; ++j) obj(j) = 0.0;
        for (std::size_t j = 0; j < n_; ++j) obj(j) = c[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const double cb = basis_[i] < n_ ? c[basis_[i]] : 0.0;
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j <= ncols_; ++j) obj(j) -= cb * at(i, j);
        }
        const int it2 = iterate(n_);
        if (it2 < 0) {
            r.status = LpStatus::unbounded;
            return r;
        }
        r.iterations += it2;

        r.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < n_) r.x[basis_[i]] = rhs(i);
        }
        double value = 0.0;
        for (std::size_t j = 0; j < n_; ++j) value += c[j] * r.x[j];
        r.value = value;
        r.status = LpStatus::optimal;
        return r;
    }

  private:
    static constexpr double kPivTol = 1e-11;
    static constexpr double kCostTol = 1e-10;

    double& at(std::size_t i, std::size_t j) { return t_[i * (ncols_ + 1) + j]; }
    double& rhs(std::size_t i) { return t_[i * (ncols_ + 1) + ncols_]; }
    double& obj(std::size_t j) { return t_[m_ * (ncols_ + 1) + j]; }

    // Bland iteration loop over columns [0, allowed). Returns pivot count,
    // or -1 on unboundedness.
    int iterate(std::size_t allowed) {
        const int pivot_cap = 200000;
        int pivots = 0;
        for (;;) {
            if (pivots > pivot_cap)
                throw std::runtime_error("SimplexSolver: pivot limit exceeded");
            std::size_t enter = ncols_ + 1;
            for (std::size_t j = 0; j < allowed; ++j) {
                if (obj(j) < -kCostTol) {
                    enter = j;
                    break;
                }
            }
            if (enter > ncols_) return pivots;

            std::size_t leave = m_;
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double aie = at(i, enter);
                if (aie > kPivTol) {
                    // rounding can leave a basic value at -1e-16; treat as zero
                    const double ratio = std::max(0.0, rhs(i)) / aie;
                    if (ratio < best_ratio - 1e-12 ||
                        (ratio < best_ratio + 1e-12 &&
                         (leave == m_ || basis_[i] < basis_[leave]))) {
                        best_ratio = ratio;
                        leave = i;
                    }
                }
            }
            if (leave == m_) return -1;
            pivot(leave, enter);
            ++pivots;
        }
    }

    void pivot(std::size_t r, std::size_t s) {
        const double piv = at(r, s);
        for (std::size_t j = 0; j <= ncols_; ++j) at(r, j) /= piv;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            const double factor = t_[i * (ncols_ + 1) + s];
            if (factor == 0.0) continue;
            for (std::size_t j = 0; j <= ncols_; ++j)
                t_[i * (ncols_ + 1) + j] -= factor * at(r, j);
        }
        basis_[r] = s;
    }

    // After phase 1: pivot basic artificials out where possible; rows that
    // cannot be pivoted are redundant constraints and get removed.
    void drop_artificials() {
        for (std::size_t i = 0; i < m_;) {
            if (basis_[i] < n_) {
                ++i;
                continue;
            }
            std::size_t col = n_;
            for (std::size_t j = 0; j < n_; ++j) {
                if (std::abs(at(i, j)) > 1e-9) {
                    col = j;
                    break;
                }
            }
            if (col < n_) {
                pivot(i, col);
                ++i;
            } else {
                remove_row(i);
            }
        }
    }

    void remove_row(std::size_t r) {
        const std::size_t last = m_ - 1;
        if (r != last) {
            for (std::size_t j = 0; j <= ncols_; ++j) at(r, j) = at(last, j);
            basis_[r] = basis_[last];
        }
        // shift the objective row up into the vacated slot
        for (std::size_t j = 0; j <= ncols_; ++j)
            t_[last * (ncols_ + 1) + j] = t_[m_ * (ncols_ + 1) + j];
        --m_;
        basis_.resize(m_);
    }

    std::size_t m_ = 0, n_ = 0, ncols_ = 0;
    Vec t_;
    std::vector<std::size_t> basis_;
};

inline LpResult solve_lp_eq(const Mat& a, const Vec& b, const Vec& c) {
    SimplexSolver s;
    return s.solve(a, b, c);
}

} // namespace wdro
