#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "wdro/common.hpp"
#include "wdro/grid.hpp"
#include "wdro/measures.hpp"

namespace wdro {

enum class Norm { l1, l2, linf };

inline const char* norm_name(Norm n) {
    switch (n) {
        case Norm::l1: return "l1";
        case Norm::l2: return "l2";
        default: return "linf";
    }
}

/// Transport cost c(x, y) = ||x - y||^p with p >= 1.
struct CostSpec {
    Norm norm = Norm::l2;
    double p = 2.0;

    CostSpec() = default;
    CostSpec(Norm n, double exponent) : norm(n), p(exponent) {
        if (!(p >= 1.0)) throw std::invalid_argument("CostSpec: exponent p must be >= 1");
    }
};

inline double norm_dist(Norm norm, std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("norm_dist: dimension mismatch");
    double acc = 0.0;
    switch (norm) {
        case Norm::l1:
            for (std::size_t k = 0; k < x.size(); ++k) acc += std::abs(x[k] - y[k]);
            return acc;
        case Norm::l2:
            for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
            return std::sqrt(acc);
        default:
            for (std::size_t k = 0; k < x.size(); ++k) acc = std::max(acc, std::abs(x[k] - y[k]));
            return acc;
    }
}

/// c(x, y) = ||x - y||^p. Exactly zero when x == y; the euclidean square
/// skips the sqrt/square round trip.
inline double cost(const CostSpec& spec, std::span<const double> x, std::span<const double> y) {
    if (spec.norm == Norm::l2 && spec.p == 2.0) {
        if (x.size() != y.size()) throw std::invalid_argument("cost: dimension mismatch");
        double acc = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - y[k]) * (x[k] - y[k]);
        return acc;
    }
    const double d = norm_dist(spec.norm, x, y);
    if (d == 0.0) return 0.0;
    return spec.p == 1.0 ? d : (spec.p == 2.0 ? d * d : std::pow(d, spec.p));
}

/// All pairwise costs c(x_i, y_j) on a grid.
inline Mat cost_matrix(const Grid& grid, const CostSpec& spec) {
    const std::size_t n = grid.size();
    Mat c(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) c(i, j) = cost(spec, grid.point(i), grid.point(j));
    return c;
}

/// Diameter of the grid box under the given norm.
inline double box_diameter(const Grid& grid, Norm norm) {
    Vec lo(grid.dim()), hi(grid.dim());
    for (int k = 0; k < grid.dim(); ++k) {
        lo[k] = grid.bounds()[k].lo;
        hi[k] = grid.bounds()[k].hi;
    }
    return norm_dist(norm, std::span<const double>(lo.data(), lo.size()),
                     std::span<const double>(hi.data(), hi.size()));
}

/**
 * Lipschitz constant of a grid function, estimated as the max slope over
 * axis-adjacent grid point pairs. This is an underestimate of the Lipschitz
 * constant of the underlying continuous function; it is exact for piecewise
 * linear interpolants on the grid.
 */
inline double lipschitz_estimate(const Grid& grid, const Vec& values) {
    if (values.size() != grid.size())
        throw std::invalid_argument("lipschitz_estimate: values length != grid size");
    const int d = grid.dim();
    const std::size_t ppa = static_cast<std::size_t>(grid.points_per_axis());
    double best = 0.0;
    if (d == 1) {
        const double h = grid.spacing(0);
        for (std::size_t i = 0; i + 1 < ppa; ++i)
            best = std::max(best, std::abs(values[i + 1] - values[i]) / h);
    } else {
        const double h0 = grid.spacing(0), h1 = grid.spacing(1);
        for (std::size_t i0 = 0; i0 < ppa; ++i0) {
            for (std::size_t i1 = 0; i1 < ppa; ++i1) {
                const std::size_t idx = i0 * ppa + i1;
                if (i0 + 1 < ppa)
                    best = std::max(best, std::abs(values[idx + ppa] - values[idx]) / h0);
                if (i1 + 1 < ppa)
                    best = std::max(best, std::abs(values[idx + 1] - values[idx]) / h1);
            }
        }
    }
    return best;
}

/// Analytic Lipschitz bound for c = ||.||^p over the grid box: p * diam^(p-1).
inline double cost_lipschitz_bound(const Grid& grid, const CostSpec& spec) {
    const double diam = box_diameter(grid, spec.norm);
    return spec.p == 1.0 ? 1.0 : spec.p * std::pow(diam, spec.p - 1.0);
}

/**
 * The smoothing reference coupling: first marginal P, conditional rows
 *
 *   pi0(y_j | x_i)  proportional to  exp(-c(x_i, y_j) / (2^(p-1) * sigma)),
 *
 * normalized over the grid. Rows with P[i] = 0 are zero. The Lebesgue density
 * is discretized as grid-point weights; uniform quadrature weights are
 * absorbed by the normalization.
 */
class ReferenceCoupling {
  public:
    ReferenceCoupling(DiscreteMeasure first_marginal, double sigma, Mat conditional)
        : p_(std::move(first_marginal)), sigma_(sigma), cond_(std::move(conditional)),
          joint_(make_joint(p_, cond_)) {
        if (!(sigma_ > 0.0)) throw std::invalid_argument("ReferenceCoupling: sigma must be > 0");
    }

    const DiscreteMeasure& first_marginal() const { return p_; }
    double sigma() const { return sigma_; }
    /// Normalized conditional distribution per source row (rows with P=0 are zero).
    const Mat& conditional() const { return cond_; }
    const Coupling& joint() const { return joint_; }
    const Grid& grid() const { return p_.grid(); }

  private:
    static Coupling make_joint(const DiscreteMeasure& p, const Mat& cond) {
        const std::size_t n = p.size();
        if (cond.rows != n || cond.cols != n)
            throw std::invalid_argument("ReferenceCoupling: conditional shape mismatch");
        Mat w(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) w(i, j) = p[i] * cond(i, j);
        return normalized_coupling(p.grid_ptr(), std::move(w));
    }

    DiscreteMeasure p_;
    double sigma_;
    Mat cond_;
    Coupling joint_;
};

inline ReferenceCoupling build_reference(const DiscreteMeasure& p, const CostSpec& spec,
                                         double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("build_reference: sigma must be > 0");
    const Grid& grid = p.grid();
    const std::size_t n = grid.size();
    const double scale = std::pow(2.0, spec.p - 1.0) * sigma;
    Mat cond(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            // exponent <= 0 with max 0 at y = x, so no overflow is possible
            const double w = std::exp(-cost(spec, grid.point(i), grid.point(j)) / scale);
            cond(i, j) = w;
            total += w;
        }
        for (std::size_t j = 0; j < n; ++j) cond(i, j) /= total;
    }
    return ReferenceCoupling(p, sigma, std::move(cond));
}

/// E_pi[c] over all cells, fixed row-major order.
inline double expected_cost(const Coupling& pi, const CostSpec& spec) {
    const Grid& grid = pi.grid();
    const std::size_t n = pi.n();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = pi(i, j);
            if (w != 0.0) s += w * cost(spec, grid.point(i), grid.point(j));
        }
    }
    return s;
}

inline double expected_cost(const ReferenceCoupling& pi0, const CostSpec& spec) {
    return expected_cost(pi0.joint(), spec);
}

/**
 * Smallest sigma in {1, 1/2, 1/4, ...} whose reference coupling satisfies
 * E_{pi0} c <= rho / 2. On a finite grid E_{pi0} c -> 0 as sigma -> 0 (all
 * conditional mass concentrates at y = x where c = 0), so the halving always
 * terminates on non-pathological grids; we give up after 200 halvings.
 * Targeting rho/2 rather than rho keeps the dual bound
 * 2 sup|f| / (rho - E_{pi0} c) well conditioned.
 */
inline double calibrate_sigma(const DiscreteMeasure& p, const CostSpec& spec, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("calibrate_sigma: rho must be > 0");
    double sigma = 1.0;
    for (int k = 0; k < 200; ++k) {
        if (expected_cost(build_reference(p, spec, sigma), spec) <= rho / 2.0) return sigma;
        sigma /= 2.0;
    }
    throw InfeasibleError("calibrate_sigma: no sigma found after 200 halvings");
}

} // namespace wdro
