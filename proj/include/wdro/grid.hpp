#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdro/common.hpp"

namespace wdro {

/// Closed interval [lo, hi] on one axis, in sample-space units.
struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/**
 * Uniform Cartesian discretization of a box in R^d, d in {1, 2}.
 *
 * Points are the Cartesian product of the per-axis uniform subdivisions,
 * stored in lexicographic order (axis 0 major). All coordinates lie inside
 * the bounds by construction.
 */
class Grid {
  public:
    Grid(std::vector<Interval> bounds, int points_per_axis)
        : bounds_(std::move(bounds)), ppa_(points_per_axis) {
        if (bounds_.empty() || bounds_.size() > 2)
            throw std::invalid_argument("Grid: dimension must be 1 or 2");
        if (ppa_ < 2) throw std::invalid_argument("Grid: points_per_axis must be >= 2");
        for (const auto& b : bounds_) {
            if (!(b.lo < b.hi)) throw std::invalid_argument("Grid: need lo < hi on every axis");
        }
        const int d = dim();
        std::size_t n = 1;
        for (int k = 0; k < d; ++k) n *= static_cast<std::size_t>(ppa_);
        points_.resize(n * static_cast<std::size_t>(d));
        for (std::size_t idx = 0; idx < n; ++idx) {
            std::size_t rest = idx;
            for (int k = d - 1; k >= 0; --k) {
                const std::size_t ik = rest % static_cast<std::size_t>(ppa_);
                rest /= static_cast<std::size_t>(ppa_);
                points_[idx * d + k] = bounds_[k].lo + static_cast<double>(ik) * spacing(k);
            }
        }
    }

    int dim() const { return static_cast<int>(bounds_.size()); }
    int points_per_axis() const { return ppa_; }
    std::size_t size() const { return points_.size() / static_cast<std::size_t>(dim()); }
    const std::vector<Interval>& bounds() const { return bounds_; }

    double spacing(int axis) const {
        return (bounds_[axis].hi - bounds_[axis].lo) / static_cast<double>(ppa_ - 1);
    }

    /// Volume of one quadrature cell (product of per-axis spacings).
    double cell_volume() const {
        double v = 1.0;
        for (int k = 0; k < dim(); ++k) v *= spacing(k);
        return v;
    }

    double box_volume() const {
        double v = 1.0;
        for (const auto& b : bounds_) v *= (b.hi - b.lo);
        return v;
    }

    std::span<const double> point(std::size_t idx) const {
        return {points_.data() + idx * static_cast<std::size_t>(dim()),
                static_cast<std::size_t>(dim())};
    }

    double coord(std::size_t idx, int axis) const {
        return points_[idx * static_cast<std::size_t>(dim()) + static_cast<std::size_t>(axis)];
    }

    bool contains(std::span<const double> x) const {
        if (x.size() != static_cast<std::size_t>(dim())) return false;
        for (int k = 0; k < dim(); ++k) {
            if (x[k] < bounds_[k].lo || x[k] > bounds_[k].hi) return false;
        }
        return true;
    }

    /**
     * Index of the grid point nearest to x. Distance ties break toward the
     * lexicographically smaller point, which on a uniform grid is the same
     * as rounding each axis down at exact half-cells.
     */
    std::size_t nearest_index(std::span<const double> x) const {
        if (x.size() != static_cast<std::size_t>(dim()))
            throw std::invalid_argument("Grid::nearest_index: dimension mismatch");
        std::size_t idx = 0;
        for (int k = 0; k < dim(); ++k) {
            const double t = (x[k] - bounds_[k].lo) / spacing(k);
            double i = std::floor(t + 0.5);
            if (t - std::floor(t) == 0.5) i = std::floor(t); // tie: smaller coordinate
            if (i < 0) i = 0;
            if (i > static_cast<double>(ppa_ - 1)) i = static_cast<double>(ppa_ - 1);
            idx = idx * static_cast<std::size_t>(ppa_) + static_cast<std::size_t>(i);
        }
        return idx;
    }

    bool operator==(const Grid& o) const {
        if (ppa_ != o.ppa_ || bounds_.size() != o.bounds_.size()) return false;
        for (std::size_t k = 0; k < bounds_.size(); ++k) {
            if (bounds_[k].lo != o.bounds_[k].lo || bounds_[k].hi != o.bounds_[k].hi) return false;
        }
        return true;
    }

  private:
    std::vector<Interval> bounds_;
    int ppa_;
    Vec points_; // flat [size * dim], lexicographic
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(std::vector<Interval> bounds, int points_per_axis) {
    return std::make_shared<const Grid>(std::move(bounds), points_per_axis);
}

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b)) throw std::invalid_argument(std::string(where) + ": operands live on different grids");
}

} // namespace wdro
