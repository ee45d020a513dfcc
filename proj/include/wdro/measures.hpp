#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/grid.hpp"

namespace wdro {

/**
 * Probability weights on the points of a grid. Immutable after construction;
 * the constructor enforces nonnegativity and unit mass (within kWeightTol).
 * Renormalization is always explicit via normalized(), never silent.
 */
class DiscreteMeasure {
  public:
    DiscreteMeasure(GridPtr grid, Vec weights) : grid_(std::move(grid)), w_(std::move(weights)) {
        if (!grid_) throw std::invalid_argument("DiscreteMeasure: null grid");
        if (w_.size() != grid_->size())
            throw std::invalid_argument("DiscreteMeasure: weight count != grid size");
        double total = 0.0;
        for (double v : w_) {
            if (!(v >= 0.0)) throw std::invalid_argument("DiscreteMeasure: negative weight");
            total += v;
        }
        if (std::abs(total - 1.0) > kWeightTol)
            throw std::invalid_argument("DiscreteMeasure: weights sum to " + std::to_string(total) +
                                        ", not 1 within 1e-12");
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const Vec& weights() const { return w_; }
    double operator[](std::size_t i) const { return w_[i]; }
    std::size_t size() const { return w_.size(); }

    std::size_t support_size() const {
        std::size_t n = 0;
        for (double v : w_) n += (v > 0.0);
        return n;
    }

  private:
    GridPtr grid_;
    Vec w_;
};

/// Rescales raw nonnegative weights to unit mass and wraps them in a measure.
inline DiscreteMeasure normalized(GridPtr grid, Vec raw) {
    double total = 0.0;
    for (double v : raw) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("normalized: total mass must be positive");
    for (double& v : raw) v /= total;
    return DiscreteMeasure(std::move(grid), std::move(raw));
}

/**
 * Joint probability weights w[i][j] on grid x grid (source i, target j).
 * Total mass must be 1 within kWeightTol; entries nonnegative.
 */
class Coupling {
  public:
    Coupling(GridPtr grid, Mat weights) : grid_(std::move(grid)), w_(std::move(weights)) {
        if (!grid_) throw std::invalid_argument("Coupling: null grid");
        if (w_.rows != grid_->size() || w_.cols != grid_->size())
            throw std::invalid_argument("Coupling: weight matrix shape != grid x grid");
        double total = 0.0;
        for (double v : w_.data) {
            if (!(v >= 0.0)) throw std::invalid_argument("Coupling: negative weight");
            total += v;
        }
        if (std::abs(total - 1.0) > kWeightTol)
            throw std::invalid_argument("Coupling: weights sum to " + std::to_string(total) +
                                        ", not 1 within 1e-12");
    }

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const Mat& weights() const { return w_; }
    double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
    std::size_t n() const { return w_.rows; }

  private:
    GridPtr grid_;
    Mat w_;
};

inline Coupling normalized_coupling(GridPtr grid, Mat raw) {
    double total = 0.0;
    for (double v : raw.data) total += v;
    if (!(total > 0.0)) throw std::invalid_argument("normalized_coupling: total mass must be positive");
    for (double& v : raw.data) v /= total;
    return Coupling(std::move(grid), std::move(raw));
}

enum class MarginalAxis { first, second };

/// Row sums (first marginal) or column sums (second marginal) of a coupling.
inline DiscreteMeasure marginal(const Coupling& c, MarginalAxis axis) {
    const std::size_t n = c.n();
    Vec m(n, 0.0);
    if (axis == MarginalAxis::first) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += c(i, j);
            m[i] = s;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) m[j] += c(i, j);
        }
    }
    return DiscreteMeasure(c.grid_ptr(), std::move(m));
}

/// E_measure[values]: dot product in fixed index order.
inline double expectation(const DiscreteMeasure& m, const Vec& values) {
    if (values.size() != m.size())
        throw std::invalid_argument("expectation: values length != grid size");
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * values[i];
    return s;
}

/**
 * KL(num | base) = sum over cells with num > 0 of num * log(num / base),
 * with the 0 log 0 = 0 convention. Returns +inf when num puts mass where
 * base has none (absolute continuity failure).
 */
inline double kl_divergence(const Coupling& num, const Coupling& base) {
    require_same_grid(num.grid(), base.grid(), "kl_divergence");
    const std::size_t n = num.n();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double w = num(i, j);
            if (w == 0.0) continue;
            const double b = base(i, j);
            if (b == 0.0) return std::numeric_limits<double>::infinity();
            s += w * std::log(w / b);
        }
    }
    return s;
}

/**
 * Empirical measure from raw sample coordinates: every sample snaps to its
 * nearest grid point (ties toward the lexicographically smaller point) and
 * carries weight 1/n; duplicates accumulate. Out-of-bounds samples are
 * rejected with the offending row index.
 */
inline DiscreteMeasure load_empirical(GridPtr grid, const std::vector<Vec>& rows) {
    if (rows.empty()) throw std::invalid_argument("load_empirical: no samples");
    Vec w(grid->size(), 0.0);
    const double unit = 1.0 / static_cast<double>(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Vec& x = rows[r];
        if (x.size() != static_cast<std::size_t>(grid->dim()))
            throw std::invalid_argument("load_empirical: row " + std::to_string(r) +
                                        " has wrong dimension");
        if (!grid->contains(std::span<const double>(x.data(), x.size())))
            throw std::invalid_argument("load_empirical: row " + std::to_string(r) +
                                        " is outside the grid bounds");
        w[grid->nearest_index(std::span<const double>(x.data(), x.size()))] += unit;
    }
    return DiscreteMeasure(std::move(grid), std::move(w));
}

/**
 * Reads samples from CSV: one sample per line, dim comma-separated decimal
 * fields; lines starting with '#' are skipped. Parse failures name the line.
 */
inline std::vector<Vec> read_samples_csv(std::istream& in, int dim) {
    std::vector<Vec> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        Vec row;
        std::string field;
        while (std::getline(ss, field, ',')) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(field, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("CSV line " + std::to_string(lineno) +
                                            ": field '" + field + "' is not a number");
            }
            row.push_back(v);
        }
        if (row.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(dim) + " fields, got " +
                                        std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<Vec> read_samples_csv(const std::string& path, int dim) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open CSV file: " + path);
    return read_samples_csv(in, dim);
}

/// P tensor Q: w[i][j] = P[i] * Q[j].
inline Coupling product_coupling(const DiscreteMeasure& p, const DiscreteMeasure& q) {
    require_same_grid(p.grid(), q.grid(), "product_coupling");
    const std::size_t n = p.size();
    Mat w(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w(i, j) = p[i] * q[j];
    return Coupling(p.grid_ptr(), std::move(w));
}

/// Identity transport: all of P's mass stays in place.
inline Coupling diagonal_coupling(const DiscreteMeasure& p) {
    const std::size_t n = p.size();
    Mat w(n, n);
    for (std::size_t i = 0; i < n; ++i) w(i, i) = p[i];
    return Coupling(p.grid_ptr(), std::move(w));
}

} // namespace wdro
