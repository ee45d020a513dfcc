#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/cost.hpp"
#include "wdro/dual.hpp"
#include "wdro/entropic.hpp"
#include "wdro/measures.hpp"

namespace wdro {

/**
 * The domain regularity constant
 *
 *   V = inf over grid points x and radii D in (0, d] of vol(box n B(x, D)) / D^d,
 *
 * with D sampled on a 64-point log grid. Box-ball intersections are exact for
 * the sup norm; l1/l2 balls use a 10^4-cell midpoint rule over the box.
 * Positive for every box, which is what the approximation bounds need.
 */
inline double volume_constant(const Grid& grid, Norm norm) {
    const int d = grid.dim();
    const auto& bounds = grid.bounds();

    const auto exact_linf = [&](std::span<const double> x, double radius) {
        double v = 1.0;
        for (int k = 0; k < d; ++k) {
            const double lo = std::max(bounds[k].lo, x[k] - radius);
            const double hi = std::min(bounds[k].hi, x[k] + radius);
            v *= std::max(0.0, hi - lo);
        }
        return v;
    };
    // ~10^4-cell midpoint rule over the ball's bounding window clipped to the
    // box, so the resolution tracks the ball rather than the box
    const int cells_per_axis = d == 1 ? 10000 : 100;
    const auto quadrature = [&](std::span<const double> x, double radius) {
        Vec lo(d), h(d);
        double cellvol = 1.0;
        for (int k = 0; k < d; ++k) {
            lo[k] = std::max(bounds[k].lo, x[k] - radius);
            const double hi = std::min(bounds[k].hi, x[k] + radius);
            if (hi <= lo[k]) return 0.0;
            h[k] = (hi - lo[k]) / cells_per_axis;
            cellvol *= h[k];
        }
        double v = 0.0;
        Vec mid(d);
        if (d == 1) {
            for (int i = 0; i < cells_per_axis; ++i) {
                mid[0] = lo[0] + (i + 0.5) * h[0];
                if (norm_dist(norm, mid, x) <= radius) v += cellvol;
            }
        } else {
            for (int i = 0; i < cells_per_axis; ++i) {
                mid[0] = lo[0] + (i + 0.5) * h[0];
                for (int j = 0; j < cells_per_axis; ++j) {
                    mid[1] = lo[1] + (j + 0.5) * h[1];
                    if (norm_dist(norm, mid, x) <= radius) v += cellvol;
                }
            }
        }
        return v;
    };

    const double d_real = static_cast<double>(d);
    double vmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.point(i);
        for (int k = 0; k < 64; ++k) {
            // log-spaced radii from d * 1e-3 up to d
            const double radius = d_real * std::pow(10.0, -3.0 * (1.0 - k / 63.0));
            const double vol =
                norm == Norm::linf ? exact_linf(x, radius) : quadrature(x, radius);
            const double ratio = vol / std::pow(radius, d_real);
            if (ratio < vmin) vmin = ratio;
        }
    }
    return vmin;
}

/**
 * The block approximation plan: each source row restricts the reference
 * conditional to grid points within delta_radius (in the cost norm) of that
 * row's target point, renormalizes, and scales by P. A row whose ball
 * captures nothing falls back to a point mass at the nearest captured point.
 */
inline Coupling block_approximation(const std::vector<std::size_t>& targets,
                                    const ReferenceCoupling& pi0, double delta_radius,
                                    Norm norm) {
    if (!(delta_radius > 0.0))
        throw std::invalid_argument("block_approximation: delta_radius must be > 0");
    const Grid& grid = pi0.grid();
    const std::size_t n = grid.size();
    if (targets.size() != n)
        throw std::invalid_argument("block_approximation: one target index per source point");
    const DiscreteMeasure& p = pi0.first_marginal();
    const Mat& cond = pi0.conditional();
    Mat w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] == 0.0) continue;
        const auto y_star = grid.point(targets[i]);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (cond(i, j) > 0.0 && norm_dist(norm, grid.point(j), y_star) <= delta_radius) {
                w(i, j) = cond(i, j);
                total += cond(i, j);
            }
        }
        if (total == 0.0) {
            // nearest captured point (the target itself whenever it has mass)
            std::size_t jbest = targets[i];
            double dbest = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) {
                const double dist = norm_dist(norm, grid.point(j), y_star);
                if (cond(i, j) > 0.0 && dist < dbest) {
                    dbest = dist;
                    jbest = j;
                }
            }
            w(i, jbest) = p[i];
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) w(i, j) *= p[i] / total;
    }
    return normalized_coupling(p.grid_ptr(), std::move(w));
}

struct LagrangianGap {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/**
 * Executable form of the Lagrangian comparison bound: at a fixed multiplier,
 * the cost-regularized Lagrangian at parameters (eps/sigma, delta/sigma) is
 * at most the entropic Lagrangian plus
 *
 *   (L(f) + lam L(c)) D + (eps + lam delta)(D^p / sigma - log(V D^d) + E_P log I_sigma),
 *
 * where I_sigma(x) is the reference-density normalization integral,
 * discretized as the grid sum times the cell volume. The comparison carries a
 * 1e-3 relative slack for grid discretization.
 */
inline LagrangianGap lagrangian_gap_check(const ProblemSpec& prob, const RegParams& reg,
                                          const ReferenceCoupling& pi0, double lam,
                                          double delta_radius) {
    if (!(lam >= 0.0)) throw std::invalid_argument("lagrangian_gap_check: lam must be >= 0");
    if (!(delta_radius > 0.0))
        throw std::invalid_argument("lagrangian_gap_check: delta_radius must be > 0");
    const Grid& grid = *prob.grid;
    const std::size_t n = grid.size();
    const double beta = reg.eps + lam * reg.delta;
    const double sigma = pi0.sigma();

    // cost-regularized Lagrangian at (eps/sigma, delta/sigma): deterministic
    // rows are optimal, so it is an expectation of row maxima
    const double slope = lam + beta / sigma;
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (prob.p[i] == 0.0) continue;
        lhs += prob.p[i] * inner_sup(prob, i, slope).first;
    }

    // entropic Lagrangian by the tilted closed form
    const double entropic = detail::smoothed_lagrangian(prob, pi0, lam, beta);

    const double lip_f = lipschitz_estimate(grid, prob.f);
    const double lip_c = cost_lipschitz_bound(grid, prob.cost);
    const double v_const = volume_constant(grid, prob.cost.norm);

    const double scale = std::pow(2.0, prob.cost.p - 1.0) * sigma;
    double e_log_i = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (prob.p[i] == 0.0) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += std::exp(-cost(prob.cost, grid.point(i), grid.point(j)) / scale);
        e_log_i += prob.p[i] * std::log(s * grid.cell_volume());
    }

    const double d_real = static_cast<double>(grid.dim());
    const double rhs = entropic + (lip_f + lam * lip_c) * delta_radius +
                       beta * (std::pow(delta_radius, prob.cost.p) / sigma -
                               std::log(v_const * std::pow(delta_radius, d_real)) + e_log_i);

    LagrangianGap out{lhs, rhs, false};
    out.holds = lhs <= rhs + 1e-3 * (1.0 + std::abs(rhs));
    return out;
}

/**
 * The domain-and-smoothing constant appearing in the explicit approximation
 * bound: min( log(vol(box)/V), log(I_sigma/V) ) with
 * I_sigma = sigma^{d/p} * integral over R^d of exp(-||z||^p / 2^{p-1}) dz.
 * Reported as a diagnostic; the rate checks gate on the fitted constant
 * instead because grid discretization perturbs these continuum quantities.
 */
inline double approximation_constant(const Grid& grid, const CostSpec& cost, double sigma) {
    const int d = grid.dim();
    const double v = volume_constant(grid, cost.norm);
    // integrate the unit-scale density on a window where the tail is < e^-40
    const double z_max = std::pow(std::pow(2.0, cost.p - 1.0) * 40.0, 1.0 / cost.p);
    double integral = 0.0;
    if (d == 1) {
        const int cells = 200000;
        const double h = 2.0 * z_max / cells;
        const Vec origin{0.0};
        Vec z(1);
        for (int i = 0; i < cells; ++i) {
            z[0] = -z_max + (i + 0.5) * h;
            const double r = norm_dist(cost.norm, z, origin);
            integral += h * std::exp(-std::pow(r, cost.p) / std::pow(2.0, cost.p - 1.0));
        }
    } else {
        const int cells = 1000;
        const double h = 2.0 * z_max / cells;
        const Vec origin{0.0, 0.0};
        Vec z(2);
        for (int i = 0; i < cells; ++i) {
            z[0] = -z_max + (i + 0.5) * h;
            for (int j = 0; j < cells; ++j) {
                z[1] = -z_max + (j + 0.5) * h;
                const double r = norm_dist(cost.norm, z, origin);
                integral +=
                    h * h * std::exp(-std::pow(r, cost.p) / std::pow(2.0, cost.p - 1.0));
            }
        }
    }
    const double i_sigma = std::pow(sigma, static_cast<double>(d) / cost.p) * integral;
    return std::min(std::log(grid.box_volume() / v), std::log(i_sigma / v));
}

struct SweepRow {
    double eps = 0.0;
    double delta = 0.0;
    double lambda_star = 0.0;
    double lambda_bar = 0.0;
    double value_entropic = 0.0;
    double value_unreg = 0.0;
    double gap = 0.0;
    double eta = 0.0;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double c_fit = std::numeric_limits<double>::quiet_NaN();
};

/**
 * Runs the entropic solver over the cross product of the eps and delta lists
 * (input order) against the unregularized optimum, recording per-row gaps
 * and eta = eps + lambda_bar * delta. The fitted rate constant is
 *
 *   C_fit = max over rows with eta < 1/e of gap / (d eta log(1/eta)).
 *
 * Every gap must be nonnegative within 1e-8; a violation means a solver bug,
 * so it is an error here, not a report entry.
 */
inline SweepReport sweep(const ProblemSpec& prob, const ReferenceCoupling& pi0,
                         const Vec& eps_list, const Vec& delta_list) {
    SweepReport report;
    const double d_real = static_cast<double>(prob.grid->dim());
    const double lb = lambda_bar(prob, pi0);
    for (double eps : eps_list) {
        for (double delta : delta_list) {
            const DualSolution unreg = solve_cost_reg(prob, 0.0, 0.0);
            const EntropicSolution ent = solve_entropic(prob, RegParams(eps, delta, pi0.sigma()), pi0);
            SweepRow row;
            row.eps = eps;
            row.delta = delta;
            row.lambda_star = ent.dual.lambda_star;
            row.lambda_bar = lb;
            row.value_entropic = ent.dual.value;
            row.value_unreg = unreg.value;
            row.gap = unreg.value - ent.dual.value;
            row.eta = eps + lb * delta;
            if (row.gap < -1e-8)
                throw std::runtime_error("sweep: negative regularization gap (solver bug)");
            if (!(row.eta > 0.0)) throw std::invalid_argument("sweep: eta must be positive");
            report.rows.push_back(row);
        }
    }
    double cfit = std::numeric_limits<double>::quiet_NaN();
    const double inv_e = 1.0 / std::exp(1.0);
    for (const SweepRow& row : report.rows) {
        if (row.eta < inv_e) {
            const double c = row.gap / (d_real * row.eta * std::log(1.0 / row.eta));
            if (std::isnan(cfit) || c > cfit) cfit = c;
        }
    }
    report.c_fit = cfit;
    return report;
}

struct RadiusCompare {
    double f_rho = 0.0;
    double f_shrunk = 0.0;
    double bound = 0.0;
    bool holds = false;
};

/**
 * Compares the unregularized optimum at radius rho against the shrunk radius
 * rho / (1 + delta/sigma) through the LP oracle, and checks the geodesic
 * bound  F_rho - F_shrunk <= L(f) (t^p rho)^{1/p}  with
 * t = 1 - (1 + delta/sigma)^{-1/p}.
 */
inline RadiusCompare radius_compare(const ProblemSpec& prob, double delta, double sigma) {
    if (!(delta >= 0.0)) throw std::invalid_argument("radius_compare: delta must be >= 0");
    if (!(sigma > 0.0)) throw std::invalid_argument("radius_compare: sigma must be > 0");
    const double ratio = 1.0 + delta / sigma;
    RadiusCompare out;
    out.f_rho = primal_lp_unreg(prob).first;
    out.f_shrunk = primal_lp_unreg(prob.with_rho(prob.rho / ratio)).first;
    const double t = 1.0 - std::pow(ratio, -1.0 / prob.cost.p);
    const double lip_f = lipschitz_estimate(*prob.grid, prob.f);
    out.bound = lip_f * std::pow(std::pow(t, prob.cost.p) * prob.rho, 1.0 / prob.cost.p);
    out.holds = out.f_rho >= out.f_shrunk - 1e-9 && out.f_rho - out.f_shrunk <= out.bound + 1e-8;
    return out;
}

} // namespace wdro
