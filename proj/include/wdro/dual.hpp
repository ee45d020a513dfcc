#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/cost.hpp"
#include "wdro/grid.hpp"
#include "wdro/measures.hpp"
#include "wdro/scalar_min.hpp"
#include "wdro/simplex.hpp"

namespace wdro {

/**
 * A distributionally robust instance on a grid: worst-case expectation of f
 * over distributions within transport budget rho of P.
 */
struct ProblemSpec {
    GridPtr grid;
    DiscreteMeasure p;
    Vec f;        // objective values per grid point
    CostSpec cost;
    double rho = 0.0;

    ProblemSpec(GridPtr g, DiscreteMeasure p_in, Vec f_in, CostSpec c, double rho_in)
        : grid(std::move(g)), p(std::move(p_in)), f(std::move(f_in)), cost(c), rho(rho_in) {
        if (!grid) throw std::invalid_argument("ProblemSpec: null grid");
        require_same_grid(*grid, p.grid(), "ProblemSpec");
        if (f.size() != grid->size())
            throw std::invalid_argument("ProblemSpec: objective length != grid size");
        for (double v : f)
            if (!std::isfinite(v)) throw std::invalid_argument("ProblemSpec: objective not finite");
        if (!(rho > 0.0)) throw std::invalid_argument("ProblemSpec: rho must be > 0");
    }

    std::size_t n() const { return grid->size(); }

    double f_max() const { return *std::max_element(f.begin(), f.end()); }
    double f_min() const { return *std::min_element(f.begin(), f.end()); }
    double f_osc() const { return f_max() - f_min(); }
    double f_sup_abs() const { return std::max(std::abs(f_max()), std::abs(f_min())); }

    ProblemSpec with_rho(double new_rho) const { return ProblemSpec(grid, p, f, cost, new_rho); }
};

struct DualSolution {
    double lambda_star = 0.0;
    double value = 0.0;
    std::vector<std::size_t> inner_argmax; // per source point, at lambda_star
    double lambda_bound = 0.0;             // right end of the search interval
    double gap = std::numeric_limits<double>::quiet_NaN(); // primal - dual when an oracle ran
};

/**
 * Inner maximization of the dual integrand at one source point:
 * max over grid points y of f(y) - lam * c(x, y). Ties break toward the
 * smallest grid index so runs are bit-reproducible.
 */
inline std::pair<double, std::size_t> inner_sup(const ProblemSpec& prob, std::size_t x_index,
                                                double lam) {
    if (!(lam >= 0.0)) throw std::invalid_argument("inner_sup: lam must be >= 0");
    const Grid& grid = *prob.grid;
    const auto x = grid.point(x_index);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double v = prob.f[j] - lam * cost(prob.cost, x, grid.point(j));
        if (v > best) {
            best = v;
            arg = j;
        }
    }
    return {best, arg};
}

/**
 * Cost-regularized dual function
 *
 *   g(lam) = lam * rho + E_P[ max_y f(y) - (eps + (1 + delta) lam) c(x, y) ],
 *
 * the unregularized dual when eps = delta = 0. Convex and piecewise linear
 * in lam. The expectation reduces left to right in grid order.
 */
inline double dual_value_cost_reg(const ProblemSpec& prob, double eps, double delta, double lam) {
    if (!(lam >= 0.0)) throw std::invalid_argument("dual_value_cost_reg: lam must be >= 0");
    if (!(eps >= 0.0) || !(delta >= 0.0))
        throw std::invalid_argument("dual_value_cost_reg: eps, delta must be >= 0");
    const double slope = eps + (1.0 + delta) * lam;
    double acc = 0.0;
    for (std::size_t i = 0; i < prob.n(); ++i) {
        if (prob.p[i] == 0.0) continue;
        acc += prob.p[i] * inner_sup(prob, i, slope).first;
    }
    return lam * prob.rho + acc;
}

/**
 * Minimizes the convex dual g over lam in [0, lambda_hi] by golden-section
 * search to absolute lam tolerance 1e-9.
 *
 * lambda_hi = osc(f)/rho + 1: the diagonal plan gives g(lam) >= lam rho + E_P f
 * while g(lam*) <= g(0) = max f, so the minimizer satisfies
 * lam* <= (max f - E_P f)/rho <= osc(f)/rho.
 */
inline DualSolution solve_cost_reg(const ProblemSpec& prob, double eps, double delta) {
    const double lambda_hi = prob.f_osc() / prob.rho + 1.0;
    const auto g = [&](double lam) { return dual_value_cost_reg(prob, eps, delta, lam); };
    const ScalarMinResult res = golden_section_min(g, 0.0, lambda_hi, 1e-9);

    DualSolution sol;
    sol.lambda_star = res.x;
    sol.value = res.fx;
    sol.lambda_bound = lambda_hi;
    sol.inner_argmax.resize(prob.n());
    const double slope = eps + (1.0 + delta) * sol.lambda_star;
    for (std::size_t i = 0; i < prob.n(); ++i) sol.inner_argmax[i] = inner_sup(prob, i, slope).second;
    return sol;
}

inline std::vector<std::size_t> support_of(const DiscreteMeasure& m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] > 0.0) idx.push_back(i);
    return idx;
}

/**
 * Brute-force primal LP for the unregularized problem:
 * maximize E_{pi_2} f over couplings with first marginal P and E_pi c <= rho.
 * A verification oracle; the grid is capped at 64 points.
 */
inline std::pair<double, Coupling> primal_lp_unreg(const ProblemSpec& prob) {
    const Grid& grid = *prob.grid;
    const std::size_t n = grid.size();
    if (n > 64) throw std::invalid_argument("primal_lp_unreg: grid exceeds the 64-point oracle cap");

    const auto rows = support_of(prob.p);
    const std::size_t ni = rows.size();
    const std::size_t nv = ni * n + 1; // plan cells + budget slack

    Mat a(ni + 1, nv);
    Vec b(ni + 1, 0.0), c(nv, 0.0);
    for (std::size_t i = 0; i < ni; ++i) {
        b[i] = prob.p[rows[i]];
        const auto x = grid.point(rows[i]);
        for (std::size_t j = 0; j < n; ++j) {
            a(i, i * n + j) = 1.0;
            a(ni, i * n + j) = cost(prob.cost, x, grid.point(j));
            c[i * n + j] = -prob.f[j]; // maximize
        }
    }
    a(ni, nv - 1) = 1.0;
    b[ni] = prob.rho;

    const LpResult lp = solve_lp_eq(a, b, c);
    if (lp.status != LpStatus::optimal)
        throw std::runtime_error("primal_lp_unreg: LP did not reach optimality");

    Mat w(n, n);
    for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < n; ++j) w(rows[i], j) = std::max(0.0, lp.x[i * n + j]);
    return {-lp.value, normalized_coupling(prob.grid, std::move(w))};
}

} // namespace wdro
