#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/cost.hpp"
#include "wdro/dual.hpp"
#include "wdro/measures.hpp"
#include "wdro/scalar_min.hpp"

namespace wdro {

/// Regularization weights: eps scales the KL term subtracted from the
/// objective, delta the KL term inside the transport-budget constraint,
/// sigma the width of the smoothing reference coupling.
struct RegParams {
    double eps = 0.0;
    double delta = 0.0;
    double sigma = 1.0;

    RegParams() = default;
    RegParams(double e, double d, double s) : eps(e), delta(d), sigma(s) {
        if (!(eps >= 0.0) || !(delta >= 0.0))
            throw std::invalid_argument("RegParams: eps, delta must be >= 0");
        if (!(sigma > 0.0)) throw std::invalid_argument("RegParams: sigma must be > 0");
    }
};

struct EntropicSolution {
    DualSolution dual;
    Coupling primal_coupling;
    double primal_value = 0.0;      // E_{pi*_2} f - eps KL(pi* | pi0)
    double feasibility_slack = 0.0; // rho - E_{pi*} c - delta KL(pi* | pi0)
    double duality_gap = 0.0;       // dual value - primal value
};

/// Below this beta the smoothed row reduces to its exact maximum.
inline constexpr double kBetaFloor = 1e-12;

namespace detail {

/**
 * E_{x~P}[ beta * log E_{y~pi0(.|x)} exp((f(y) - lam c(x, y)) / beta) ],
 * the smoothed Lagrangian without the lam*rho term. Each row is reduced with
 * a max-shifted log-sum-exp; rows are independent and gathered in index
 * order, so the result does not depend on the worker count. At beta below
 * kBetaFloor the row value is the exact maximum over the row support.
 */
inline double smoothed_lagrangian(const ProblemSpec& prob, const ReferenceCoupling& pi0,
                                  double lam, double beta) {
    const Grid& grid = *prob.grid;
    const std::size_t n = grid.size();
    const Mat& cond = pi0.conditional();
    Vec row_value(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        if (prob.p[i] == 0.0) return;
        const auto x = grid.point(i);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (cond(i, j) == 0.0) continue;
            const double a = prob.f[j] - lam * cost(prob.cost, x, grid.point(j));
            if (a > m) m = a;
        }
        if (beta < kBetaFloor) {
            row_value[i] = m;
            return;
        }
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = cond(i, j);
            if (w == 0.0) continue;
            const double a = prob.f[j] - lam * cost(prob.cost, x, grid.point(j));
            s += w * std::exp((a - m) / beta);
        }
        row_value[i] = m + beta * std::log(s);
    });
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += prob.p[i] * row_value[i];
    return acc;
}

} // namespace detail

/**
 * Entropic dual objective
 *
 *   D(lam) = lam rho + beta E_{x~P} log E_{y~pi0(.|x)} e^{(f(y)-lam c(x,y))/beta},
 *
 * with beta = eps + lam delta. When beta underflows the floor, the log-sum-exp
 * degenerates to the row maximum, which is the exact beta -> 0 limit and
 * coincides with the unregularized dual integrand.
 */
inline double entropic_dual_value(const ProblemSpec& prob, const RegParams& reg,
                                  const ReferenceCoupling& pi0, double lam) {
    if (!(lam >= 0.0)) throw std::invalid_argument("entropic_dual_value: lam must be >= 0");
    if (reg.eps + reg.delta <= 0.0)
        throw ConfigError("entropic_dual_value: eps + delta must be > 0 (use the cost-regularized "
                          "solver for the unregularized problem)");
    const double beta = reg.eps + lam * reg.delta;
    return lam * prob.rho + detail::smoothed_lagrangian(prob, pi0, lam, beta);
}

/**
 * Explicit bound on the optimal dual variable:
 * lambda_bar = 2 sup|f| / (rho - E_{pi0} c), valid under strict feasibility
 * E_{pi0} c < rho. Infeasible reference couplings are rejected with a hint
 * to shrink sigma.
 */
inline double lambda_bar(const ProblemSpec& prob, const ReferenceCoupling& pi0) {
    const double ref_cost = expected_cost(pi0, prob.cost);
    if (!(ref_cost < prob.rho))
        throw InfeasibleError("lambda_bar: E_{pi0} c >= rho: decrease sigma (calibrate_sigma)");
    return 2.0 * prob.f_sup_abs() / (prob.rho - ref_cost);
}

/**
 * Optimal primal plan from the optimal dual variable: per source row,
 * exponential tilting of the reference conditional,
 *
 *   pi*(y | x)  proportional to  exp((f(y) - lam* c(x, y)) / beta*) pi0(y | x),
 *
 * stabilized by the row maximum, renormalized, and scaled by P.
 */
inline Coupling recover_primal(const ProblemSpec& prob, const RegParams& reg,
                               const ReferenceCoupling& pi0, double lambda_star) {
    const double beta = reg.eps + lambda_star * reg.delta;
    if (!(beta > 0.0))
        throw std::invalid_argument("recover_primal: eps + lambda_star * delta must be > 0");
    const Grid& grid = *prob.grid;
    const std::size_t n = grid.size();
    const Mat& cond = pi0.conditional();
    Mat w(n, n);
    parallel_for(n, [&](std::size_t i) {
        if (prob.p[i] == 0.0) return;
        const auto x = grid.point(i);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (cond(i, j) == 0.0) continue;
            const double a = prob.f[j] - lambda_star * cost(prob.cost, x, grid.point(j));
            if (a > m) m = a;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c0 = cond(i, j);
            if (c0 == 0.0) continue;
            const double a = prob.f[j] - lambda_star * cost(prob.cost, x, grid.point(j));
            const double t = c0 * std::exp((a - m) / beta);
            w(i, j) = t;
            total += t;
        }
        for (std::size_t j = 0; j < n; ++j) w(i, j) *= prob.p[i] / total;
    });
    return normalized_coupling(prob.grid, std::move(w));
}

struct DualityReport {
    double primal_value = 0.0;
    double gap = 0.0;
    double slack = 0.0;
};

/**
 * Primal-side diagnostics for a recovered plan:
 *   primal value = E_{pi*_2} f - eps KL(pi* | pi0),
 *   slack        = rho - E_{pi*} c - delta KL(pi* | pi0),
 *   gap          = dual value - primal value.
 * Complementary slackness demands lam* * slack ~ 0. KL uses the 0 log 0 = 0
 * convention; rows where pi0 vanishes contribute nothing because the tilt
 * preserves zeros.
 */
inline DualityReport verify_duality(const ProblemSpec& prob, const RegParams& reg,
                                    const ReferenceCoupling& pi0, double dual_value,
                                    const Coupling& pi_star) {
    const DiscreteMeasure second = marginal(pi_star, MarginalAxis::second);
    const double kl = kl_divergence(pi_star, pi0.joint());
    DualityReport rep;
    rep.primal_value = expectation(second, prob.f) - reg.eps * kl;
    rep.slack = prob.rho - expected_cost(pi_star, prob.cost) - reg.delta * kl;
    rep.gap = dual_value - rep.primal_value;
    return rep;
}

/**
 * Full entropic solve: golden-section minimization of the convex dual over
 * [0, lambda_bar] to lam tolerance 1e-10, followed by primal recovery and
 * duality verification.
 *
 * The dual derivative equals the feasibility slack of the recovered plan, so
 * a probe landing a hair left of the exact minimizer reports a slightly
 * negative slack. When that happens the multiplier is stepped right inside
 * the final bracket (never past lambda_bar) until the plan is feasible; the
 * dual value moves by O(step^2).
 */
inline EntropicSolution solve_entropic(const ProblemSpec& prob, const RegParams& reg,
                                       const ReferenceCoupling& pi0) {
    if (reg.eps + reg.delta <= 0.0)
        throw ConfigError("solve_entropic: eps + delta must be > 0");
    const double lb = lambda_bar(prob, pi0);

    double lambda_star = 0.0;
    if (lb > 0.0) {
        const auto d = [&](double lam) { return entropic_dual_value(prob, reg, pi0, lam); };
        const ScalarMinResult res = golden_section_min(d, 0.0, lb, 1e-10);
        lambda_star = res.x;
    }
    // With eps = 0 the tilt is undefined at lam = 0; an infinitesimal
    // multiplier keeps beta positive and leaves the value unchanged to
    // within the lam tolerance.
    if (reg.eps == 0.0 && lambda_star < 1e-9) lambda_star = 1e-9;

    const auto evaluate = [&](double lam) {
        const double dv = entropic_dual_value(prob, reg, pi0, lam);
        Coupling plan = recover_primal(prob, reg, pi0, lam);
        DualityReport rep = verify_duality(prob, reg, pi0, dv, plan);
        return std::make_pair(std::move(plan), std::make_pair(dv, rep));
    };

    auto [plan, dv_rep] = evaluate(lambda_star);
    double dual_value = dv_rep.first;
    DualityReport rep = dv_rep.second;
    double step = 1e-10;
    while (rep.slack < 0.0 && lambda_star < lb) {
        lambda_star = std::min(lb, lambda_star + step);
        step *= 2.0;
        auto [plan2, dv_rep2] = evaluate(lambda_star);
        plan = std::move(plan2);
        dual_value = dv_rep2.first;
        rep = dv_rep2.second;
    }

    EntropicSolution sol{DualSolution{}, std::move(plan), rep.primal_value, rep.slack, rep.gap};
    sol.dual.lambda_star = lambda_star;
    sol.dual.value = dual_value;
    sol.dual.lambda_bound = lb;
    sol.dual.gap = rep.gap;
    sol.dual.inner_argmax.resize(prob.n());
    for (std::size_t i = 0; i < prob.n(); ++i)
        sol.dual.inner_argmax[i] = inner_sup(prob, i, lambda_star).second;
    return sol;
}

} // namespace wdro
