#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/cost.hpp"
#include "wdro/measures.hpp"
#include "wdro/simplex.hpp"

namespace wdro {

struct OtResult {
    double value = 0.0;
    Coupling coupling;
    int iterations = 0;
    bool converged = false;
    Vec potential_u; // sinkhorn potentials on the full grid (zero off-support)
    Vec potential_v;
};

namespace detail {

inline std::vector<std::size_t> support_indices(const DiscreteMeasure& m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] > 0.0) idx.push_back(i);
    return idx;
}

} // namespace detail

/**
 * Exact discrete optimal transport between P and Q under cost ||.||^p,
 * solved as a dense LP over the transport polytope. A verification oracle:
 * supports are capped at 64 atoms per side.
 */
inline OtResult wasserstein_exact(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                  const CostSpec& spec) {
    require_same_grid(p.grid(), q.grid(), "wasserstein_exact");
    const auto si = detail::support_indices(p);
    const auto sj = detail::support_indices(q);
    if (si.size() > 64 || sj.size() > 64)
        throw std::invalid_argument("wasserstein_exact: support exceeds the 64-atom oracle cap");

    const Grid& grid = p.grid();
    const std::size_t ni = si.size(), nj = sj.size();
    const std::size_t nv = ni * nj;

    // Row constraints for every source atom, column constraints for all but
    // the last target atom (the dropped one is implied by total mass).
    const std::size_t mrows = ni + (nj - 1);
    Mat a(mrows, nv);
    Vec b(mrows, 0.0), c(nv, 0.0);
    for (std::size_t i = 0; i < ni; ++i) {
        b[i] = p[si[i]];
        for (std::size_t j = 0; j < nj; ++j) {
            a(i, i * nj + j) = 1.0;
            c[i * nj + j] = cost(spec, grid.point(si[i]), grid.point(sj[j]));
        }
    }
    for (std::size_t j = 0; j + 1 < nj; ++j) {
        b[ni + j] = q[sj[j]];
        for (std::size_t i = 0; i < ni; ++i) a(ni + j, i * nj + j) = 1.0;
    }

    const LpResult lp = solve_lp_eq(a, b, c);
    if (lp.status != LpStatus::optimal)
        throw std::runtime_error("wasserstein_exact: transport LP did not reach optimality");

    Mat w(grid.size(), grid.size());
    for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < nj; ++j) w(si[i], sj[j]) = std::max(0.0, lp.x[i * nj + j]);
    OtResult r{lp.value, normalized_coupling(p.grid_ptr(), std::move(w)), lp.iterations, true,
               Vec{}, Vec{}};
    return r;
}

/**
 * Entropic optimal transport between fixed marginals P and Q:
 *
 *   min over couplings of  E_pi c + eps * KL(pi | P (x) Q),
 *
 * solved with alternating log-domain potential updates so that eps down to
 * 1e-3 and below stays stable. Stops when both marginal L1 errors are at
 * most 1e-9, or flags converged = false after 1e5 sweeps. The value is
 * reported from the primal formula at the final coupling.
 */
inline OtResult sinkhorn(const DiscreteMeasure& p, const DiscreteMeasure& q,
                         const CostSpec& spec, double eps) {
    require_same_grid(p.grid(), q.grid(), "sinkhorn");
    if (!(eps > 0.0)) throw std::invalid_argument("sinkhorn: eps must be > 0");
    const auto si = detail::support_indices(p);
    const auto sj = detail::support_indices(q);
    const Grid& grid = p.grid();
    const std::size_t ni = si.size(), nj = sj.size();

    Mat c(ni, nj);
    for (std::size_t i = 0; i < ni; ++i)
        for (std::size_t j = 0; j < nj; ++j)
            c(i, j) = cost(spec, grid.point(si[i]), grid.point(sj[j]));

    Vec logp(ni), logq(nj);
    for (std::size_t i = 0; i < ni; ++i) logp[i] = std::log(p[si[i]]);
    for (std::size_t j = 0; j < nj; ++j) logq[j] = std::log(q[sj[j]]);

    // pi_ij = p_i q_j exp((u_i + v_j - c_ij) / eps)
    Vec u(ni, 0.0), v(nj, 0.0);
    const int max_sweeps = 100000;
    int sweeps = 0;
    bool converged = false;
    for (; sweeps < max_sweeps; ++sweeps) {
        for (std::size_t i = 0; i < ni; ++i) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < nj; ++j)
                m = std::max(m, logq[j] + (v[j] - c(i, j)) / eps);
            double s = 0.0;
            for (std::size_t j = 0; j < nj; ++j)
                s += std::exp(logq[j] + (v[j] - c(i, j)) / eps - m);
            u[i] = -eps * (m + std::log(s));
        }
        for (std::size_t j = 0; j < nj; ++j) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < ni; ++i)
                m = std::max(m, logp[i] + (u[i] - c(i, j)) / eps);
            double s = 0.0;
            for (std::size_t i = 0; i < ni; ++i)
                s += std::exp(logp[i] + (u[i] - c(i, j)) / eps - m);
            v[j] = -eps * (m + std::log(s));
        }
        // after the v-update the Q marginal is exact; check both anyway
        double err = 0.0;
        for (std::size_t i = 0; i < ni; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < nj; ++j)
                row += std::exp(logp[i] + logq[j] + (u[i] + v[j] - c(i, j)) / eps);
            err += std::abs(row - p[si[i]]);
        }
        double errq = 0.0;
        for (std::size_t j = 0; j < nj; ++j) {
            double col = 0.0;
            for (std::size_t i = 0; i < ni; ++i)
                col += std::exp(logp[i] + logq[j] + (u[i] + v[j] - c(i, j)) / eps);
            errq += std::abs(col - q[sj[j]]);
        }
        if (err <= 1e-9 && errq <= 1e-9) {
            converged = true;
            ++sweeps;
            break;
        }
    }

    Mat w(grid.size(), grid.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t j = 0; j < nj; ++j) {
            const double pij = std::exp(logp[i] + logq[j] + (u[i] + v[j] - c(i, j)) / eps);
            w(si[i], sj[j]) = pij;
            total += pij;
        }
    }
    // primal value E_pi c + eps KL(pi | P x Q) at the unnormalized plan
    double value = 0.0;
    for (std::size_t i = 0; i < ni; ++i) {
        for (std::size_t j = 0; j < nj; ++j) {
            const double pij = w(si[i], sj[j]);
            if (pij == 0.0) continue;
            value += pij * c(i, j) + eps * pij * std::log(pij / (p[si[i]] * q[sj[j]]));
        }
    }
    OtResult r{value, normalized_coupling(p.grid_ptr(), std::move(w)), sweeps, converged,
               Vec(grid.size(), 0.0), Vec(grid.size(), 0.0)};
    for (std::size_t i = 0; i < ni; ++i) r.potential_u[si[i]] = u[i];
    for (std::size_t j = 0; j < nj; ++j) r.potential_v[sj[j]] = v[j];
    return r;
}

/**
 * Semi-dual of the entropic OT problem at a potential v living on the second
 * marginal's support:
 *
 *   E_Q v - eps * E_{x~P} log E_{y~Q} exp((v(y) - c(x, y)) / eps),
 *
 * evaluated with a stabilized log-sum-exp. Putting the potential on the
 * second argument is what makes the expression a genuine dual: it is
 * invariant to constant shifts of v, lower-bounds the sinkhorn primal value
 * for every v (weak duality), and matches it at the converged potentials.
 */
inline double sinkhorn_dual_value(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                  const CostSpec& spec, double eps, const Vec& potential) {
    require_same_grid(p.grid(), q.grid(), "sinkhorn_dual_value");
    if (!(eps > 0.0)) throw std::invalid_argument("sinkhorn_dual_value: eps must be > 0");
    if (potential.size() != q.size())
        throw std::invalid_argument("sinkhorn_dual_value: potential length != grid size");
    const Grid& grid = p.grid();
    const auto sj = detail::support_indices(q);
    double total = 0.0;
    for (std::size_t j : sj) total += q[j] * potential[j];
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j : sj) {
            const double t =
                std::log(q[j]) + (potential[j] - cost(spec, grid.point(i), grid.point(j))) / eps;
            if (t > m) m = t;
        }
        double s = 0.0;
        for (std::size_t j : sj) {
            const double t =
                std::log(q[j]) + (potential[j] - cost(spec, grid.point(i), grid.point(j))) / eps;
            s += std::exp(t - m);
        }
        total -= p[i] * eps * (m + std::log(s));
    }
    return total;
}

} // namespace wdro
