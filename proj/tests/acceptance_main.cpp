// Acceptance suite: one check per shipped guarantee, one pass/fail line
// each, nonzero exit when anything fails. Tolerances are pinned here, in
// code, and every expected value comes from an independent route (the LP
// oracle, the closed-form entropic solver, or a hand-checked instance).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "wdro/wdro.hpp"

using namespace wdro;

namespace {

int failures = 0;
std::vector<std::pair<double, double>> multiplier_log; // (lambda_star, lambda_bar)

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %-38s %s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    if (!ok) ++failures;
}

void run_criterion(int number, const std::string& name,
                   const std::function<std::pair<bool, std::string>()>& body) {
    try {
        const auto [ok, detail] = body();
        report(number, name, ok, detail);
    } catch (const std::exception& e) {
        report(number, name, false, std::string("exception: ") + e.what());
    }
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

struct Setup {
    ProblemSpec prob;
    ReferenceCoupling pi0;
};

Setup make_setup(ProblemSpec prob) {
    const double sigma = calibrate_sigma(prob.p, prob.cost, prob.rho);
    ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
    return Setup{std::move(prob), std::move(pi0)};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing artifact " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. Strong duality, unregularized: dual golden-section vs the primal LP.
std::pair<bool, std::string> criterion_unreg_duality() {
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const ProblemSpec prob = instances::random_instance(100 + rep, 9 + 4 * (rep % 7));
        const double dual = solve_cost_reg(prob, 0.0, 0.0).value;
        const double primal = primal_lp_unreg(prob).first;
        worst = std::max(worst, std::abs(dual - primal) / std::max(1.0, std::abs(primal)));
    }
    const ProblemSpec two = instances::two_point();
    const DualSolution sol = solve_cost_reg(two, 0.0, 0.0);
    const double lp = primal_lp_unreg(two).first;
    worst = std::max(worst, std::abs(sol.value - lp) / std::max(1.0, std::abs(lp)));
    const bool ok = worst <= 1e-6 && std::abs(sol.value - 0.3) <= 1e-6 &&
                    std::abs(sol.lambda_star - 1.0) <= 1e-6;
    return {ok, "max rel gap " + fmt(worst) + ", two-point value " + fmt(sol.value) +
                    ", lambda* " + fmt(sol.lambda_star)};
}

// 2. Strong duality, entropic: recovered primal closes the gap.
std::pair<bool, std::string> criterion_entropic_duality() {
    const double eps_grid[] = {1e-2, 1e-1};
    double worst_gap = 0.0, worst_slack = 0.0, worst_cs = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const Setup s = make_setup(instances::random_instance(200 + rep, 9 + 2 * (rep % 5)));
        const double eps = eps_grid[rep % 2];
        const double delta = eps_grid[(rep / 2) % 2];
        const EntropicSolution sol =
            solve_entropic(s.prob, RegParams(eps, delta, s.pi0.sigma()), s.pi0);
        multiplier_log.emplace_back(sol.dual.lambda_star, sol.dual.lambda_bound);
        worst_gap = std::max(worst_gap,
                             std::abs(sol.duality_gap) / (1.0 + std::abs(sol.dual.value)));
        worst_slack = std::min(worst_slack, sol.feasibility_slack);
        worst_cs = std::max(worst_cs, sol.dual.lambda_star * std::abs(sol.feasibility_slack));
    }
    const bool ok = worst_gap <= 1e-6 && worst_slack >= -1e-8 && worst_cs <= 1e-6;
    return {ok, "max rel gap " + fmt(worst_gap) + ", min slack " + fmt(worst_slack) +
                    ", max lambda*|slack| " + fmt(worst_cs)};
}

// 3. The explicit dual bound holds on every multiplier solved in this suite.
std::pair<bool, std::string> criterion_dual_bound() {
    bool ok = !multiplier_log.empty();
    double worst = -1e300;
    for (const auto& [ls, lb] : multiplier_log) {
        worst = std::max(worst, ls - lb);
        if (!(ls <= lb + 1e-9)) ok = false;
    }
    return {ok, std::to_string(multiplier_log.size()) + " solves, max lambda* - lambda_bar " +
                    fmt(worst)};
}

// 4. Cost-regularization sandwich on five random instances.
std::pair<bool, std::string> criterion_sandwich() {
    double worst = -1e300;
    bool ok = true;
    for (int rep = 0; rep < 5; ++rep) {
        const ProblemSpec prob = instances::random_instance(300 + rep, 11);
        for (double eps : {0.05, 0.2}) {
            for (double delta : {0.05, 0.2}) {
                const double full = solve_cost_reg(prob, 0.0, 0.0).value;
                const double reg = solve_cost_reg(prob, eps, delta).value;
                const double shrunk =
                    solve_cost_reg(prob.with_rho(prob.rho / (1.0 + delta)), 0.0, 0.0).value;
                const double lower = shrunk - eps * prob.rho / (1.0 + delta);
                worst = std::max({worst, reg - full, lower - reg});
                if (!(reg <= full + 1e-8 && lower <= reg + 1e-8)) ok = false;
            }
        }
    }
    return {ok, "max violation " + fmt(worst)};
}

// 5. Entropic approximation rate on the shipped 33-point instance.
std::pair<bool, std::string> criterion_rate() {
    const Setup s = make_setup(instances::grid33());
    const SweepReport rep = sweep(s.prob, s.pi0, Vec{1e-1, 1e-2, 1e-3, 1e-4}, Vec{0.0});
    bool ok = rep.rows.size() == 4 && std::isfinite(rep.c_fit);
    double cmin = 1e300, cmax = -1e300;
    for (std::size_t k = 0; k < rep.rows.size(); ++k) {
        const SweepRow& row = rep.rows[k];
        multiplier_log.emplace_back(row.lambda_star, row.lambda_bar);
        if (!(row.gap >= 0.0)) ok = false;
        if (k > 0 && !(row.gap < rep.rows[k - 1].gap)) ok = false;
        const double cfit = row.gap / (row.eta * std::log(1.0 / row.eta));
        cmin = std::min(cmin, cfit);
        cmax = std::max(cmax, cfit);
    }
    if (!(rep.rows[3].gap <= rep.rows[0].gap / 10.0)) ok = false;
    if (!(cmax / cmin <= 3.0)) ok = false;
    return {ok, "gaps " + fmt(rep.rows[0].gap) + " .. " + fmt(rep.rows[3].gap) +
                    ", C_fit spread x" + fmt(cmax / cmin)};
}

// 6. Lagrangian comparison bound at the canonical multipliers and radius.
std::pair<bool, std::string> criterion_lagrangian() {
    const Setup s = make_setup(instances::grid33());
    const double lb = lambda_bar(s.prob, s.pi0);
    const RegParams reg(instances::kGrid33Eps, instances::kGrid33Delta, s.pi0.sigma());
    const double lip = lipschitz_estimate(*s.prob.grid, s.prob.f) +
                       lb * cost_lipschitz_bound(*s.prob.grid, s.prob.cost);
    const double radius =
        (reg.eps + lb * reg.delta) * static_cast<double>(s.prob.grid->dim()) / lip;
    bool ok = true;
    double min_margin = 1e300;
    for (double lam : {0.0, lb / 2.0, lb}) {
        const LagrangianGap lg = lagrangian_gap_check(s.prob, reg, s.pi0, lam, radius);
        min_margin = std::min(min_margin, lg.rhs - lg.lhs);
        if (!lg.holds) ok = false;
    }
    return {ok, "Delta " + fmt(radius) + ", min margin " + fmt(min_margin)};
}

// 7. Radius comparison through the LP oracle.
std::pair<bool, std::string> criterion_radius() {
    const Setup s = make_setup(instances::grid33());
    bool ok = true;
    std::string detail;
    for (double ratio : {0.1, 0.5}) {
        const RadiusCompare rc = radius_compare(s.prob, ratio * s.pi0.sigma(), s.pi0.sigma());
        if (!rc.holds) ok = false;
        detail += "d/s=" + fmt(ratio) + " diff " + fmt(rc.f_rho - rc.f_shrunk) + " <= " +
                  fmt(rc.bound) + "; ";
    }
    return {ok, detail};
}

// 8. The generic phi solver agrees with the entropic closed form for kl.
std::pair<bool, std::string> criterion_phi() {
    double worst = 0.0, worst_res = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const Setup s = make_setup(instances::random_instance(400 + rep, 5 + rep));
        const double eps = 0.1, delta = 0.05;
        const PhiDualResult phi = solve_phi_dual(s.prob, eps, delta, s.pi0, PhiSpec{PhiKind::kl});
        const EntropicSolution ent =
            solve_entropic(s.prob, RegParams(eps, delta, s.pi0.sigma()), s.pi0);
        multiplier_log.emplace_back(ent.dual.lambda_star, ent.dual.lambda_bound);
        worst = std::max(worst, std::abs(phi.dual.value - ent.dual.value));
        worst_res = std::max(worst_res, phi.inner_residual);
    }
    const bool ok = worst <= 1e-4 && worst_res < 1e-5;
    return {ok, "max |phi - entropic| " + fmt(worst) + ", max residual " + fmt(worst_res)};
}

// 9. Sinkhorn primal and semi-dual agree at the converged potentials.
std::pair<bool, std::string> criterion_sinkhorn() {
    GridPtr grid = make_grid({Interval{0.0, 1.0}}, 17);
    const CostSpec spec(Norm::l2, 2.0);
    double worst_gap = 0.0, worst_marg = 0.0;
    bool ok = true;
    for (int rep = 0; rep < 5; ++rep) {
        const DiscreteMeasure p = instances::random_measure(500 + rep, grid, 5);
        const DiscreteMeasure q = instances::random_measure(600 + rep, grid, 5);
        for (double eps : {0.1, 0.01}) {
            const OtResult r = sinkhorn(p, q, spec, eps);
            if (!r.converged) ok = false;
            const double dual = sinkhorn_dual_value(p, q, spec, eps, r.potential_v);
            worst_gap = std::max(worst_gap, std::abs(r.value - dual));
            const DiscreteMeasure m1 = marginal(r.coupling, MarginalAxis::first);
            const DiscreteMeasure m2 = marginal(r.coupling, MarginalAxis::second);
            for (std::size_t i = 0; i < grid->size(); ++i) {
                worst_marg = std::max(worst_marg, std::abs(m1[i] - p[i]));
                worst_marg = std::max(worst_marg, std::abs(m2[i] - q[i]));
            }
        }
    }
    if (!(worst_gap <= 1e-5 && worst_marg <= 1e-9)) ok = false;
    return {ok, "max primal-dual gap " + fmt(worst_gap) + ", max marginal violation " +
                    fmt(worst_marg)};
}

// 10. CLI determinism: identical configs and seeds give identical bytes for
// one and four workers.
std::pair<bool, std::string> criterion_determinism() {
    const std::string cli = WDRO_CLI_PATH;
    const std::string cfg = WDRO_CONFIG_DIR;
    const auto shell = [&](const std::string& cmd) {
        const int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    bool ok = true;
    // solve and sweep on the shipped instance, gen-instance twice
    ok &= shell("WDRO_THREADS=1 " + cli + " solve -c " + cfg +
                "/grid33.json -o acc_solve_t1.json > /dev/null") == 0;
    ok &= shell("WDRO_THREADS=4 " + cli + " solve -c " + cfg +
                "/grid33.json -o acc_solve_t4.json > /dev/null") == 0;
    ok &= shell("WDRO_THREADS=1 " + cli + " sweep -c " + cfg +
                "/sweep33.json -o acc_sweep_t1.csv > /dev/null") == 0;
    ok &= shell("WDRO_THREADS=4 " + cli + " sweep -c " + cfg +
                "/sweep33.json -o acc_sweep_t4.csv > /dev/null") == 0;
    ok &= shell(cli + " gen-instance --seed 11 --points 15 -o acc_gen_a.json > /dev/null") == 0;
    ok &= shell(cli + " gen-instance --seed 11 --points 15 -o acc_gen_b.json > /dev/null") == 0;
    if (!ok) return {false, "a CLI invocation failed"};
    const bool same_solve = slurp("acc_solve_t1.json") == slurp("acc_solve_t4.json");
    const bool same_sweep = slurp("acc_sweep_t1.csv") == slurp("acc_sweep_t4.csv");
    const bool same_gen = slurp("acc_gen_a.json") == slurp("acc_gen_b.json");
    for (const char* f : {"acc_solve_t1.json", "acc_solve_t4.json", "acc_sweep_t1.csv",
                          "acc_sweep_t4.csv", "acc_gen_a.json", "acc_gen_b.json"})
        std::remove(f);
    ok = same_solve && same_sweep && same_gen;
    return {ok, std::string("solve ") + (same_solve ? "identical" : "DIFFERS") + ", sweep " +
                    (same_sweep ? "identical" : "DIFFERS") + ", gen-instance " +
                    (same_gen ? "identical" : "DIFFERS")};
}

} // namespace

int main() {
    run_criterion(1, "strong duality, unregularized", criterion_unreg_duality);
    run_criterion(2, "strong duality, entropic", criterion_entropic_duality);
    run_criterion(4, "cost-regularization sandwich", criterion_sandwich);
    run_criterion(5, "entropic approximation rate", criterion_rate);
    run_criterion(6, "lagrangian comparison bound", criterion_lagrangian);
    run_criterion(7, "radius comparison", criterion_radius);
    run_criterion(8, "phi-divergence consistency (kl)", criterion_phi);
    run_criterion(3, "dual bound on every solve", criterion_dual_bound);
    run_criterion(9, "sinkhorn oracle closure", criterion_sinkhorn);
    run_criterion(10, "artifact determinism", criterion_determinism);

    if (failures == 0) {
        std::printf("acceptance: all criteria passed\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", failures);
    return 1;
}
