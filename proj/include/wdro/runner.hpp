#pragma once

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>

#include "wdro/approximation.hpp"
#include "wdro/config.hpp"
#include "wdro/instances.hpp"
#include "wdro/ot.hpp"

namespace wdro {

namespace detail {

inline std::string format_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write to '" + path + "'");
    out << body;
}

} // namespace detail

/**
 * Renders a sweep report as CSV with the fixed header contract. Floats are
 * serialized with 17 significant digits, so identical inputs give identical
 * bytes regardless of worker count.
 */
inline std::string render_report(const SweepReport& report) {
    std::string out = "eps,delta,lambda_star,lambda_bar,value_entropic,value_unreg,gap,eta\n";
    for (const SweepRow& r : report.rows) {
        out += detail::format_g17(r.eps) + "," + detail::format_g17(r.delta) + "," +
               detail::format_g17(r.lambda_star) + "," + detail::format_g17(r.lambda_bar) + "," +
               detail::format_g17(r.value_entropic) + "," + detail::format_g17(r.value_unreg) +
               "," + detail::format_g17(r.gap) + "," + detail::format_g17(r.eta) + "\n";
    }
    return out;
}

inline void emit_report(const SweepReport& report, const std::string& path) {
    detail::write_text_file(path, render_report(report));
}

/// Solution artifact for one solve, shared by every method.
inline json solution_to_json(const RunConfig& cfg, const std::string& method, double value,
                             double lambda_star, double lambda_bound, double gap, double slack,
                             double sigma, double residual) {
    json doc;
    doc["method"] = method;
    doc["value"] = value;
    doc["lambda_star"] = lambda_star;
    doc["lambda_bar"] = lambda_bound;
    if (std::isfinite(gap)) doc["gap"] = gap;
    if (std::isfinite(slack)) doc["slack"] = slack;
    if (std::isfinite(residual)) doc["inner_residual"] = residual;
    doc["rho"] = cfg.rho;
    doc["eps"] = cfg.eps;
    doc["delta"] = cfg.delta;
    if (sigma > 0.0) doc["sigma"] = sigma;
    doc["points"] = cfg.points_per_axis;
    doc["dim"] = cfg.dim;
    doc["seed"] = cfg.seed;
    return doc;
}

/// Re-parses an emitted solution and re-checks its invariants; used by the
/// round-trip tests and available to downstream consumers.
inline void validate_solution_json(const json& doc) {
    if (!doc.is_object()) throw ConfigError("solution: not an object");
    for (const char* key : {"method", "value", "lambda_star", "lambda_bar", "rho"})
        if (!doc.contains(key)) throw ConfigError(std::string("solution: missing '") + key + "'");
    const double lambda_star = doc["lambda_star"].get<double>();
    const double lambda_bound = doc["lambda_bar"].get<double>();
    if (!(lambda_star >= 0.0 && lambda_star <= lambda_bound + 1e-9))
        throw ConfigError("solution: lambda_star outside [0, lambda_bar]");
    if (!std::isfinite(doc["value"].get<double>()))
        throw ConfigError("solution: value is not finite");
    if (doc.contains("slack") && doc["slack"].get<double>() < -1e-8)
        throw ConfigError("solution: negative feasibility slack");
    if (doc.contains("gap") && doc["gap"].get<double>() < -1e-8)
        throw ConfigError("solution: negative duality gap");
}

struct RunOutcome {
    int exit_code = 0;
    std::string summary;   // one line printed to stdout
    std::string artifact;  // serialized artifact written to the output path
    std::string path;
};

/// Dispatches a `solve` run. Throws InfeasibleError / ConfigError upward;
/// the CLI maps them to exit codes 1 and 2.
inline RunOutcome run_solve(const RunConfig& cfg) {
    const ProblemSpec prob = make_problem(cfg);
    RunOutcome out;
    out.path = cfg.output.empty() ? "solution.json" : cfg.output;
    json doc;
    if (cfg.method == "unreg" || cfg.method == "cost-reg") {
        const double eps = cfg.method == "unreg" ? 0.0 : cfg.eps;
        const double delta = cfg.method == "unreg" ? 0.0 : cfg.delta;
        DualSolution sol = solve_cost_reg(prob, eps, delta);
        if (cfg.method == "unreg" && prob.n() <= 64)
            sol.gap = primal_lp_unreg(prob).first - sol.value;
        doc = solution_to_json(cfg, cfg.method, sol.value, sol.lambda_star, sol.lambda_bound,
                               sol.gap, std::numeric_limits<double>::quiet_NaN(), -1.0,
                               std::numeric_limits<double>::quiet_NaN());
        out.summary = "value=" + detail::format_g17(sol.value) +
                      " lambda_star=" + detail::format_g17(sol.lambda_star) +
                      (std::isfinite(sol.gap) ? " gap=" + detail::format_g17(sol.gap) : "");
    } else if (cfg.method == "entropic") {
        const double sigma = resolve_sigma(cfg, prob);
        const ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
        const EntropicSolution sol =
            solve_entropic(prob, RegParams(cfg.eps, cfg.delta, sigma), pi0);
        doc = solution_to_json(cfg, cfg.method, sol.dual.value, sol.dual.lambda_star,
                               sol.dual.lambda_bound, sol.duality_gap, sol.feasibility_slack,
                               sigma, std::numeric_limits<double>::quiet_NaN());
        out.summary = "value=" + detail::format_g17(sol.dual.value) +
                      " lambda_star=" + detail::format_g17(sol.dual.lambda_star) +
                      " gap=" + detail::format_g17(sol.duality_gap);
    } else { // phi
        const double sigma = resolve_sigma(cfg, prob);
        const ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
        const PhiSpec spec{cfg.phi == "kl" ? PhiKind::kl : PhiKind::chi2};
        const PhiDualResult sol = solve_phi_dual(prob, cfg.eps, cfg.delta, pi0, spec);
        doc = solution_to_json(cfg, "phi-" + cfg.phi, sol.dual.value, sol.dual.lambda_star,
                               sol.dual.lambda_bound, std::numeric_limits<double>::quiet_NaN(),
                               std::numeric_limits<double>::quiet_NaN(), sigma,
                               sol.inner_residual);
        out.summary = "value=" + detail::format_g17(sol.dual.value) +
                      " lambda_star=" + detail::format_g17(sol.dual.lambda_star) +
                      " residual=" + detail::format_g17(sol.inner_residual);
    }
    out.artifact = doc.dump(2) + "\n";
    detail::write_text_file(out.path, out.artifact);
    return out;
}

inline RunOutcome run_sweep(const RunConfig& cfg) {
    const ProblemSpec prob = make_problem(cfg);
    const double sigma = resolve_sigma(cfg, prob);
    const ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
    const Vec eps_list = cfg.sweep_eps.empty() ? Vec{1e-1, 1e-2, 1e-3, 1e-4} : cfg.sweep_eps;
    const Vec delta_list = cfg.sweep_delta.empty() ? Vec{0.0} : cfg.sweep_delta;
    const SweepReport report = sweep(prob, pi0, eps_list, delta_list);
    RunOutcome out;
    out.path = cfg.output.empty() ? "sweep.csv" : cfg.output;
    out.artifact = render_report(report);
    detail::write_text_file(out.path, out.artifact);
    out.summary = "rows=" + std::to_string(report.rows.size()) +
                  " c_fit=" + detail::format_g17(report.c_fit);
    return out;
}

/// Lemma-style diagnostics: the Lagrangian comparison at three multipliers
/// and the radius comparison at two shrink ratios, as a pass/fail table.
inline RunOutcome run_verify(const RunConfig& cfg) {
    const ProblemSpec prob = make_problem(cfg);
    const double sigma = resolve_sigma(cfg, prob);
    const ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
    const double lb = lambda_bar(prob, pi0);
    const RegParams reg(cfg.eps, cfg.delta, sigma);
    const double lip = lipschitz_estimate(*prob.grid, prob.f) +
                       lb * cost_lipschitz_bound(*prob.grid, prob.cost);
    const double radius =
        std::max(1e-6, (cfg.eps + lb * cfg.delta) * static_cast<double>(prob.grid->dim()) / lip);

    std::string table;
    bool all_ok = true;
    char line[256];
    std::snprintf(line, sizeof(line), "approximation constant C=%-12.6g (informational)\n",
                  approximation_constant(*prob.grid, prob.cost, sigma));
    table += line;
    for (double lam : {0.0, lb / 2.0, lb}) {
        const LagrangianGap lg = lagrangian_gap_check(prob, reg, pi0, lam, radius);
        std::snprintf(line, sizeof(line), "lagrangian_gap lambda=%-12.6g lhs=%-12.6g rhs=%-12.6g %s\n",
                      lam, lg.lhs, lg.rhs, lg.holds ? "PASS" : "FAIL");
        table += line;
        all_ok = all_ok && lg.holds;
    }
    for (double ratio : {0.1, 0.5}) {
        const RadiusCompare rc = radius_compare(prob, ratio * sigma, sigma);
        std::snprintf(line, sizeof(line),
                      "radius_compare delta/sigma=%-6g F_rho=%-12.6g F_shrunk=%-12.6g bound=%-12.6g %s\n",
                      ratio, rc.f_rho, rc.f_shrunk, rc.bound, rc.holds ? "PASS" : "FAIL");
        table += line;
        all_ok = all_ok && rc.holds;
    }
    RunOutcome out;
    out.summary = table + (all_ok ? "verify: all checks passed" : "verify: FAILURES above");
    out.exit_code = all_ok ? 0 : 1;
    return out;
}

/// Exact-vs-entropic transport cross-check between the configured P and the
/// oracle target distribution.
inline RunOutcome run_oracle(const RunConfig& cfg) {
    if (!cfg.oracle_target)
        throw ConfigError("oracle runs need an 'oracle.target' distribution in the config");
    const ProblemSpec prob = make_problem(cfg);
    const DiscreteMeasure q = make_distribution(prob.grid, *cfg.oracle_target);
    const OtResult exact = wasserstein_exact(prob.p, q, prob.cost);
    const OtResult entropic = sinkhorn(prob.p, q, prob.cost, cfg.oracle_eps);
    json doc;
    doc["wasserstein_exact"] = exact.value;
    doc["sinkhorn_value"] = entropic.value;
    doc["sinkhorn_eps"] = cfg.oracle_eps;
    doc["sinkhorn_iterations"] = entropic.iterations;
    doc["sinkhorn_converged"] = entropic.converged;
    doc["lp_iterations"] = exact.iterations;
    RunOutcome out;
    out.path = cfg.output.empty() ? "oracle.json" : cfg.output;
    out.artifact = doc.dump(2) + "\n";
    detail::write_text_file(out.path, out.artifact);
    out.summary = "W_exact=" + detail::format_g17(exact.value) +
                  " sinkhorn=" + detail::format_g17(entropic.value) +
                  (entropic.converged ? "" : " (sinkhorn not converged)");
    return out;
}

/**
 * Writes a complete, self-contained random instance configuration. The seed
 * fully determines the emitted bytes.
 */
inline RunOutcome run_gen_instance(std::uint64_t seed, int points, const std::string& path) {
    const ProblemSpec prob = instances::random_instance(seed, points);
    json doc;
    doc["domain"] = {{"dim", 1},
                     {"bounds", json::array({json::array({0.0, 1.0})})},
                     {"points_per_axis", points}};
    json dist;
    dist["kind"] = "atoms";
    json pts = json::array(), wts = json::array();
    for (std::size_t i = 0; i < prob.n(); ++i) {
        if (prob.p[i] > 0.0) {
            pts.push_back(json::array({prob.grid->coord(i, 0)}));
            wts.push_back(prob.p[i]);
        }
    }
    dist["points"] = pts;
    dist["weights"] = wts;
    doc["distribution"] = dist;
    doc["objective"] = {{"kind", "tabulated"}, {"values", prob.f}};
    doc["cost"] = {{"norm", norm_name(prob.cost.norm)}, {"p", prob.cost.p}};
    doc["rho"] = prob.rho;
    doc["reg"] = {{"eps", 0.05}, {"delta", 0.005}, {"sigma", "auto"}};
    doc["method"] = "entropic";
    doc["seed"] = seed;
    RunOutcome out;
    out.path = path.empty() ? "instance.json" : path;
    out.artifact = doc.dump(2) + "\n";
    detail::write_text_file(out.path, out.artifact);
    out.summary = "instance with " + std::to_string(points) + " points written to " + out.path;
    return out;
}

} // namespace wdro
