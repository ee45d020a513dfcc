// wdro: regularized Wasserstein DRO solver CLI.
//
// Subcommands: solve, sweep, verify, oracle, gen-instance. A JSON config is
// the source of truth; a few flags override it for parameter sweeps. Exit
// codes: 0 success, 1 infeasible problem (or failed verification), 2 config
// error.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wdro/wdro.hpp"

namespace {

struct Overrides {
    double eps = -1.0;
    double delta = -1.0;
    double rho = -1.0;
    std::string sigma; // number or "auto"
    long long seed = -1;
    std::string method;
    std::string phi;
    std::string output;
};

void apply(wdro::RunConfig& cfg, const Overrides& ov) {
    if (ov.eps >= 0.0) cfg.eps = ov.eps;
    if (ov.delta >= 0.0) cfg.delta = ov.delta;
    if (ov.rho > 0.0) cfg.rho = ov.rho;
    if (!ov.sigma.empty()) {
        if (ov.sigma == "auto") {
            cfg.sigma = -1.0;
        } else {
            char* end = nullptr;
            const double v = std::strtod(ov.sigma.c_str(), &end);
            if (end == ov.sigma.c_str() || *end != '\0' || !(v > 0.0))
                throw wdro::ConfigError("--sigma must be a positive number or 'auto'");
            cfg.sigma = v;
        }
    }
    if (ov.seed >= 0) cfg.seed = static_cast<std::uint64_t>(ov.seed);
    if (!ov.method.empty()) cfg.method = ov.method;
    if (!ov.phi.empty()) cfg.phi = ov.phi;
    if (!ov.output.empty()) cfg.output = ov.output;
}

void add_override_flags(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--eps", ov.eps, "override reg.eps");
    cmd->add_option("--delta", ov.delta, "override reg.delta");
    cmd->add_option("--rho", ov.rho, "override rho");
    cmd->add_option("--sigma", ov.sigma, "override reg.sigma (number or 'auto')");
    cmd->add_option("--seed", ov.seed, "override seed");
    cmd->add_option("-o,--output", ov.output, "override output path");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"regularized Wasserstein distributionally robust optimization"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    CLI::App* solve = app.add_subcommand("solve", "solve one problem instance");
    solve->add_option("-c,--config", config_path, "JSON config")->required();
    solve->add_option("--method", ov.method, "unreg|cost-reg|entropic|phi");
    solve->add_option("--phi", ov.phi, "kl|chi2");
    add_override_flags(solve, ov);

    CLI::App* sweep = app.add_subcommand("sweep", "regularization sweep, CSV report");
    sweep->add_option("-c,--config", config_path, "JSON config")->required();
    add_override_flags(sweep, ov);

    CLI::App* verify = app.add_subcommand("verify", "approximation-bound diagnostics");
    verify->add_option("-c,--config", config_path, "JSON config")->required();
    add_override_flags(verify, ov);

    CLI::App* oracle = app.add_subcommand("oracle", "exact and entropic OT cross-check");
    oracle->add_option("-c,--config", config_path, "JSON config")->required();
    add_override_flags(oracle, ov);

    CLI::App* gen = app.add_subcommand("gen-instance", "emit a random instance config");
    long long gen_seed = 0;
    int gen_points = 17;
    std::string gen_out = "instance.json";
    gen->add_option("--seed", gen_seed, "instance seed");
    gen->add_option("--points", gen_points, "grid points")->check(CLI::Range(2, 256));
    gen->add_option("-o,--output", gen_out, "output config path");

    CLI11_PARSE(app, argc, argv);

    try {
        wdro::RunOutcome out;
        if (gen->parsed()) {
            out = wdro::run_gen_instance(static_cast<std::uint64_t>(gen_seed), gen_points, gen_out);
        } else {
            wdro::RunConfig cfg = wdro::parse_config_file(config_path);
            apply(cfg, ov);
            if (solve->parsed()) out = wdro::run_solve(cfg);
            else if (sweep->parsed()) out = wdro::run_sweep(cfg);
            else if (verify->parsed()) out = wdro::run_verify(cfg);
            else out = wdro::run_oracle(cfg);
        }
        std::cout << out.summary << "\n";
        return out.exit_code;
    } catch (const wdro::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const wdro::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
