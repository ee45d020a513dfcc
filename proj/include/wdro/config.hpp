#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "wdro/common.hpp"
#include "wdro/cost.hpp"
#include "wdro/dual.hpp"
#include "wdro/entropic.hpp"
#include "wdro/grid.hpp"
#include "wdro/measures.hpp"
#include "wdro/objectives.hpp"
#include "wdro/phi.hpp"

namespace wdro {

using json = nlohmann::json;

/// Source of the reference distribution P.
struct DistributionSpec {
    std::string kind; // uniform | dirac | gaussian | atoms | csv
    Vec at;           // dirac
    Vec mean;         // gaussian
    double stddev = 1.0;
    std::vector<Vec> points; // atoms
    Vec weights;             // atoms
    std::string csv_path;    // csv
};

/**
 * A fully parsed run configuration. Parsing is strict: unknown keys are
 * rejected with the offending key path, and the whole document validates
 * before any solve starts.
 */
struct RunConfig {
    std::vector<Interval> bounds;
    int dim = 1;
    int points_per_axis = 2;
    DistributionSpec distribution;
    ObjectiveSpec objective;
    CostSpec cost;
    double rho = 0.0;
    double eps = 0.0;
    double delta = 0.0;
    double sigma = -1.0; // -1 means "auto"
    std::string method = "entropic"; // unreg | cost-reg | entropic | phi
    std::string phi = "kl";
    std::uint64_t seed = 0;
    std::string output;
    Vec sweep_eps;
    Vec sweep_delta;
    std::optional<DistributionSpec> oracle_target;
    double oracle_eps = 0.1;
};

namespace detail {

inline void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + where + it.key() + "'");
    }
}

inline double require_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing key '" + where + key + "'");
    if (!obj[key].is_number()) throw ConfigError("'" + where + key + "' must be a number");
    return obj[key].get<double>();
}

inline Vec number_list(const json& arr, const std::string& where) {
    if (!arr.is_array()) throw ConfigError("'" + where + "' must be an array of numbers");
    Vec out;
    for (const auto& v : arr) {
        if (!v.is_number()) throw ConfigError("'" + where + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline DistributionSpec parse_distribution(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    reject_unknown_keys(obj, {"kind", "at", "mean", "stddev", "points", "weights", "path"}, where);
    DistributionSpec d;
    if (!obj.contains("kind")) throw ConfigError("missing key '" + where + "kind'");
    d.kind = obj["kind"].get<std::string>();
    if (d.kind == "uniform") {
        return d;
    } else if (d.kind == "dirac") {
        d.at = number_list(obj.value("at", json::array()), where + "at");
        if (d.at.empty()) throw ConfigError("'" + where + "at' is required for dirac");
    } else if (d.kind == "gaussian") {
        d.mean = number_list(obj.value("mean", json::array()), where + "mean");
        d.stddev = require_number(obj, "stddev", where);
        if (!(d.stddev > 0.0)) throw ConfigError("'" + where + "stddev' must be > 0");
    } else if (d.kind == "atoms") {
        if (!obj.contains("points") || !obj["points"].is_array())
            throw ConfigError("'" + where + "points' must be an array of coordinate arrays");
        for (const auto& pt : obj["points"]) d.points.push_back(number_list(pt, where + "points"));
        d.weights = number_list(obj.value("weights", json::array()), where + "weights");
        if (d.weights.size() != d.points.size())
            throw ConfigError("'" + where + "weights' must match points in length");
    } else if (d.kind == "csv") {
        if (!obj.contains("path")) throw ConfigError("missing key '" + where + "path'");
        d.csv_path = obj["path"].get<std::string>();
    } else {
        throw ConfigError("'" + where + "kind' must be one of uniform|dirac|gaussian|atoms|csv");
    }
    return d;
}

inline ObjectiveSpec parse_objective(const json& obj, const std::string& where) {
    if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
    reject_unknown_keys(obj,
                        {"kind", "a", "b", "center", "scale", "offset", "amplitude", "frequency",
                         "phase", "breakpoints", "values"},
                        where);
    ObjectiveSpec o;
    if (!obj.contains("kind")) throw ConfigError("missing key '" + where + "kind'");
    o.kind = obj["kind"].get<std::string>();
    if (obj.contains("a")) o.a = number_list(obj["a"], where + "a");
    o.b = obj.value("b", 0.0);
    if (obj.contains("center")) o.center = number_list(obj["center"], where + "center");
    o.scale = obj.value("scale", 1.0);
    o.offset = obj.value("offset", 0.0);
    o.amplitude = obj.value("amplitude", 1.0);
    o.frequency = obj.value("frequency", 1.0);
    o.phase = obj.value("phase", 0.0);
    if (o.kind == "pwl") {
        if (!obj.contains("breakpoints") || !obj.contains("values"))
            throw ConfigError("'" + where + "': pwl needs breakpoints and values");
        o.breakpoints = number_list(obj["breakpoints"], where + "breakpoints");
        o.knot_values = number_list(obj["values"], where + "values");
    } else if (obj.contains("values")) {
        o.values = number_list(obj["values"], where + "values");
    }
    return o;
}

} // namespace detail

inline RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
    detail::reject_unknown_keys(doc,
                                {"domain", "distribution", "objective", "cost", "rho", "reg",
                                 "method", "phi", "seed", "output", "sweep", "oracle"},
                                "");
    RunConfig cfg;

    if (!doc.contains("domain")) throw ConfigError("missing key 'domain'");
    const json& dom = doc["domain"];
    detail::reject_unknown_keys(dom, {"dim", "bounds", "points_per_axis"}, "domain.");
    cfg.dim = static_cast<int>(detail::require_number(dom, "dim", "domain."));
    if (cfg.dim < 1 || cfg.dim > 2) throw ConfigError("'domain.dim' must be 1 or 2");
    cfg.points_per_axis =
        static_cast<int>(detail::require_number(dom, "points_per_axis", "domain."));
    if (cfg.points_per_axis < 2) throw ConfigError("'domain.points_per_axis' must be >= 2");
    if (!dom.contains("bounds") || !dom["bounds"].is_array() ||
        dom["bounds"].size() != static_cast<std::size_t>(cfg.dim))
        throw ConfigError("'domain.bounds' must list one [lo, hi] pair per dimension");
    for (const auto& b : dom["bounds"]) {
        const Vec pair = detail::number_list(b, "domain.bounds");
        if (pair.size() != 2 || !(pair[0] < pair[1]))
            throw ConfigError("'domain.bounds' entries must be [lo, hi] with lo < hi");
        cfg.bounds.push_back(Interval{pair[0], pair[1]});
    }

    if (!doc.contains("distribution")) throw ConfigError("missing key 'distribution'");
    cfg.distribution = detail::parse_distribution(doc["distribution"], "distribution.");

    if (!doc.contains("objective")) throw ConfigError("missing key 'objective'");
    cfg.objective = detail::parse_objective(doc["objective"], "objective.");

    if (!doc.contains("cost")) throw ConfigError("missing key 'cost'");
    const json& cost = doc["cost"];
    detail::reject_unknown_keys(cost, {"norm", "p"}, "cost.");
    const std::string norm = cost.value("norm", "l2");
    if (norm == "l1")
        cfg.cost.norm = Norm::l1;
    else if (norm == "l2")
        cfg.cost.norm = Norm::l2;
    else if (norm == "linf")
        cfg.cost.norm = Norm::linf;
    else
        throw ConfigError("'cost.norm' must be one of l1|l2|linf");
    cfg.cost.p = detail::require_number(cost, "p", "cost.");
    if (!(cfg.cost.p >= 1.0)) throw ConfigError("'cost.p' must be >= 1");

    cfg.rho = detail::require_number(doc, "rho", "");
    if (!(cfg.rho > 0.0)) throw ConfigError("'rho' must be > 0");

    if (doc.contains("reg")) {
        const json& reg = doc["reg"];
        detail::reject_unknown_keys(reg, {"eps", "delta", "sigma"}, "reg.");
        cfg.eps = reg.value("eps", 0.0);
        cfg.delta = reg.value("delta", 0.0);
        if (!(cfg.eps >= 0.0)) throw ConfigError("'reg.eps' must be >= 0");
        if (!(cfg.delta >= 0.0)) throw ConfigError("'reg.delta' must be >= 0");
        if (reg.contains("sigma")) {
            if (reg["sigma"].is_string()) {
                if (reg["sigma"].get<std::string>() != "auto")
                    throw ConfigError("'reg.sigma' must be a positive number or \"auto\"");
                cfg.sigma = -1.0;
            } else {
                cfg.sigma = detail::require_number(reg, "sigma", "reg.");
                if (!(cfg.sigma > 0.0)) throw ConfigError("'reg.sigma' must be > 0");
            }
        }
    }

    cfg.method = doc.value("method", "entropic");
    if (cfg.method != "unreg" && cfg.method != "cost-reg" && cfg.method != "entropic" &&
        cfg.method != "phi")
        throw ConfigError("'method' must be one of unreg|cost-reg|entropic|phi");
    cfg.phi = doc.value("phi", "kl");
    if (cfg.phi != "kl" && cfg.phi != "chi2") throw ConfigError("'phi' must be kl or chi2");
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_integer()) throw ConfigError("'seed' must be an integer");
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }
    cfg.output = doc.value("output", "");

    if (doc.contains("sweep")) {
        const json& sw = doc["sweep"];
        detail::reject_unknown_keys(sw, {"eps_list", "delta_list"}, "sweep.");
        if (sw.contains("eps_list")) cfg.sweep_eps = detail::number_list(sw["eps_list"], "sweep.eps_list");
        if (sw.contains("delta_list"))
            cfg.sweep_delta = detail::number_list(sw["delta_list"], "sweep.delta_list");
    }

    if (doc.contains("oracle")) {
        const json& orc = doc["oracle"];
        detail::reject_unknown_keys(orc, {"target", "eps"}, "oracle.");
        if (!orc.contains("target")) throw ConfigError("missing key 'oracle.target'");
        cfg.oracle_target = detail::parse_distribution(orc["target"], "oracle.target.");
        cfg.oracle_eps = orc.value("eps", 0.1);
        if (!(cfg.oracle_eps > 0.0)) throw ConfigError("'oracle.eps' must be > 0");
    }
    return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

/// Materializes a distribution spec into weights on the grid.
inline DiscreteMeasure make_distribution(GridPtr grid, const DistributionSpec& spec) {
    const std::size_t n = grid->size();
    if (spec.kind == "uniform") {
        return DiscreteMeasure(grid, Vec(n, 1.0 / static_cast<double>(n)));
    }
    if (spec.kind == "dirac") {
        if (spec.at.size() != static_cast<std::size_t>(grid->dim()))
            throw ConfigError("'distribution.at' has the wrong dimension");
        if (!grid->contains(std::span<const double>(spec.at.data(), spec.at.size())))
            throw ConfigError("'distribution.at' lies outside the domain");
        Vec w(n, 0.0);
        w[grid->nearest_index(std::span<const double>(spec.at.data(), spec.at.size()))] = 1.0;
        return DiscreteMeasure(std::move(grid), std::move(w));
    }
    if (spec.kind == "gaussian") {
        if (spec.mean.size() != static_cast<std::size_t>(grid->dim()))
            throw ConfigError("'distribution.mean' has the wrong dimension");
        Vec w(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto x = grid->point(i);
            double q = 0.0;
            for (int k = 0; k < grid->dim(); ++k) {
                const double t = x[k] - spec.mean[k];
                q += t * t;
            }
            w[i] = std::exp(-q / (2.0 * spec.stddev * spec.stddev));
        }
        return normalized(std::move(grid), std::move(w));
    }
    if (spec.kind == "atoms") {
        Vec w(n, 0.0);
        double total = 0.0;
        for (std::size_t k = 0; k < spec.points.size(); ++k) {
            const Vec& pt = spec.points[k];
            if (pt.size() != static_cast<std::size_t>(grid->dim()))
                throw ConfigError("'distribution.points' entry has the wrong dimension");
            if (!grid->contains(std::span<const double>(pt.data(), pt.size())))
                throw ConfigError("'distribution.points' entry lies outside the domain");
            if (!(spec.weights[k] >= 0.0))
                throw ConfigError("'distribution.weights' must be nonnegative");
            w[grid->nearest_index(std::span<const double>(pt.data(), pt.size()))] +=
                spec.weights[k];
            total += spec.weights[k];
        }
        if (!(total > 0.0)) throw ConfigError("'distribution.weights' must have positive mass");
        return normalized(std::move(grid), std::move(w));
    }
    if (spec.kind == "csv") {
        auto rows = read_samples_csv(spec.csv_path, grid->dim());
        return load_empirical(std::move(grid), rows);
    }
    throw ConfigError("unsupported distribution kind '" + spec.kind + "'");
}

/// Assembles the solver-facing problem from a parsed configuration.
inline ProblemSpec make_problem(const RunConfig& cfg) {
    GridPtr grid = make_grid(cfg.bounds, cfg.points_per_axis);
    DiscreteMeasure p = make_distribution(grid, cfg.distribution);
    Vec f = evaluate_objective(*grid, cfg.objective);
    return ProblemSpec(grid, std::move(p), std::move(f), cfg.cost, cfg.rho);
}

/// Resolves sigma ("auto" means calibrated against rho/2).
inline double resolve_sigma(const RunConfig& cfg, const ProblemSpec& prob) {
    return cfg.sigma > 0.0 ? cfg.sigma : calibrate_sigma(prob.p, prob.cost, prob.rho);
}

} // namespace wdro
