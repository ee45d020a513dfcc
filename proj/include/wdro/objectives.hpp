#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "wdro/common.hpp"
#include "wdro/grid.hpp"

namespace wdro {

/**
 * Built-in objective catalogue. Every entry maps a grid point to a real
 * value; "tabulated" carries explicit per-point values instead.
 *
 *   linear:    a . x + b
 *   quadratic: scale * ||x - center||_2^2 + offset
 *   sine:      amplitude * sin(frequency * sum_k x_k + phase)
 *   abs:       scale * ||x - center||_1 + offset
 *   pwl:       piecewise-linear interpolation through breakpoints (d = 1)
 */
struct ObjectiveSpec {
    std::string kind;     // linear | quadratic | sine | abs | pwl | tabulated
    Vec a;                // linear coefficients
    double b = 0.0;       // linear intercept
    Vec center;           // quadratic / abs center
    double scale = 1.0;   // quadratic / abs scale
    double offset = 0.0;  // quadratic / abs offset
    double amplitude = 1.0, frequency = 1.0, phase = 0.0;
    Vec breakpoints, knot_values; // pwl
    Vec values;                   // tabulated
};

inline Vec evaluate_objective(const Grid& grid, const ObjectiveSpec& spec) {
    const std::size_t n = grid.size();
    const int d = grid.dim();
    Vec out(n, 0.0);
    if (spec.kind == "tabulated") {
        if (spec.values.size() != n)
            throw ConfigError("objective.values: expected " + std::to_string(n) + " entries, got " +
                              std::to_string(spec.values.size()));
        return spec.values;
    }
    if (spec.kind == "linear") {
        if (spec.a.size() != static_cast<std::size_t>(d))
            throw ConfigError("objective.a: expected one coefficient per dimension");
        for (std::size_t i = 0; i < n; ++i) {
            double v = spec.b;
            for (int k = 0; k < d; ++k) v += spec.a[k] * grid.coord(i, k);
            out[i] = v;
        }
        return out;
    }
    if (spec.kind == "quadratic" || spec.kind == "abs") {
        if (spec.center.size() != static_cast<std::size_t>(d))
            throw ConfigError("objective.center: expected one coordinate per dimension");
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int k = 0; k < d; ++k) {
                const double t = grid.coord(i, k) - spec.center[k];
                acc += spec.kind == "quadratic" ? t * t : std::abs(t);
            }
            out[i] = spec.scale * acc + spec.offset;
        }
        return out;
    }
    if (spec.kind == "sine") {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < d; ++k) s += grid.coord(i, k);
            out[i] = spec.amplitude * std::sin(spec.frequency * s + spec.phase);
        }
        return out;
    }
    if (spec.kind == "pwl") {
        if (d != 1) throw ConfigError("objective pwl: only defined for dim 1");
        if (spec.breakpoints.size() < 2 || spec.breakpoints.size() != spec.knot_values.size())
            throw ConfigError("objective pwl: need matching breakpoints and values, at least 2");
        for (std::size_t k = 1; k < spec.breakpoints.size(); ++k)
            if (!(spec.breakpoints[k] > spec.breakpoints[k - 1]))
                throw ConfigError("objective pwl: breakpoints must be strictly increasing");
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid.coord(i, 0);
            const auto& bp = spec.breakpoints;
            const auto& kv = spec.knot_values;
            if (x <= bp.front()) {
                out[i] = kv.front();
            } else if (x >= bp.back()) {
                out[i] = kv.back();
            } else {
                std::size_t k = 1;
                while (bp[k] < x) ++k;
                const double t = (x - bp[k - 1]) / (bp[k] - bp[k - 1]);
                out[i] = (1.0 - t) * kv[k - 1] + t * kv[k];
            }
        }
        return out;
    }
    throw ConfigError("objective.kind: unknown objective '" + spec.kind + "'");
}

} // namespace wdro
