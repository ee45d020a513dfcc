#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "wdro/cost.hpp"
#include "wdro/dual.hpp"
#include "wdro/grid.hpp"
#include "wdro/measures.hpp"

namespace wdro {
namespace instances {

/**
 * The two-point instance: grid {0, 1}, all mass at 0, f(y) = y, c = |x - y|,
 * rho = 0.3. The worst case moves 0.3 of the mass to y = 1, so the value is
 * 0.3 with multiplier 1.
 */
inline ProblemSpec two_point() {
    GridPtr grid = make_grid({Interval{0.0, 1.0}}, 2);
    DiscreteMeasure p(grid, Vec{1.0, 0.0});
    Vec f{0.0, 1.0};
    return ProblemSpec(grid, std::move(p), std::move(f), CostSpec(Norm::l1, 1.0), 0.3);
}

/**
 * The 33-point reference instance used throughout the diagnostics: unit
 * interval, metric cost, a smooth oscillating objective, and an empirical
 * distribution concentrated away from the maximizers.
 */
inline ProblemSpec grid33() {
    GridPtr grid = make_grid({Interval{0.0, 1.0}}, 33);
    Vec f(grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) {
        const double y = grid->coord(j, 0);
        f[j] = std::sin(4.0 * y) + 0.5 * y;
    }
    Vec w(grid->size(), 0.0);
    // four atoms, heaviest in the low-f region
    w[grid->nearest_index(Vec{0.10})] = 0.35;
    w[grid->nearest_index(Vec{0.30})] = 0.30;
    w[grid->nearest_index(Vec{0.55})] = 0.20;
    w[grid->nearest_index(Vec{0.90})] = 0.15;
    DiscreteMeasure p(grid, std::move(w));
    return ProblemSpec(grid, std::move(p), std::move(f), CostSpec(Norm::l1, 1.0), 0.25);
}

/// Default regularization used with grid33() in the diagnostics and configs.
inline constexpr double kGrid33Eps = 0.05;
inline constexpr double kGrid33Delta = 0.005;

namespace detail {

inline double uniform01(std::mt19937_64& gen) {
    // fixed mapping, independent of the standard library's distribution
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

} // namespace detail

/**
 * Seeded random instance on [0, 1]: a trigonometric objective with a few
 * modes, a full-support random distribution, and a moderate budget. The same
 * seed always yields the same instance, no matter the platform.
 */
inline ProblemSpec random_instance(std::uint64_t seed, int points, double p_exponent = 1.0) {
    std::mt19937_64 gen(seed);
    GridPtr grid = make_grid({Interval{0.0, 1.0}}, points);
    const double a1 = 2.0 * detail::uniform01(gen) - 1.0;
    const double a2 = 2.0 * detail::uniform01(gen) - 1.0;
    const double a3 = 2.0 * detail::uniform01(gen) - 1.0;
    const double ph = 6.28 * detail::uniform01(gen);
    Vec f(grid->size());
    for (std::size_t j = 0; j < grid->size(); ++j) {
        const double y = grid->coord(j, 0);
        f[j] = a1 * std::sin(3.1 * y + ph) + a2 * std::cos(5.3 * y) + 0.5 * a3 * y;
    }
    Vec w(grid->size());
    for (double& v : w) v = 0.05 + detail::uniform01(gen);
    DiscreteMeasure p = normalized(grid, std::move(w));
    const double rho = 0.1 + 0.3 * detail::uniform01(gen);
    return ProblemSpec(grid, std::move(p), std::move(f),
                       CostSpec(p_exponent == 2.0 ? Norm::l2 : Norm::l1, p_exponent), rho);
}

/// Random measure with the given support size on an existing grid.
inline DiscreteMeasure random_measure(std::uint64_t seed, GridPtr grid, int atoms) {
    if (atoms < 1 || static_cast<std::size_t>(atoms) > grid->size())
        throw std::invalid_argument("random_measure: atom count exceeds grid size");
    std::mt19937_64 gen(seed);
    Vec w(grid->size(), 0.0);
    int placed = 0;
    while (placed < atoms) {
        const std::size_t idx =
            static_cast<std::size_t>(detail::uniform01(gen) * static_cast<double>(grid->size()));
        if (idx < grid->size() && w[idx] == 0.0) {
            w[idx] = 0.1 + detail::uniform01(gen);
            ++placed;
        }
    }
    return normalized(std::move(grid), std::move(w));
}

} // namespace instances
} // namespace wdro
