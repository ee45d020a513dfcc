#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracle_helpers.hpp"
#include "wdro/entropic.hpp"
#include "wdro/instances.hpp"

using namespace wdro;

namespace {

struct Setup {
    ProblemSpec prob;
    ReferenceCoupling pi0;
};

Setup random_setup(std::uint64_t seed, int points) {
    ProblemSpec prob = instances::random_instance(seed, points);
    const double sigma = calibrate_sigma(prob.p, prob.cost, prob.rho);
    ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
    return Setup{std::move(prob), std::move(pi0)};
}

} // namespace

TEST_CASE("entropic_dual_value") {
    SECTION("constant objective: log-mean-exp of a constant is the constant") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 7);
        DiscreteMeasure p(g, Vec(7, 1.0 / 7.0));
        const ProblemSpec prob(g, p, Vec(7, 2.5), CostSpec(Norm::l1, 1.0), 0.5);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 0.2);
        const RegParams reg(0.1, 0.0, 0.2);
        REQUIRE(std::abs(entropic_dual_value(prob, reg, pi0, 0.0) - 2.5) <= 1e-10);
        // the c-tilt keeps the dual between the Jensen line and k + lam rho
        for (double lam : {0.5, 2.0}) {
            const double v = entropic_dual_value(prob, reg, pi0, lam);
            REQUIRE(v <= 2.5 + lam * prob.rho + 1e-10);
            REQUIRE(v >= 2.5 + lam * (prob.rho - expected_cost(pi0, prob.cost)) - 1e-10);
        }
        const EntropicSolution sol = solve_entropic(prob, reg, pi0);
        REQUIRE(std::abs(sol.dual.value - 2.5) <= 1e-7);
        REQUIRE(std::abs(sol.dual.lambda_star) <= 1e-6);
        // pi* = pi0 exactly when the tilt exponent is constant per row
        for (std::size_t i = 0; i < 7; ++i)
            for (std::size_t j = 0; j < 7; ++j)
                REQUIRE(std::abs(sol.primal_coupling(i, j) - pi0.joint()(i, j)) <= 1e-12);
    }

    SECTION("the beta floor reproduces the unregularized dual integrand") {
        for (int rep = 0; rep < 5; ++rep) {
            const Setup s = random_setup(7000 + rep, 9);
            const RegParams reg(0.0, 1e-14, s.pi0.sigma()); // beta < floor at small lam
            for (double lam : {0.0, 0.3, 1.0}) {
                const double smoothed = entropic_dual_value(s.prob, reg, s.pi0, lam);
                const double exact = dual_value_cost_reg(s.prob, 0.0, 0.0, lam);
                REQUIRE(std::abs(smoothed - exact) <= 1e-9);
            }
        }
    }

    SECTION("hand log-sum-exp on a two-point conditional") {
        // conditional weights (1/2, 1/2), f - lam c values (0, 1), beta = 1:
        // value = lam rho + log((1 + e)/2)
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 2);
        DiscreteMeasure p(g, Vec{1.0, 0.0});
        Vec f{0.0, 1.0};
        const ProblemSpec prob(g, p, f, CostSpec(Norm::l1, 1.0), 0.3);
        // sigma so large the conditional is uniform; lam = 0 keeps a = f
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 1e12);
        const RegParams reg(1.0, 0.0, 1e12);
        const double expect = std::log((1.0 + std::exp(1.0)) / 2.0);
        REQUIRE(std::abs(entropic_dual_value(prob, reg, pi0, 0.0) - expect) <= 1e-9);
    }

    SECTION("eps = delta = 0 is a configuration error") {
        const Setup s = random_setup(7100, 7);
        REQUIRE_THROWS_AS(entropic_dual_value(s.prob, RegParams(), s.pi0, 1.0), ConfigError);
    }
}

TEST_CASE("lambda_bar") {
    SECTION("formula arithmetic") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 3);
        DiscreteMeasure p(g, Vec{1.0, 0.0, 0.0});
        Vec f{1.0, -1.0, 0.5}; // sup |f| = 1
        const ProblemSpec prob(g, p, f, CostSpec(Norm::l1, 1.0), 0.5);
        // pick sigma with E_{pi0} c = 0.1 by construction: solve numerically
        double lo = 1e-4, hi = 10.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (expected_cost(build_reference(p, prob.cost, mid), prob.cost) < 0.1 ? lo : hi) = mid;
        }
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, lo);
        REQUIRE(std::abs(lambda_bar(prob, pi0) - 5.0) <= 1e-3);
    }

    SECTION("zero objective forces lambda star to zero") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 5);
        DiscreteMeasure p(g, Vec(5, 0.2));
        const ProblemSpec prob(g, p, Vec(5, 0.0), CostSpec(Norm::l2, 2.0), 0.3);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 0.1);
        REQUIRE(lambda_bar(prob, pi0) == 0.0);
        const EntropicSolution sol = solve_entropic(prob, RegParams(0.05, 0.05, 0.1), pi0);
        REQUIRE(sol.dual.lambda_star == 0.0);
    }

    SECTION("infeasible reference is rejected with advice") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 9);
        DiscreteMeasure p(g, Vec(9, 1.0 / 9.0));
        const ProblemSpec prob(g, p, Vec(9, 1.0), CostSpec(Norm::l1, 1.0), 1e-6);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 10.0);
        REQUIRE_THROWS_AS(lambda_bar(prob, pi0), InfeasibleError);
        REQUIRE_THROWS_WITH(lambda_bar(prob, pi0),
                            Catch::Matchers::ContainsSubstring("sigma"));
    }

    SECTION("the solved multiplier respects the bound") {
        for (int rep = 0; rep < 8; ++rep) {
            const Setup s = random_setup(7200 + rep, 9);
            const RegParams reg(0.05, 0.02, s.pi0.sigma());
            const EntropicSolution sol = solve_entropic(s.prob, reg, s.pi0);
            REQUIRE(sol.dual.lambda_star <= lambda_bar(s.prob, s.pi0) + 1e-9);
        }
    }
}

TEST_CASE("solve_entropic against a fine lambda scan") {
    const Setup s = random_setup(7300, 9);
    const RegParams reg(0.1, 0.05, s.pi0.sigma());
    const EntropicSolution sol = solve_entropic(s.prob, reg, s.pi0);

    const double lb = lambda_bar(s.prob, s.pi0);
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 10000; ++k) {
        const double lam = lb * k / 10000.0;
        best = std::min(best, entropic_dual_value(s.prob, reg, s.pi0, lam));
    }
    REQUIRE(sol.dual.value <= best + 1e-12);
    REQUIRE(std::abs(sol.dual.value - best) <= 1e-8);
}

TEST_CASE("eps sweep increases toward the unregularized value") {
    const Setup s = random_setup(7400, 9);
    const double unreg = solve_cost_reg(s.prob, 0.0, 0.0).value;
    double prev = -std::numeric_limits<double>::infinity();
    for (double eps : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005}) {
        const double v = solve_entropic(s.prob, RegParams(eps, 0.0, s.pi0.sigma()), s.pi0).dual.value;
        REQUIRE(v >= prev - 1e-9);
        REQUIRE(v <= unreg + 1e-8);
        prev = v;
    }
    REQUIRE(unreg - prev <= 0.2); // closing in
}

TEST_CASE("recover_primal") {
    SECTION("zero objective and multiplier reproduce the reference") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 5);
        DiscreteMeasure p(g, Vec{0.4, 0.0, 0.2, 0.0, 0.4});
        const ProblemSpec prob(g, p, Vec(5, 0.0), CostSpec(Norm::l2, 2.0), 0.3);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 0.15);
        const Coupling plan = recover_primal(prob, RegParams(0.2, 0.0, 0.15), pi0, 0.0);
        for (std::size_t i = 0; i < 5; ++i)
            for (std::size_t j = 0; j < 5; ++j)
                REQUIRE(std::abs(plan(i, j) - pi0.joint()(i, j)) <= 1e-14);
    }

    SECTION("tilt is invariant to constant objective shifts") {
        const Setup s = random_setup(7500, 7);
        const RegParams reg(0.1, 0.1, s.pi0.sigma());
        const Coupling a = recover_primal(s.prob, reg, s.pi0, 0.7);
        Vec shifted = s.prob.f;
        for (double& v : shifted) v += 5.0;
        const ProblemSpec prob2(s.prob.grid, s.prob.p, shifted, s.prob.cost, s.prob.rho);
        const Coupling b = recover_primal(prob2, reg, s.pi0, 0.7);
        for (std::size_t i = 0; i < a.n(); ++i)
            for (std::size_t j = 0; j < a.n(); ++j)
                REQUIRE(std::abs(a(i, j) - b(i, j)) <= 1e-13);
    }

    SECTION("hand softmax on a 2x2 instance") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 2);
        DiscreteMeasure p(g, Vec{0.5, 0.5});
        Vec f{0.2, 1.0};
        const ProblemSpec prob(g, p, f, CostSpec(Norm::l1, 1.0), 0.4);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 0.5);
        const double lam = 0.6, beta = 0.3; // eps=0.3, delta=0
        const Coupling plan = recover_primal(prob, RegParams(0.3, 0.0, 0.5), pi0, lam);
        for (std::size_t i = 0; i < 2; ++i) {
            // w_j proportional to cond(i,j) * exp((f_j - lam|x_i - y_j|)/beta)
            Vec w(2);
            for (std::size_t j = 0; j < 2; ++j) {
                const double a = f[j] - lam * std::abs(g->coord(i, 0) - g->coord(j, 0));
                w[j] = pi0.conditional()(i, j) * std::exp(a / beta);
            }
            const double z = w[0] + w[1];
            REQUIRE(std::abs(plan(i, 0) - 0.5 * w[0] / z) <= 1e-12);
            REQUIRE(std::abs(plan(i, 1) - 0.5 * w[1] / z) <= 1e-12);
        }
    }

    SECTION("degenerate tilt is an error") {
        const Setup s = random_setup(7600, 5);
        REQUIRE_THROWS_AS(recover_primal(s.prob, RegParams(0.0, 0.5, 1.0), s.pi0, 0.0),
                          std::invalid_argument);
    }
}

TEST_CASE("verify_duality diagnostics") {
    SECTION("constant objective closes everything") {
        GridPtr g = make_grid({Interval{0.0, 1.0}}, 7);
        DiscreteMeasure p(g, Vec(7, 1.0 / 7.0));
        const ProblemSpec prob(g, p, Vec(7, 1.5), CostSpec(Norm::l1, 1.0), 0.5);
        const ReferenceCoupling pi0 = build_reference(p, prob.cost, 0.1);
        const EntropicSolution sol = solve_entropic(prob, RegParams(0.1, 0.0, 0.1), pi0);
        REQUIRE(std::abs(sol.duality_gap) <= 1e-9);
        REQUIRE(sol.feasibility_slack > 0.0);
        REQUIRE(std::abs(sol.dual.lambda_star) <= 1e-6);
        const double expected_slack = prob.rho - expected_cost(pi0, prob.cost);
        REQUIRE(std::abs(sol.feasibility_slack - expected_slack) <= 1e-9);
    }

    SECTION("randomized instances: strong duality at grid scale") {
        for (int rep = 0; rep < 8; ++rep) {
            const Setup s = random_setup(7700 + rep, 9 + (rep % 2) * 8);
            const double eps = (rep % 2) ? 0.1 : 0.01;
            const double delta = (rep % 3) ? 0.01 : 0.1;
            const EntropicSolution sol =
                solve_entropic(s.prob, RegParams(eps, delta, s.pi0.sigma()), s.pi0);
            REQUIRE(std::abs(sol.duality_gap) <= 1e-6 * (1.0 + std::abs(sol.dual.value)));
            REQUIRE(sol.feasibility_slack >= -1e-8);
            REQUIRE(sol.dual.lambda_star * std::abs(sol.feasibility_slack) <= 1e-6);
            if (sol.dual.lambda_star > 1e-6)
                REQUIRE(std::abs(sol.feasibility_slack) <= 1e-6);
        }
    }
}

TEST_CASE("two-dimensional instances run the whole pipeline") {
    GridPtr g = make_grid({Interval{0.0, 1.0}, Interval{0.0, 1.0}}, 5); // 25 points
    Vec f(g->size());
    for (std::size_t j = 0; j < g->size(); ++j)
        f[j] = std::sin(3.0 * g->coord(j, 0)) + 0.4 * g->coord(j, 1);
    Vec w(g->size(), 0.0);
    w[g->nearest_index(Vec{0.25, 0.25})] = 0.5;
    w[g->nearest_index(Vec{0.75, 0.5})] = 0.5;
    DiscreteMeasure p(g, w);
    const ProblemSpec prob(g, p, f, CostSpec(Norm::l2, 2.0), 0.2);

    // unregularized route: dual vs LP oracle
    const double dual = solve_cost_reg(prob, 0.0, 0.0).value;
    const double primal = primal_lp_unreg(prob).first;
    REQUIRE(std::abs(dual - primal) <= 1e-6 * (1.0 + std::abs(primal)));

    // entropic route: gap closure and feasibility
    const double sigma = calibrate_sigma(prob.p, prob.cost, prob.rho);
    const ReferenceCoupling pi0 = build_reference(prob.p, prob.cost, sigma);
    const EntropicSolution sol = solve_entropic(prob, RegParams(0.05, 0.02, sigma), pi0);
    REQUIRE(std::abs(sol.duality_gap) <= 1e-6 * (1.0 + std::abs(sol.dual.value)));
    REQUIRE(sol.feasibility_slack >= -1e-8);
    REQUIRE(sol.dual.lambda_star <= lambda_bar(prob, pi0) + 1e-9);
    REQUIRE(sol.dual.value <= dual + 1e-8);
}

TEST_CASE("entropic dual invariants") {
    const Setup s = random_setup(7800, 11);
    const RegParams reg(0.08, 0.03, s.pi0.sigma());
    const double lb = lambda_bar(s.prob, s.pi0);
    oracle::Rng rng(71);

    SECTION("convexity by random three-point interpolation") {
        for (int t = 0; t < 20; ++t) {
            const double l1 = rng.uniform(0.0, lb);
            const double l2 = rng.uniform(0.0, lb);
            const double w = rng.uniform(0.0, 1.0);
            const double mid = w * l1 + (1.0 - w) * l2;
            const double dm = entropic_dual_value(s.prob, reg, s.pi0, mid);
            const double chord = w * entropic_dual_value(s.prob, reg, s.pi0, l1) +
                                 (1.0 - w) * entropic_dual_value(s.prob, reg, s.pi0, l2);
            REQUIRE(dm <= chord + 1e-9);
        }
    }

    SECTION("jensen lower bound through the reference plan") {
        for (int t = 0; t < 10; ++t) {
            const double lam = rng.uniform(0.0, lb);
            double ref_term = 0.0;
            const Coupling& joint = s.pi0.joint();
            for (std::size_t i = 0; i < s.prob.n(); ++i)
                for (std::size_t j = 0; j < s.prob.n(); ++j) {
                    const double w = joint(i, j);
                    if (w == 0.0) continue;
                    ref_term += w * (s.prob.f[j] - lam * cost(s.prob.cost,
                                                              s.prob.grid->point(i),
                                                              s.prob.grid->point(j)));
                }
            REQUIRE(entropic_dual_value(s.prob, reg, s.pi0, lam) >=
                    lam * s.prob.rho + ref_term - 1e-10);
        }
    }

    SECTION("regularization never helps the adversary") {
        const double unreg = solve_cost_reg(s.prob, 0.0, 0.0).value;
        const EntropicSolution sol = solve_entropic(s.prob, reg, s.pi0);
        REQUIRE(sol.dual.value <= unreg + 1e-8);
    }

    SECTION("recovered plans are feasible") {
        for (int rep = 0; rep < 5; ++rep) {
            const Setup s2 = random_setup(7900 + rep, 9);
            const EntropicSolution sol =
                solve_entropic(s2.prob, RegParams(0.05, 0.05, s2.pi0.sigma()), s2.pi0);
            REQUIRE(sol.feasibility_slack >= -1e-8);
            const DiscreteMeasure m1 = marginal(sol.primal_coupling, MarginalAxis::first);
            for (std::size_t i = 0; i < s2.prob.n(); ++i)
                REQUIRE(std::abs(m1[i] - s2.prob.p[i]) <= 1e-12);
        }
    }
}
