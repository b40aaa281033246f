#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ssp/exact_solver.hpp"
#include "ssp/montecarlo.hpp"
#include "ssp/random.hpp"
#include "ssp/rollout.hpp"
#include "ssp/scenarios.hpp"
#include "test_support.hpp"

using namespace ssp;

TEST_CASE("counter generator reproduces the SplitMix64 stream") {
    // Reference values of SplitMix64 seeded with 1234567 (the published test vector).
    CounterRng rng(1234567);
    CHECK(rng.next_u64() == 6457827717110365317ULL);
    CHECK(rng.next_u64() == 3203168211198807973ULL);
    CHECK(rng.next_u64() == 9817491932198370423ULL);
    CHECK(rng.next_u64() == 4593380528125082431ULL);
    CHECK(rng.next_u64() == 16408922859458223821ULL);
    CounterRng u(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("simulate is a pure function of the seed") {
    const KernelSsp m = random_proper_ssp(12, 3, 0.4, {0.0, 2.0}, 5);
    const StationaryPolicy pi = value_iteration(m).greedy;
    const Trajectory a = simulate(m, pi, StateId{0}, 99);
    const Trajectory b = simulate(m, pi, StateId{0}, 99);
    CHECK(a.states == b.states);
    CHECK(a.costs == b.costs);
    CHECK(a.tau == a.costs.size());
    CHECK(a.states.size() == a.tau + 1);
    CHECK(a.states.back() == m.terminal);
}

TEST_CASE("a trajectory started at t has length zero") {
    const KernelSsp m = ssp::testing::countdown_chain(3);
    const Trajectory t = simulate(m, ssp::testing::uniform_policy(4), StateId{0}, 1);
    CHECK(t.tau == 0);
    CHECK(t.total_cost() == 0.0);
    CHECK_FALSE(t.truncated);
}

TEST_CASE("deterministic chain follows the only path") {
    const SharpnessInstance s = sharpness_chain({3, 0.1});
    const StationaryPolicy pi = greedy_policy(s.model, s.surrogate).policy;
    const Trajectory t = simulate(s.model, pi, StateId{0}, 42);
    CHECK(t.tau == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(t.states[i] == StateId{i});
    CHECK(t.total_cost() == doctest::Approx(0.15));
    std::ostringstream os;
    write_trajectory_table(os, t);
    CHECK(os.str().rfind("step,state,action,cost,next\n0,0,1,0.05,1\n", 0) == 0);
}

TEST_CASE("truncation is reported") {
    const KernelSsp m = ssp::testing::make_kernel(2, 1, {{0, "go", {{1, 1.0}}, 1.0}, {0, "wait", {{0, 1.0}}, 1.0}});
    const StationaryPolicy wait = ssp::testing::uniform_policy(2, 1);
    StationaryPolicy pi = wait;
    pi.choice[1] = kStopAction;
    const Trajectory t = simulate(m, pi, StateId{0}, 3, 50);
    CHECK(t.truncated);
    CHECK(t.tau == 50);
    const EstimateReport e = estimate(m, pi, StateId{0}, 10, 3, 50);
    CHECK(e.truncations == 10);
    CHECK_FALSE(e.valid);
}

TEST_CASE("geometric instance: mean hitting time near 1/p") {
    const KernelSsp g = ssp::testing::geometric(0.5);
    const EstimateReport e = estimate(g, ssp::testing::uniform_policy(2), StateId{0}, 100000, 11);
    CHECK(e.valid);
    CHECK(covers(e.mean_tau, e.half_width_tau, 2.0));
    CHECK(e.mean_cost == e.mean_tau);
    // Var(tau) = (1 - p) / p^2 = 2.
    CHECK(e.sd_tau == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("zero-variance estimates cover the exact value") {
    const SharpnessInstance s = sharpness_chain({10, 0.1});
    const StationaryPolicy pi = greedy_policy(s.model, s.surrogate).policy;
    const EstimateReport e = estimate(s.model, pi, StateId{0}, 1000, 5);
    CHECK(e.sd_cost == 0.0);
    CHECK(e.mean_tau == 11.0);
    CHECK(covers(e.mean_cost, e.half_width_cost, s.expected_gap));
}

TEST_CASE("estimates agree with the exact solver on random models") {
    std::size_t covered = 0;
    const std::size_t runs = 40;
    for (std::uint64_t seed = 0; seed < runs; ++seed) {
        const KernelSsp m = random_proper_ssp(8, 3, 0.4, {0.0, 2.0}, seed);
        const StationaryPolicy pi = value_iteration(m).greedy;
        const EstimateReport e = estimate(m, pi, StateId{0}, 20000, seed);
        const double j = policy_evaluation_exact(m, pi, StateId{0}).at_start;
        const double tau = *hitting_time_exact(m, pi, StateId{0}).steps;
        if (covers(e.mean_cost, e.half_width_cost, j) && covers(e.mean_tau, e.half_width_tau, tau)) ++covered;
    }
    // Two 99% intervals per run; allow a few misses.
    CHECK(covered >= runs - 4);
}

TEST_CASE("disturbance and kernel forms simulate the same law") {
    const GridworldSpec spec{.obstacle_moves = five_move_obstacle(0.2)};
    const Gridworld g = gridworld_nav(spec);
    const KernelSsp k = induce_kernel(g.model);
    const StationaryPolicy pi = ce_policy(g.model, frozen_obstacle_surrogate(spec));
    const double j = policy_evaluation_exact(k, pi, g.start()).at_start;
    const EstimateReport ed = estimate(g.model, pi, g.start(), 50000, 21);
    const EstimateReport ek = estimate(k, pi, g.start(), 50000, 22);
    CHECK(covers(ed.mean_cost, ed.half_width_cost, j));
    CHECK(covers(ek.mean_cost, ek.half_width_cost, j));
}

TEST_CASE("estimate rejects bad inputs") {
    const KernelSsp m = ssp::testing::countdown_chain(2);
    CHECK_THROWS(estimate(m, ssp::testing::uniform_policy(3), StateId{5}, 10, 1));
    CHECK_THROWS(estimate(m, ssp::testing::uniform_policy(2), StateId{0}, 10, 1));
    CHECK_THROWS(simulate(m, ssp::testing::uniform_policy(3, 1), StateId{2}, 1));
}
