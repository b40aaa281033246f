#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ssp/exact_solver.hpp"
#include "ssp/rollout.hpp"
#include "ssp/scenarios.hpp"
#include "test_support.hpp"

using namespace ssp;

namespace {

// 0: decision state with a risky cheap action and a safe dear one.
// 1: good state, 2: bad state, 3: t.
DisturbanceSsp risky_choice() {
    DisturbanceSsp d;
    d.n_states = 4;
    d.terminal = StateId{3};
    d.action_labels = {{"risky", "safe"}, {"go"}, {"go"}, {"stop"}};
    d.cost = {{1.0, 3.0}, {0.0}, {10.0}, {0.0}};
    d.disturbance_labels = {"calm", "gust"};
    d.disturbance_probs = {0.5, 0.5};
    d.nominal = 0;
    const StateId t{3};
    d.successor = {{{StateId{1}, StateId{2}}, {StateId{1}, StateId{1}}}, {{t, t}}, {{t, t}}, {{t, t}}};
    return d;
}

ValueFunction risky_values() {
    ValueFunction v(4, 0.0);
    v.values[2] = 10.0;
    return v;
}

}  // namespace

TEST_CASE("greedy scores equal the Bellman operator and its greedy selector") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const KernelSsp m = random_proper_ssp(12, 4, 0.4, {0.0, 3.0}, seed);
        const ValueFunction v = noisy_surrogate(value_iteration(m).value, m.terminal, 1.0, seed);
        const GreedyResult g = greedy_policy(m, v);
        const BellmanResult b = bellman_apply(m, v);
        for (std::size_t x = 0; x < m.n_states; ++x) {
            CHECK(g.diagnostics.score[x] == b.value.values[x]);
            CHECK(g.policy.choice[x] == b.greedy.choice[x]);
            CHECK(g.diagnostics.runner_up_gap[x] >= 0.0);
        }
    }
}

TEST_CASE("ties go to the lowest action index") {
    KernelSsp m = ssp::testing::make_kernel(3, 2, {{0, "a", {{1, 1.0}}, 1.0}, {0, "b", {{2, 1.0}}, 1.0},
                                                   {1, "a", {{2, 1.0}}, 0.0}});
    ValueFunction v(3, 0.0);
    const GreedyResult g = greedy_policy(m, v);
    CHECK(g.policy.choice[0] == ActionId{0});
    CHECK(g.diagnostics.runner_up_gap[0] == 0.0);
}

TEST_CASE("rollout on the sharpness chain always continues") {
    const SharpnessInstance s = sharpness_chain({4, 0.1});
    const GreedyResult g = greedy_policy(s.model, s.surrogate);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(s.model.action_labels[i][g.policy.choice[i].index] == "continue");
        CHECK(g.diagnostics.score[i] == doctest::Approx(-0.05).epsilon(1e-15));
    }
    CHECK(s.model.action_labels[4][g.policy.choice[4].index] == "stop");
}

TEST_CASE("CE equals rollout when the disturbance is deterministic") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const DisturbanceSsp d = random_disturbance_ssp(9, 3, 1, {0.0, 2.0}, seed);
        const KernelSsp k = induce_kernel(d);
        const ValueFunction v = noisy_surrogate(value_iteration(k).value, d.terminal, 0.5, seed + 7);
        CHECK(ce_policy(d, v) == greedy_policy(k, v).policy);
        CHECK(mismatch_delta(d, v).delta == 0.0);
    }
}

TEST_CASE("CE and rollout diverge when the nominal disturbance is optimistic") {
    const DisturbanceSsp d = risky_choice();
    const ValueFunction v = risky_values();
    const KernelSsp k = induce_kernel(d);
    CHECK(greedy_policy(k, v).policy.choice[0] == ActionId{1});
    const StationaryPolicy ce = ce_policy(d, v);
    CHECK(ce.choice[0] == ActionId{0});

    const MismatchResult mm = mismatch_delta(d, v);
    CHECK(mm.delta == 5.0);
    CHECK(mm.table[0][0] == 5.0);
    CHECK(mm.table[0][1] == 0.0);

    // Q(0, risky) = 1 + 5 = 6 against the best 3.
    const EtaResult eta = eta_inexactness(k, v, ce);
    CHECK(eta.eta == 3.0);
    CHECK(eta.eta <= 2.0 * mm.delta);
}

TEST_CASE("mismatch delta: two-point and constant values") {
    DisturbanceSsp d = risky_choice();
    ValueFunction v(4, 0.0);
    v.values[2] = 4.0;
    CHECK(mismatch_delta(d, v).delta == 2.0);
    v.values[1] = 4.0;
    CHECK(mismatch_delta(d, v).delta == 0.0);

    std::vector<bool> only_bad(4, false);
    only_bad[2] = true;
    v.values[1] = 0.0;
    CHECK(mismatch_delta(d, v, only_bad).delta == 0.0);
}

TEST_CASE("eta of the CE policy never exceeds 2 delta") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const DisturbanceSsp d = random_disturbance_ssp(2 + seed % 12, 1 + seed % 4, 1 + seed % 4, {0.0, 2.0}, seed);
        const KernelSsp k = induce_kernel(d);
        const ValueFunction v = noisy_surrogate(value_iteration(k).value, d.terminal, 0.3, seed);
        const double delta = mismatch_delta(d, v).delta;
        const double eta = eta_inexactness(k, v, ce_policy(d, v)).eta;
        CHECK(eta <= 2.0 * delta + 1e-12);
    }
}

TEST_CASE("eta of the greedy policy is zero") {
    const KernelSsp m = random_proper_ssp(10, 3, 0.5, {0.0, 1.0}, 3);
    const ValueFunction v = noisy_surrogate(value_iteration(m).value, m.terminal, 0.2, 4);
    CHECK(eta_inexactness(m, v, greedy_policy(m, v).policy).eta == 0.0);
}

TEST_CASE("rollout rejects malformed value functions") {
    const KernelSsp m = ssp::testing::countdown_chain(2);
    CHECK_THROWS(greedy_policy(m, ValueFunction(2, 0.0)));
    ValueFunction v(3, 0.0);
    v.values[0] = 1.0;
    CHECK_THROWS(greedy_policy(m, v));
}
