#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ssp/model.hpp"
#include "ssp/scenarios.hpp"
#include "test_support.hpp"

using namespace ssp;
using ssp::testing::make_kernel;

namespace {

DisturbanceSsp two_point(std::size_t y_for_w0, std::size_t y_for_w1) {
    // States: 0 (decision), 1 (y), 2 (t).
    DisturbanceSsp d;
    d.n_states = 3;
    d.terminal = StateId{2};
    d.action_labels = {{"go"}, {"go"}, {"stop"}};
    d.cost = {{1.0}, {1.0}, {0.0}};
    d.disturbance_labels = {"w0", "w1"};
    d.disturbance_probs = {0.5, 0.5};
    d.nominal = 0;
    d.successor = {{{StateId{y_for_w0}, StateId{y_for_w1}}}, {{StateId{2}, StateId{2}}}, {{StateId{2}, StateId{2}}}};
    return d;
}

}  // namespace

TEST_CASE("validate accepts an absorbing terminal with unit rows") {
    const KernelSsp k = ssp::testing::countdown_chain(3);
    CHECK(validate(k).empty());
}

TEST_CASE("validate names the (state, action) of a short row") {
    KernelSsp k = make_kernel(3, 2, {{0, "a", {{2, 1.0}}, 1.0}, {1, "a", {{0, 0.45}, {2, 0.5}}, 1.0}});
    const auto report = validate(k);
    REQUIRE(report.size() == 1);
    CHECK(report[0].state == 1);
    CHECK(report[0].action == 0);
}

TEST_CASE("validate flags negative stage costs") {
    KernelSsp k = make_kernel(2, 1, {{0, "a", {{1, 1.0}}, -0.1}});
    const auto report = validate(k);
    REQUIRE(report.size() == 1);
    CHECK(report[0].what.find("cost") != std::string::npos);
    CHECK_THROWS_AS(require_valid(k), InvalidModel);
}

TEST_CASE("validate enforces the terminal convention") {
    KernelSsp k = make_kernel(2, 1, {{0, "a", {{1, 1.0}}, 1.0}});
    k.choices[1][0].cost = 0.5;
    CHECK_FALSE(validate(k).empty());
    k.choices[1][0].cost = 0.0;
    k.choices[1][0].row = {Successor{StateId{0}, 1.0}};
    CHECK_FALSE(validate(k).empty());
    k.choices[1].clear();
    k.action_labels[1].clear();
    CHECK_FALSE(validate(k).empty());
}

TEST_CASE("validate flags states with no admissible action") {
    KernelSsp k = make_kernel(3, 2, {{0, "a", {{2, 1.0}}, 1.0}});
    const auto report = validate(k);
    REQUIRE(report.size() == 1);
    CHECK(report[0].state == 1);
}

TEST_CASE("disturbance validation") {
    DisturbanceSsp d = two_point(1, 2);
    CHECK(validate(d).empty());
    d.disturbance_probs = {0.5, 0.4};
    CHECK_FALSE(validate(d).empty());
    d = two_point(1, 2);
    d.nominal = 2;
    CHECK_FALSE(validate(d).empty());
    d = two_point(1, 2);
    d.successor[2][0][1] = StateId{0};
    CHECK_FALSE(validate(d).empty());
}

TEST_CASE("induce_kernel: deterministic F gives point masses") {
    DisturbanceSsp d = two_point(1, 1);
    d.disturbance_labels = {"only"};
    d.disturbance_probs = {1.0};
    for (auto& per_x : d.successor)
        for (auto& by_w : per_x) by_w.resize(1);
    const KernelSsp k = induce_kernel(d);
    CHECK(validate(k).empty());
    REQUIRE(k.choices[0][0].row.size() == 1);
    CHECK(k.choices[0][0].row[0].to == StateId{1});
    CHECK(k.choices[0][0].row[0].prob == 1.0);
}

TEST_CASE("induce_kernel: equiprobable disturbances to distinct successors") {
    const KernelSsp k = induce_kernel(two_point(1, 2));
    const auto& row = k.choices[0][0].row;
    REQUIRE(row.size() == 2);
    CHECK(row[0].to == StateId{1});
    CHECK(row[0].prob == 0.5);
    CHECK(row[1].to == StateId{2});
    CHECK(row[1].prob == 0.5);
}

TEST_CASE("induce_kernel: disturbances with a shared successor merge") {
    const KernelSsp k = induce_kernel(two_point(2, 2));
    const auto& row = k.choices[0][0].row;
    REQUIRE(row.size() == 1);
    CHECK(row[0].to == StateId{2});
    CHECK(row[0].prob == 1.0);
}

TEST_CASE("induce_kernel output always validates and rows sum to sum q") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const DisturbanceSsp d = random_disturbance_ssp(2 + seed % 9, 1 + seed % 4, 1 + seed % 5, {0.0, 2.0}, seed);
        REQUIRE(validate(d).empty());
        const KernelSsp k = induce_kernel(d);
        CHECK(validate(k).empty());
        double qsum = 0.0;
        for (double q : d.disturbance_probs) qsum += q;
        for (const auto& acts : k.choices)
            for (const auto& tr : acts) {
                double s = 0.0;
                for (const auto& e : tr.row) s += e.prob;
                CHECK(std::abs(s - qsum) <= 1e-12);
            }
    }
}

TEST_CASE("unit_cost sets unit costs, keeps rows bit-exact and is idempotent") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const KernelSsp k = random_proper_ssp(6, 3, 0.5, {0.0, 5.0}, seed);
        const KernelSsp u = unit_cost(k);
        for (std::size_t x = 0; x < k.n_states; ++x)
            for (std::size_t a = 0; a < k.choices[x].size(); ++a) {
                CHECK(u.choices[x][a].cost == (x == k.terminal.index ? 0.0 : 1.0));
                const auto& r1 = k.choices[x][a].row;
                const auto& r2 = u.choices[x][a].row;
                REQUIRE(r1.size() == r2.size());
                for (std::size_t i = 0; i < r1.size(); ++i) {
                    CHECK(r1[i].to == r2[i].to);
                    CHECK(r1[i].prob == r2[i].prob);
                }
            }
        const KernelSsp uu = unit_cost(u);
        for (std::size_t x = 0; x < k.n_states; ++x)
            for (std::size_t a = 0; a < k.choices[x].size(); ++a) CHECK(uu.choices[x][a].cost == u.choices[x][a].cost);
    }
}

TEST_CASE("unit_cost rejects invalid models") {
    KernelSsp k = make_kernel(2, 1, {{0, "a", {{1, 0.9}}, 1.0}});
    CHECK_THROWS_AS(unit_cost(k), InvalidModel);
}

TEST_CASE("canonicalize_rows sorts, merges and renormalizes within tolerance only") {
    KernelSsp k = make_kernel(3, 2, {{0, "a", {{2, 0.25}, {1, 0.5}, {2, 0.25 + 4e-10}}, 1.0}, {1, "a", {{2, 0.9}}, 1.0}});
    canonicalize_rows(k);
    const auto& row = k.choices[0][0].row;
    REQUIRE(row.size() == 2);
    CHECK(row[0].to == StateId{1});
    CHECK(row[1].to == StateId{2});
    CHECK(std::abs(row[0].prob + row[1].prob - 1.0) < 1e-15);
    // Outside tolerance: left as is, still reported.
    CHECK(k.choices[1][0].row[0].prob == 0.9);
    CHECK(validate(k).size() == 1);
}

TEST_CASE("value function and policy preconditions") {
    const KernelSsp k = ssp::testing::countdown_chain(2);
    CHECK_THROWS(require_value_function(ValueFunction(3, 1.0), 3, StateId{0}));
    CHECK_THROWS(require_value_function(ValueFunction(2, 0.0), 3, StateId{0}));
    ValueFunction v(3, 0.0);
    v.values[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS(require_value_function(v, 3, StateId{0}));
    StationaryPolicy pi = ssp::testing::uniform_policy(3, 1);
    CHECK_THROWS(require_policy(pi, k));
}
