#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <deque>
#include <map>

#include "ssp/exact_solver.hpp"
#include "ssp/scenarios.hpp"

using namespace ssp;

namespace {

// Fewest robot moves from `from` until a move lands within the arrival radius.
// Plain BFS over robot cells; the obstacle plays no part.
int bfs_moves(const GridworldSpec& s, Cell from) {
    auto arrived = [&](Cell c) { return std::abs(c.x - s.target.x) + std::abs(c.y - s.target.y) <= s.arrival_radius; };
    std::map<std::pair<int, int>, int> dist{{{from.x, from.y}, 0}};
    std::deque<Cell> queue{from};
    while (!queue.empty()) {
        const Cell c = queue.front();
        queue.pop_front();
        const int d = dist[{c.x, c.y}];
        for (const Move& m : robot_moves(s.eight_connected)) {
            const Cell n{std::clamp(c.x + m.dx, 0, s.width - 1), std::clamp(c.y + m.dy, 0, s.height - 1)};
            if (arrived(n)) return d + 1;
            if (dist.emplace(std::pair{n.x, n.y}, d + 1).second) queue.push_back(n);
        }
    }
    return -1;
}

}  // namespace

TEST_CASE("sharpness chain structure and optimal values") {
    for (std::size_t m : {1, 4, 100}) {
        const SharpnessInstance s = sharpness_chain({m, 0.1});
        CHECK(validate(s.model).empty());
        CHECK(s.model.n_states == m + 2);
        CHECK(s.model.terminal == StateId{m + 1});
        CHECK(s.expected_gap == doctest::Approx(static_cast<double>(m) * 0.05));
        CHECK(s.expected_tau == static_cast<double>(m + 1));
        const ValueFunction vstar = value_iteration(s.model).value;
        CHECK(vstar.values == s.expected_vstar.values);
        CHECK(sup_norm_diff(s.surrogate, vstar) == 0.1);
        CHECK(s.surrogate[s.model.terminal] == 0.0);
    }
    CHECK_THROWS(sharpness_chain({0, 0.1}));
    CHECK_THROWS(sharpness_chain({3, 0.0}));
    CHECK_THROWS(sharpness_chain({3, -1.0}));
}

TEST_CASE("gridworld with a still obstacle: V* is the BFS distance for every joint state") {
    for (int radius : {0, 1}) {
        for (bool eight : {false, true}) {
            GridworldSpec s;
            s.arrival_radius = radius;
            s.eight_connected = eight;
            const Gridworld g = gridworld_nav(s);
            CHECK(validate(g.model).empty());
            const KernelSsp k = induce_kernel(g.model);
            const ValueFunction vstar = value_iteration(k).value;
            for (std::size_t x = 0; x < g.cells() * g.cells(); ++x)
                CHECK(vstar.values[x] == doctest::Approx(bfs_moves(s, g.robot_of(StateId{x}))).epsilon(1e-12));
            CHECK(frozen_obstacle_surrogate(s).values == vstar.values);
        }
    }
}

TEST_CASE("corridor 1 x 5 takes four moves") {
    GridworldSpec s;
    s.width = 5;
    s.height = 1;
    s.target = {4, 0};
    s.obstacle_start = {2, 0};
    const Gridworld g = gridworld_nav(s);
    CHECK(value_iteration(induce_kernel(g.model)).value[g.start()] == 4.0);
}

TEST_CASE("state encoding round-trips") {
    GridworldSpec s;
    s.width = 4;
    s.height = 3;
    s.target = {3, 2};
    s.obstacle_start = {1, 1};
    const Gridworld g = gridworld_nav(s);
    CHECK(g.model.n_states == 12 * 12 + 1);
    CHECK(g.model.terminal == StateId{144});
    for (int rx = 0; rx < 4; ++rx)
        for (int ry = 0; ry < 3; ++ry)
            for (int ox = 0; ox < 4; ++ox)
                for (int oy = 0; oy < 3; ++oy) {
                    const StateId x = g.state({rx, ry}, {ox, oy});
                    CHECK(g.robot_of(x) == Cell{rx, ry});
                    CHECK(g.obstacle_of(x) == Cell{ox, oy});
                }
}

TEST_CASE("moving obstacle: wall clamping folds blocked moves into stay") {
    GridworldSpec s;
    s.obstacle_moves = five_move_obstacle(0.2);
    s.collision_penalty = 3.0;
    const Gridworld g = gridworld_nav(s);
    CHECK(validate(g.model).empty());
    const KernelSsp k = induce_kernel(g.model);
    CHECK(validate(k).empty());
    // Robot at (2,0) stays; obstacle in the corner (0,0) can only go up or right.
    const StateId x = g.state({2, 0}, {0, 0});
    const Transition& tr = k.at(x, ActionId{0});
    REQUIRE(tr.row.size() == 3);
    CHECK(tr.row[0].to == g.state({2, 0}, {0, 0}));
    CHECK(tr.row[0].prob == doctest::Approx(0.6));
    CHECK(tr.cost == 1.0);
    CHECK(k.at(g.state({1, 1}, {1, 1}), ActionId{0}).cost == 4.0);
    // Arrival is decided by the robot move alone.
    const StateId near = g.state({4, 3}, {0, 0});
    CHECK(k.at(near, ActionId{1}).row.size() == 1);
    CHECK(k.at(near, ActionId{1}).row[0].to == k.terminal);
}

TEST_CASE("gridworld spec validation") {
    GridworldSpec s;
    s.target = {5, 0};
    CHECK_THROWS(gridworld_nav(s));
    s = GridworldSpec{};
    s.obstacle_moves = {{"stay", 0, 0, 0.5}, {"up", 0, 1, 0.4}};
    CHECK_THROWS(gridworld_nav(s));
    s = GridworldSpec{};
    s.nominal_move = "left";
    CHECK_THROWS(gridworld_nav(s));
    s = GridworldSpec{};
    s.collision_penalty = -1.0;
    CHECK_THROWS(gridworld_nav(s));
    CHECK_THROWS(five_move_obstacle(1.5));
}

TEST_CASE("random generators: valid and proper for every seed") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const KernelSsp k = random_proper_ssp(2 + seed % 15, 1 + seed % 4, 0.1 + 0.1 * static_cast<double>(seed % 9),
                                              {0.0, 5.0}, seed);
        REQUIRE(validate(k).empty());
        const auto reach = can_reach_terminal(k);
        CHECK(std::all_of(reach.begin(), reach.end(), [](bool b) { return b; }));
        const SolveResult sol = value_iteration(k);
        for (std::size_t x = 0; x < k.n_states; ++x) CHECK(properness_check(k, sol.greedy, StateId{x}));

        const DisturbanceSsp d = random_disturbance_ssp(2 + seed % 15, 1 + seed % 4, 1 + seed % 5, {0.0, 5.0}, seed);
        REQUIRE(validate(d).empty());
        const KernelSsp dk = induce_kernel(d);
        const SolveResult dsol = value_iteration(dk);
        for (std::size_t x = 0; x < dk.n_states; ++x) CHECK(properness_check(dk, dsol.greedy, StateId{x}));
    }
}

TEST_CASE("generators are deterministic in their seed") {
    const KernelSsp a = random_proper_ssp(9, 3, 0.5, {0.0, 1.0}, 77);
    const KernelSsp b = random_proper_ssp(9, 3, 0.5, {0.0, 1.0}, 77);
    for (std::size_t x = 0; x < a.n_states; ++x)
        for (std::size_t u = 0; u < a.choices[x].size(); ++u) {
            CHECK(a.choices[x][u].cost == b.choices[x][u].cost);
            REQUIRE(a.choices[x][u].row.size() == b.choices[x][u].row.size());
            for (std::size_t i = 0; i < a.choices[x][u].row.size(); ++i) {
                CHECK(a.choices[x][u].row[i].to == b.choices[x][u].row[i].to);
                CHECK(a.choices[x][u].row[i].prob == b.choices[x][u].row[i].prob);
            }
        }
    const ValueFunction v(9, 1.0);
    CHECK(noisy_surrogate(v, a.terminal, 0.3, 5).values == noisy_surrogate(v, a.terminal, 0.3, 5).values);
    CHECK(noisy_surrogate(v, a.terminal, 0.3, 5)[a.terminal] == 0.0);
    CHECK(random_policy(a, 3) == random_policy(a, 3));
}
