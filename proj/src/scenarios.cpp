#include "ssp/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>

#include "ssp/exact_solver.hpp"
#include "ssp/random.hpp"

namespace ssp {

namespace {

// Stream identifiers so that generators sharing a seed draw independent streams.
constexpr std::uint64_t kKernelStream = 0x4B45524E;
constexpr std::uint64_t kDisturbanceStream = 0x44495354;
constexpr std::uint64_t kNoiseStream = 0x4E4F4953;
constexpr std::uint64_t kPolicyStream = 0x504F4C49;

Cell clamp_move(const GridworldSpec& spec, Cell c, int dx, int dy) {
    return {std::clamp(c.x + dx, 0, spec.width - 1), std::clamp(c.y + dy, 0, spec.height - 1)};
}

bool in_bounds(const GridworldSpec& spec, Cell c) {
    return c.x >= 0 && c.y >= 0 && c.x < spec.width && c.y < spec.height;
}

}  // namespace

SharpnessInstance sharpness_chain(const SharpnessSpec& spec) {
    if (spec.M < 1) throw std::invalid_argument("sharpness chain needs M >= 1");
    if (!(spec.eps > 0.0) || !std::isfinite(spec.eps)) throw std::invalid_argument("sharpness chain needs eps > 0");
    const std::size_t m = spec.M;
    SharpnessInstance inst;
    KernelSsp& k = inst.model;
    k.n_states = m + 2;
    k.terminal = StateId{m + 1};
    k.action_labels.resize(k.n_states);
    k.choices.resize(k.n_states);
    for (std::size_t i = 0; i < m; ++i) {
        k.action_labels[i] = {"stop", "continue"};
        k.choices[i] = {Transition{{Successor{k.terminal, 1.0}}, 0.0},
                        Transition{{Successor{StateId{i + 1}, 1.0}}, spec.eps / 2.0}};
    }
    k.action_labels[m] = {"stop"};
    k.choices[m] = {Transition{{Successor{k.terminal, 1.0}}, 0.0}};
    k.action_labels[m + 1] = {kStopLabel};
    k.choices[m + 1] = {Transition{{Successor{k.terminal, 1.0}}, 0.0}};

    inst.surrogate = ValueFunction(k.n_states, -spec.eps);
    inst.surrogate[k.terminal] = 0.0;
    inst.expected_gap = static_cast<double>(m) * spec.eps / 2.0;
    inst.expected_tau = static_cast<double>(m + 1);
    inst.expected_vstar = ValueFunction(k.n_states, 0.0);
    return inst;
}

std::vector<Move> five_move_obstacle(double stay_prob) {
    if (!(stay_prob >= 0.0 && stay_prob <= 1.0)) throw std::invalid_argument("stay probability outside [0,1]");
    const double other = (1.0 - stay_prob) / 4.0;
    return {{"stay", 0, 0, stay_prob}, {"up", 0, 1, other}, {"down", 0, -1, other},
            {"left", -1, 0, other},    {"right", 1, 0, other}};
}

std::vector<Move> robot_moves(bool eight_connected) {
    std::vector<Move> m{{"stay", 0, 0}, {"up", 0, 1}, {"down", 0, -1}, {"left", -1, 0}, {"right", 1, 0}};
    if (eight_connected) {
        m.push_back({"up-left", -1, 1});
        m.push_back({"up-right", 1, 1});
        m.push_back({"down-left", -1, -1});
        m.push_back({"down-right", 1, -1});
    }
    return m;
}

StateId Gridworld::state(Cell robot, Cell obstacle) const {
    const auto r = static_cast<std::size_t>(robot.y * spec.width + robot.x);
    const auto o = static_cast<std::size_t>(obstacle.y * spec.width + obstacle.x);
    return StateId{r * cells() + o};
}

Cell Gridworld::robot_of(StateId x) const {
    const auto r = static_cast<int>(x.index / cells());
    return {r % spec.width, r / spec.width};
}

Cell Gridworld::obstacle_of(StateId x) const {
    const auto o = static_cast<int>(x.index % cells());
    return {o % spec.width, o / spec.width};
}

void validate_gridworld_spec(const GridworldSpec& spec) {
    if (spec.width < 1 || spec.height < 1) throw std::invalid_argument("grid dimensions must be positive");
    for (Cell c : {spec.robot_start, spec.target, spec.obstacle_start})
        if (!in_bounds(spec, c)) throw std::invalid_argument("gridworld cell out of bounds");
    if (spec.arrival_radius < 0) throw std::invalid_argument("arrival radius must be nonnegative");
    if (!(spec.collision_penalty >= 0.0) || !std::isfinite(spec.collision_penalty))
        throw std::invalid_argument("collision penalty must be finite and nonnegative");
    if (spec.obstacle_moves.empty()) throw std::invalid_argument("obstacle motion distribution is empty");
    double sum = 0.0;
    std::set<std::string> labels;
    bool nominal_found = false;
    for (const Move& m : spec.obstacle_moves) {
        if (!(m.prob >= 0.0 && m.prob <= 1.0)) throw std::invalid_argument("obstacle move probability outside [0,1]");
        if (!labels.insert(m.label).second) throw std::invalid_argument("duplicate obstacle move label " + m.label);
        sum += m.prob;
        nominal_found = nominal_found || m.label == spec.nominal_move;
    }
    if (std::abs(sum - 1.0) > kProbabilityTolerance)
        throw std::invalid_argument("obstacle move probabilities do not sum to 1");
    if (!nominal_found) throw std::invalid_argument("nominal move '" + spec.nominal_move + "' is not an obstacle move");
}

Gridworld gridworld_nav(const GridworldSpec& spec) {
    validate_gridworld_spec(spec);
    Gridworld g;
    g.spec = spec;
    const std::size_t cells = g.cells();
    const std::vector<Move> robot = robot_moves(spec.eight_connected);

    DisturbanceSsp& d = g.model;
    d.n_states = cells * cells + 1;
    d.terminal = StateId{cells * cells};
    for (std::size_t w = 0; w < spec.obstacle_moves.size(); ++w) {
        d.disturbance_labels.push_back(spec.obstacle_moves[w].label);
        d.disturbance_probs.push_back(spec.obstacle_moves[w].prob);
        if (spec.obstacle_moves[w].label == spec.nominal_move) d.nominal = w;
    }
    const std::size_t nw = d.disturbance_probs.size();
    d.action_labels.resize(d.n_states);
    d.cost.resize(d.n_states);
    d.successor.resize(d.n_states);

    for (std::size_t x = 0; x < cells * cells; ++x) {
        const Cell r = g.robot_of(StateId{x});
        const Cell o = g.obstacle_of(StateId{x});
        const double f = 1.0 + (r == o ? spec.collision_penalty : 0.0);
        for (const Move& a : robot) {
            d.action_labels[x].push_back(a.label);
            d.cost[x].push_back(f);
            const Cell r2 = clamp_move(spec, r, a.dx, a.dy);
            const bool arrived = std::abs(r2.x - spec.target.x) + std::abs(r2.y - spec.target.y) <= spec.arrival_radius;
            std::vector<StateId> by_w(nw, d.terminal);
            if (!arrived) {
                for (std::size_t w = 0; w < nw; ++w) {
                    const Move& m = spec.obstacle_moves[w];
                    by_w[w] = g.state(r2, clamp_move(spec, o, m.dx, m.dy));
                }
            }
            d.successor[x].push_back(std::move(by_w));
        }
    }
    d.action_labels[d.terminal.index] = {kStopLabel};
    d.cost[d.terminal.index] = {0.0};
    d.successor[d.terminal.index] = {std::vector<StateId>(nw, d.terminal)};
    return g;
}

ValueFunction frozen_obstacle_surrogate(const GridworldSpec& spec) {
    GridworldSpec frozen = spec;
    frozen.obstacle_moves = {{"stay", 0, 0, 1.0}};
    frozen.nominal_move = "stay";
    const Gridworld g = gridworld_nav(frozen);
    return value_iteration(induce_kernel(g.model)).value;
}

KernelSsp random_proper_ssp(std::size_t n_states, std::size_t n_actions, double density,
                            std::pair<double, double> cost_range, std::uint64_t seed) {
    if (n_states < 2) throw std::invalid_argument("random SSP needs at least 2 states");
    if (n_actions < 1) throw std::invalid_argument("random SSP needs at least 1 action");
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("density must be in (0, 1]");
    if (!(cost_range.first >= 0.0 && cost_range.second >= cost_range.first))
        throw std::invalid_argument("cost range must satisfy 0 <= lo <= hi");

    CounterRng rng(derive_seed(seed, kKernelStream));
    KernelSsp k;
    k.n_states = n_states;
    k.terminal = StateId{n_states - 1};
    k.action_labels.resize(n_states);
    k.choices.resize(n_states);
    for (std::size_t x = 0; x + 1 < n_states; ++x) {
        const std::size_t exit_action = rng.below(n_actions);
        for (std::size_t u = 0; u < n_actions; ++u) {
            std::vector<double> weight(n_states, 0.0);
            double total = 0.0;
            for (std::size_t y = 0; y < n_states; ++y) {
                if (rng.uniform() < density) {
                    weight[y] = rng.uniform(0.05, 1.0);
                    total += weight[y];
                }
            }
            if (total == 0.0) {
                weight[rng.below(n_states)] = 1.0;
                total = 1.0;
            }
            const double exit_mass = u == exit_action ? rng.uniform(0.05, 0.5) : 0.0;
            Transition tr;
            for (std::size_t y = 0; y < n_states; ++y) {
                double p = (1.0 - exit_mass) * weight[y] / total;
                if (y == k.terminal.index) p += exit_mass;
                if (p > 0.0) tr.row.push_back(Successor{StateId{y}, p});
            }
            tr.cost = rng.uniform(cost_range.first, cost_range.second);
            k.choices[x].push_back(std::move(tr));
            k.action_labels[x].push_back("a" + std::to_string(u));
        }
    }
    k.action_labels[k.terminal.index] = {kStopLabel};
    k.choices[k.terminal.index] = {Transition{{Successor{k.terminal, 1.0}}, 0.0}};
    canonicalize_rows(k);
    return k;
}

DisturbanceSsp random_disturbance_ssp(std::size_t n_states, std::size_t n_actions, std::size_t n_disturbances,
                                      std::pair<double, double> cost_range, std::uint64_t seed) {
    if (n_states < 2) throw std::invalid_argument("random SSP needs at least 2 states");
    if (n_actions < 1 || n_disturbances < 1) throw std::invalid_argument("need at least one action and disturbance");
    if (!(cost_range.first >= 0.0 && cost_range.second >= cost_range.first))
        throw std::invalid_argument("cost range must satisfy 0 <= lo <= hi");

    CounterRng rng(derive_seed(seed, kDisturbanceStream));
    DisturbanceSsp d;
    d.n_states = n_states;
    d.terminal = StateId{n_states - 1};
    double total = 0.0;
    for (std::size_t w = 0; w < n_disturbances; ++w) {
        d.disturbance_labels.push_back("w" + std::to_string(w));
        d.disturbance_probs.push_back(rng.uniform(0.1, 1.0));
        total += d.disturbance_probs.back();
    }
    for (double& q : d.disturbance_probs) q /= total;
    d.nominal = rng.below(n_disturbances);

    d.action_labels.resize(n_states);
    d.cost.resize(n_states);
    d.successor.resize(n_states);
    for (std::size_t x = 0; x + 1 < n_states; ++x) {
        const std::size_t exit_action = rng.below(n_actions);
        const std::size_t exit_w = rng.below(n_disturbances);
        for (std::size_t u = 0; u < n_actions; ++u) {
            d.action_labels[x].push_back("a" + std::to_string(u));
            d.cost[x].push_back(rng.uniform(cost_range.first, cost_range.second));
            std::vector<StateId> by_w(n_disturbances);
            for (std::size_t w = 0; w < n_disturbances; ++w) by_w[w] = StateId{rng.below(n_states)};
            if (u == exit_action) by_w[exit_w] = d.terminal;
            d.successor[x].push_back(std::move(by_w));
        }
    }
    d.action_labels[d.terminal.index] = {kStopLabel};
    d.cost[d.terminal.index] = {0.0};
    d.successor[d.terminal.index] = {std::vector<StateId>(n_disturbances, d.terminal)};
    return d;
}

ValueFunction noisy_surrogate(const ValueFunction& vstar, StateId terminal, double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0)) throw std::invalid_argument("noise amplitude must be nonnegative");
    CounterRng rng(derive_seed(seed, kNoiseStream));
    ValueFunction v = vstar;
    for (std::size_t x = 0; x < v.size(); ++x) {
        const double noise = rng.uniform(-amplitude, amplitude);
        if (x != terminal.index) v.values[x] += noise;
    }
    v[terminal] = 0.0;
    return v;
}

StationaryPolicy random_policy(const KernelSsp& model, std::uint64_t seed) {
    CounterRng rng(derive_seed(seed, kPolicyStream));
    StationaryPolicy pi;
    pi.choice.resize(model.n_states);
    for (std::size_t x = 0; x < model.n_states; ++x) pi.choice[x] = ActionId{rng.below(model.num_actions(StateId{x}))};
    return pi;
}

}  // namespace ssp
