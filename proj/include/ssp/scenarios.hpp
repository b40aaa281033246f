#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssp/model.hpp"

namespace ssp {

struct SharpnessSpec {
    std::size_t M = 1;
    double eps = 0.1;
};

struct SharpnessInstance {
    KernelSsp model;
    ValueFunction surrogate;  // V(i) = -eps, V(t) = 0
    double expected_gap = 0.0;  // M eps / 2
    double expected_tau = 0.0;  // M + 1
    ValueFunction expected_vstar;
};

/// Deterministic chain 0..M, t. At i < M: "stop" -> t at cost 0, "continue" ->
/// i+1 at cost eps/2. At M: "stop" only. Terminal index is M+1.
SharpnessInstance sharpness_chain(const SharpnessSpec& spec);

struct Cell {
    int x = 0;
    int y = 0;
    bool operator==(const Cell&) const = default;
};

struct Move {
    std::string label;
    int dx = 0;
    int dy = 0;
    double prob = 1.0;  // used for obstacle motion only
};

struct GridworldSpec {
    int width = 5;
    int height = 5;
    Cell robot_start{0, 0};
    Cell target{4, 4};
    int arrival_radius = 0;  // Manhattan distance, checked after the robot move
    Cell obstacle_start{2, 2};
    std::vector<Move> obstacle_moves{{"stay", 0, 0, 1.0}};
    double collision_penalty = 0.0;
    std::string nominal_move = "stay";
    bool eight_connected = false;
};

/// The five-move obstacle (stay/up/down/left/right) with the given stay probability
/// and the rest split evenly.
std::vector<Move> five_move_obstacle(double stay_prob = 0.2);
std::vector<Move> robot_moves(bool eight_connected);

struct Gridworld {
    GridworldSpec spec;
    DisturbanceSsp model;
    std::size_t cells() const { return static_cast<std::size_t>(spec.width * spec.height); }
    StateId state(Cell robot, Cell obstacle) const;
    Cell robot_of(StateId x) const;
    Cell obstacle_of(StateId x) const;
    StateId start() const { return state(spec.robot_start, spec.obstacle_start); }
};

/// Joint (robot, obstacle) navigation model; the terminal index is cells^2.
Gridworld gridworld_nav(const GridworldSpec& spec);

void validate_gridworld_spec(const GridworldSpec& spec);

/// Optimal value of the same spec with the obstacle frozen in place ("stay"
/// with probability 1), defined on the same joint state space.
ValueFunction frozen_obstacle_surrogate(const GridworldSpec& spec);

/// Random kernel-form SSP. Terminal index is n_states - 1. Every nonterminal
/// state has one randomly chosen action with direct terminal mass >= 0.05.
KernelSsp random_proper_ssp(std::size_t n_states, std::size_t n_actions, double density,
                            std::pair<double, double> cost_range, std::uint64_t seed);

/// Random disturbance-form SSP with the same properness guarantee: one action
/// per state sends some positive-probability disturbance to t.
DisturbanceSsp random_disturbance_ssp(std::size_t n_states, std::size_t n_actions, std::size_t n_disturbances,
                                      std::pair<double, double> cost_range, std::uint64_t seed);

/// V* plus independent uniform noise in [-amplitude, amplitude] on nonterminal states.
ValueFunction noisy_surrogate(const ValueFunction& vstar, StateId terminal, double amplitude, std::uint64_t seed);

/// Uniformly random stationary policy.
StationaryPolicy random_policy(const KernelSsp& model, std::uint64_t seed);

}  // namespace ssp
