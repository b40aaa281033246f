#pragma once

#include <optional>
#include <vector>

#include "ssp/exact_solver.hpp"
#include "ssp/model.hpp"

namespace ssp {

/// Per-state record of the one-step greedy minimization.
struct GreedyDiagnostics {
    std::vector<ActionId> action;
    std::vector<double> score;          // Q_V(x, action(x)); equals (TV)(x)
    std::vector<double> runner_up_gap;  // second-best minus best; +inf with a single action
};

struct GreedyResult {
    StationaryPolicy policy;
    GreedyDiagnostics diagnostics;
};

/// One-step lookahead (rollout) policy with respect to V. Parallel over states.
GreedyResult greedy_policy(const KernelSsp& model, const ValueFunction& v);

/// Certainty-equivalent policy: argmin_u f(x,u) + V(F(x,u,w_nominal)).
StationaryPolicy ce_policy(const DisturbanceSsp& d, const ValueFunction& v);

struct MismatchResult {
    double delta = 0.0;
    std::vector<std::vector<double>> table;  // |E V(F(x,u,w)) - V(F(x,u,w_nominal))| per (x,u)
};

/// Model mismatch delta. With `restrict_to` set, the sup runs only over the
/// flagged states; otherwise over all nonterminal states.
MismatchResult mismatch_delta(const DisturbanceSsp& d, const ValueFunction& v,
                              const std::optional<std::vector<bool>>& restrict_to = std::nullopt);

struct EtaResult {
    double eta = 0.0;
    std::vector<double> per_state;
};

/// How far `pi` is from an exact one-step minimizer of Q_V at each state.
EtaResult eta_inexactness(const KernelSsp& model, const ValueFunction& v, const StationaryPolicy& pi);

namespace serial {

GreedyResult greedy_policy(const KernelSsp& model, const ValueFunction& v);
MismatchResult mismatch_delta(const DisturbanceSsp& d, const ValueFunction& v,
                              const std::optional<std::vector<bool>>& restrict_to = std::nullopt);

}  // namespace serial

}  // namespace ssp
