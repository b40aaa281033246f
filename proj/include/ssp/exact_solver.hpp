#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ssp/model.hpp"

namespace ssp {

class NoProperPolicy : public std::runtime_error {
public:
    explicit NoProperPolicy(StateId x)
        : std::runtime_error("no action sequence reaches the terminal state from state " + std::to_string(x.index)),
          state(x) {}
    StateId state;
};

class NotConverged : public std::runtime_error {
public:
    NotConverged(std::size_t iters, double residual)
        : std::runtime_error("value iteration did not converge after " + std::to_string(iters) +
                             " iterations (residual " + std::to_string(residual) + ")"),
          iterations(iters), residual(residual) {}
    std::size_t iterations;
    double residual;
};

class ImproperPolicy : public std::runtime_error {
public:
    explicit ImproperPolicy(StateId from)
        : std::runtime_error("policy is not proper from state " + std::to_string(from.index)), from(from) {}
    StateId from;
};

class SingularSystem : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One-step score Q_V(x,u) = f(x,u) + sum_y p(y|x,u) V(y).
///
/// Every argmin in the library goes through this function, so greedy
/// selections and Bellman backups see bit-identical scores.
inline double q_value(const KernelSsp& model, const ValueFunction& v, StateId x, ActionId u) {
    const Transition& tr = model.at(x, u);
    double expected = 0.0;
    for (const Successor& s : tr.row) expected += s.prob * v[s.to];
    return tr.cost + expected;
}

struct BellmanResult {
    ValueFunction value;
    StationaryPolicy greedy;
};

/// (TV)(x) = min_u Q_V(x,u) off the terminal state, (TV)(t) = 0. Ties go to
/// the lowest action index. Parallel over states.
BellmanResult bellman_apply(const KernelSsp& model, const ValueFunction& v);

struct SolverOptions {
    double tol = 1e-10;
    std::size_t max_iters = 1'000'000;
    /// After convergence, replace the iterate by the exact cost of its greedy
    /// policy when that policy is proper and is itself a fixed point to `tol`.
    bool polish = true;
};

struct SolveResult {
    ValueFunction value;
    StationaryPolicy greedy;
    std::size_t iterations = 0;
    double residual = 0.0;
};

/// Value iteration from V = 0 with a structural reachability precheck.
SolveResult value_iteration(const KernelSsp& model, const SolverOptions& opts = {});

/// States that can reach the terminal state when any action may be used.
std::vector<bool> can_reach_terminal(const KernelSsp& model);

/// Closed-loop states reachable from `from` (including `from`).
std::vector<bool> reachable_under(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

/// True iff every closed-loop state reachable from `from` can reach t.
bool properness_check(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

struct PolicyValue {
    double at_start = 0.0;
    ValueFunction cost;  // J^pi; zero on states not reachable from the start
};

/// Exact J^pi by a dense LU solve of (I - Q_pi) J = f_pi on reachable states.
PolicyValue policy_evaluation_exact(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

/// E[tau] from `from`. An improper closed loop yields an empty `steps`.
struct HittingTime {
    std::optional<double> steps;
    bool proper() const { return steps.has_value(); }
};

HittingTime hitting_time_exact(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

struct OccupationMeasure {
    StateId start;
    std::vector<double> mass;  // indexed by state; zero at t and unreachable states
    double total() const;
};

/// mu^T (I - Q_pi) = e_from^T; mu(y) is the expected number of visits to y before absorption.
OccupationMeasure occupation_measure(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

/// A*(x,u) = f(x,u) + E[V*(next)] - V*(x).
double advantage(const KernelSsp& model, const ValueFunction& vstar, StateId x, ActionId u);

double sup_norm_diff(const ValueFunction& a, const ValueFunction& b);

namespace serial {

/// Sequential reference for bellman_apply; kept for equivalence tests and benchmarks.
BellmanResult bellman_apply(const KernelSsp& model, const ValueFunction& v);

}  // namespace serial

}  // namespace ssp
