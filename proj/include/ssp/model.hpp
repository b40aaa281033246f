#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssp {

/// Index of a state. One index per model is reserved for the terminal state.
struct StateId {
    std::size_t index = 0;
    constexpr auto operator<=>(const StateId&) const = default;
};

/// Index into the ordered admissible-action list U(x) of one state.
struct ActionId {
    std::size_t index = 0;
    constexpr auto operator<=>(const ActionId&) const = default;
};

/// The single admissible action at the terminal state.
inline constexpr ActionId kStopAction{0};
inline constexpr const char* kStopLabel = "stop";

/// Row tolerance applied to probability rows and disturbance distributions.
inline constexpr double kProbabilityTolerance = 1e-9;

class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Successor {
    StateId to;
    double prob = 0.0;
};

/// One (state, action) pair of a kernel-form model: p(.|x,u) and f(x,u).
struct Transition {
    std::vector<Successor> row;  // sorted by successor index
    double cost = 0.0;
};

/// Finite SSP in transition-kernel form.
///
/// `choices[x][u]` holds the transition row and stage cost of action u at
/// state x. The terminal state carries exactly one action, a zero-cost
/// self-loop labelled "stop".
struct KernelSsp {
    std::size_t n_states = 0;
    StateId terminal;
    std::vector<std::vector<std::string>> action_labels;
    std::vector<std::vector<Transition>> choices;

    std::size_t num_actions(StateId x) const { return choices[x.index].size(); }
    const Transition& at(StateId x, ActionId u) const { return choices[x.index][u.index]; }
    bool is_terminal(StateId x) const { return x == terminal; }
};

/// Finite SSP in generative form x' = F(x, u, w), w ~ q, with a nominal w.
struct DisturbanceSsp {
    std::size_t n_states = 0;
    StateId terminal;
    std::vector<std::vector<std::string>> action_labels;
    std::vector<std::vector<double>> cost;                      // [x][u]
    std::vector<std::string> disturbance_labels;
    std::vector<double> disturbance_probs;
    std::size_t nominal = 0;
    std::vector<std::vector<std::vector<StateId>>> successor;  // [x][u][w]

    std::size_t num_actions(StateId x) const { return cost[x.index].size(); }
    std::size_t num_disturbances() const { return disturbance_probs.size(); }
    StateId next(StateId x, ActionId u, std::size_t w) const {
        return successor[x.index][u.index][w];
    }
    bool is_terminal(StateId x) const { return x == terminal; }
};

/// Bounded value function over all states, zero at the terminal state.
struct ValueFunction {
    std::vector<double> values;

    ValueFunction() = default;
    explicit ValueFunction(std::vector<double> v) : values(std::move(v)) {}
    ValueFunction(std::size_t n, double fill) : values(n, fill) {}

    double operator[](StateId x) const { return values[x.index]; }
    double& operator[](StateId x) { return values[x.index]; }
    std::size_t size() const { return values.size(); }
};

/// Deterministic stationary policy; the terminal state maps to kStopAction.
struct StationaryPolicy {
    std::vector<ActionId> choice;

    ActionId operator()(StateId x) const { return choice[x.index]; }
    std::size_t size() const { return choice.size(); }
    bool operator==(const StationaryPolicy&) const = default;
};

struct Violation {
    std::string what;
    std::int64_t state = -1;
    std::int64_t action = -1;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate(const KernelSsp& model);
ValidationReport validate(const DisturbanceSsp& model);

/// Throws InvalidModel carrying the first violation if the report is not empty.
void require_valid(const KernelSsp& model);
void require_valid(const DisturbanceSsp& model);

/// Checks V has one finite entry per state and V(t) = 0; throws std::invalid_argument.
void require_value_function(const ValueFunction& v, std::size_t n_states, StateId terminal);

/// Checks every nonterminal choice indexes into U(x); throws std::invalid_argument.
void require_policy(const StationaryPolicy& pi, const KernelSsp& model);

/// Pushforward of the disturbance distribution through F.
KernelSsp induce_kernel(const DisturbanceSsp& d);

/// Same dynamics with f(x,u) = 1 off the terminal state.
KernelSsp unit_cost(const KernelSsp& model);
DisturbanceSsp unit_cost(const DisturbanceSsp& model);

/// Sorts rows by successor, merges duplicate successors and rescales rows whose
/// sum is within kProbabilityTolerance of 1. Rows outside tolerance are left
/// untouched so that validate() still reports them.
void canonicalize_rows(KernelSsp& model);

/// Inserts the stop action at the terminal state when it has no actions.
void ensure_stop_action(KernelSsp& model);

}  // namespace ssp
