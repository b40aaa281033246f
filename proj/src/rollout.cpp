#include "ssp/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ssp {

namespace {

void greedy_state(const KernelSsp& model, const ValueFunction& v, std::size_t x, GreedyResult& out) {
    const StateId sx{x};
    auto& diag = out.diagnostics;
    if (model.is_terminal(sx)) {
        diag.action[x] = kStopAction;
        diag.score[x] = 0.0;
        diag.runner_up_gap[x] = std::numeric_limits<double>::infinity();
        out.policy.choice[x] = kStopAction;
        return;
    }
    double best = q_value(model, v, sx, ActionId{0});
    double second = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t u = 1; u < model.num_actions(sx); ++u) {
        const double q = q_value(model, v, sx, ActionId{u});
        if (q < best) {
            second = best;
            best = q;
            arg = u;
        } else if (q < second) {
            second = q;
        }
    }
    diag.action[x] = ActionId{arg};
    diag.score[x] = best;
    diag.runner_up_gap[x] = second - best;
    out.policy.choice[x] = ActionId{arg};
}

GreedyResult make_greedy(std::size_t n) {
    GreedyResult r;
    r.policy.choice.assign(n, kStopAction);
    r.diagnostics.action.assign(n, kStopAction);
    r.diagnostics.score.assign(n, 0.0);
    r.diagnostics.runner_up_gap.assign(n, 0.0);
    return r;
}

void mismatch_state(const DisturbanceSsp& d, const ValueFunction& v, std::size_t x, MismatchResult& out) {
    const StateId sx{x};
    auto& row = out.table[x];
    row.assign(d.num_actions(sx), 0.0);
    if (d.is_terminal(sx)) return;
    for (std::size_t u = 0; u < row.size(); ++u) {
        double expected = 0.0;
        for (std::size_t w = 0; w < d.num_disturbances(); ++w)
            expected += d.disturbance_probs[w] * v[d.next(sx, ActionId{u}, w)];
        row[u] = std::abs(expected - v[d.next(sx, ActionId{u}, d.nominal)]);
    }
}

double reduce_mismatch(const DisturbanceSsp& d, const MismatchResult& m,
                       const std::optional<std::vector<bool>>& restrict_to) {
    double delta = 0.0;
    for (std::size_t x = 0; x < d.n_states; ++x) {
        if (restrict_to && !(*restrict_to)[x]) continue;
        for (double e : m.table[x]) delta = std::max(delta, e);
    }
    return delta;
}

void check_inputs(const KernelSsp& model, const ValueFunction& v) {
    require_value_function(v, model.n_states, model.terminal);
}

}  // namespace

GreedyResult greedy_policy(const KernelSsp& model, const ValueFunction& v) {
    check_inputs(model, v);
    GreedyResult out = make_greedy(model.n_states);
    const auto n = static_cast<std::ptrdiff_t>(model.n_states);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < n; ++x) greedy_state(model, v, static_cast<std::size_t>(x), out);
    return out;
}

StationaryPolicy ce_policy(const DisturbanceSsp& d, const ValueFunction& v) {
    require_valid(d);
    require_value_function(v, d.n_states, d.terminal);
    StationaryPolicy pi;
    pi.choice.assign(d.n_states, kStopAction);
    for (std::size_t x = 0; x < d.n_states; ++x) {
        const StateId sx{x};
        if (d.is_terminal(sx)) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t u = 0; u < d.num_actions(sx); ++u) {
            const double q = d.cost[x][u] + v[d.next(sx, ActionId{u}, d.nominal)];
            if (q < best) {
                best = q;
                pi.choice[x] = ActionId{u};
            }
        }
    }
    return pi;
}

MismatchResult mismatch_delta(const DisturbanceSsp& d, const ValueFunction& v,
                              const std::optional<std::vector<bool>>& restrict_to) {
    require_valid(d);
    require_value_function(v, d.n_states, d.terminal);
    MismatchResult out;
    out.table.resize(d.n_states);
    const auto n = static_cast<std::ptrdiff_t>(d.n_states);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < n; ++x) mismatch_state(d, v, static_cast<std::size_t>(x), out);
    out.delta = reduce_mismatch(d, out, restrict_to);
    return out;
}

EtaResult eta_inexactness(const KernelSsp& model, const ValueFunction& v, const StationaryPolicy& pi) {
    check_inputs(model, v);
    require_policy(pi, model);
    const GreedyResult g = greedy_policy(model, v);
    EtaResult out;
    out.per_state.assign(model.n_states, 0.0);
    for (std::size_t x = 0; x < model.n_states; ++x) {
        const StateId sx{x};
        if (model.is_terminal(sx)) continue;
        out.per_state[x] = q_value(model, v, sx, pi(sx)) - g.diagnostics.score[x];
        out.eta = std::max(out.eta, out.per_state[x]);
    }
    return out;
}

namespace serial {

GreedyResult greedy_policy(const KernelSsp& model, const ValueFunction& v) {
    check_inputs(model, v);
    GreedyResult out = make_greedy(model.n_states);
    for (std::size_t x = 0; x < model.n_states; ++x) greedy_state(model, v, x, out);
    return out;
}

MismatchResult mismatch_delta(const DisturbanceSsp& d, const ValueFunction& v,
                              const std::optional<std::vector<bool>>& restrict_to) {
    require_valid(d);
    require_value_function(v, d.n_states, d.terminal);
    MismatchResult out;
    out.table.resize(d.n_states);
    for (std::size_t x = 0; x < d.n_states; ++x) mismatch_state(d, v, x, out);
    out.delta = reduce_mismatch(d, out, restrict_to);
    return out;
}

}  // namespace serial

}  // namespace ssp
