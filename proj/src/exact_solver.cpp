#include "ssp/exact_solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace ssp {

namespace {

void backup_state(const KernelSsp& model, const ValueFunction& v, std::size_t x, BellmanResult& out) {
    const StateId sx{x};
    if (model.is_terminal(sx)) {
        out.value.values[x] = 0.0;
        out.greedy.choice[x] = kStopAction;
        return;
    }
    double best = q_value(model, v, sx, ActionId{0});
    std::size_t arg = 0;
    for (std::size_t u = 1; u < model.num_actions(sx); ++u) {
        const double q = q_value(model, v, sx, ActionId{u});
        if (q < best) {
            best = q;
            arg = u;
        }
    }
    out.value.values[x] = best;
    out.greedy.choice[x] = ActionId{arg};
}

BellmanResult make_result(std::size_t n) {
    BellmanResult r;
    r.value.values.assign(n, 0.0);
    r.greedy.choice.assign(n, kStopAction);
    return r;
}

struct ClosedLoop {
    std::vector<std::size_t> states;  // nonterminal states in the system, ascending
    std::vector<std::ptrdiff_t> slot;  // state -> row index, -1 if absent
    Eigen::MatrixXd a;                 // I - Q_pi on `states`
};

ClosedLoop build_closed_loop(const KernelSsp& model, const StationaryPolicy& pi, const std::vector<bool>& include) {
    ClosedLoop cl;
    cl.slot.assign(model.n_states, -1);
    for (std::size_t x = 0; x < model.n_states; ++x) {
        if (include[x] && x != model.terminal.index) {
            cl.slot[x] = static_cast<std::ptrdiff_t>(cl.states.size());
            cl.states.push_back(x);
        }
    }
    const auto n = static_cast<Eigen::Index>(cl.states.size());
    cl.a = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const StateId x{cl.states[static_cast<std::size_t>(i)]};
        for (const Successor& s : model.at(x, pi(x)).row) {
            const auto j = cl.slot[s.to.index];
            if (j >= 0) cl.a(i, j) -= s.prob;
        }
    }
    return cl;
}

Eigen::PartialPivLU<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& a) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    if (a.rows() > 0) {
        const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        if (!(pivots.minCoeff() > 1e-14 * scale))
            throw SingularSystem("closed-loop system I - Q is numerically singular");
    }
    return lu;
}

void require_finite(const Eigen::VectorXd& x) {
    if (!x.allFinite()) throw SingularSystem("closed-loop solve produced non-finite values");
}

// Solves (I - Q_pi) J = f_pi over the given states and scatters into a full array.
ValueFunction solve_costs(const KernelSsp& model, const StationaryPolicy& pi, const std::vector<bool>& include,
                          bool unit) {
    const ClosedLoop cl = build_closed_loop(model, pi, include);
    ValueFunction out(model.n_states, 0.0);
    if (cl.states.empty()) return out;
    Eigen::VectorXd f(static_cast<Eigen::Index>(cl.states.size()));
    for (std::size_t i = 0; i < cl.states.size(); ++i) {
        const StateId x{cl.states[i]};
        f(static_cast<Eigen::Index>(i)) = unit ? 1.0 : model.at(x, pi(x)).cost;
    }
    const Eigen::VectorXd j = factorize(cl.a).solve(f);
    require_finite(j);
    for (std::size_t i = 0; i < cl.states.size(); ++i) out.values[cl.states[i]] = j(static_cast<Eigen::Index>(i));
    return out;
}

void require_proper(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    if (!properness_check(model, pi, from)) throw ImproperPolicy(from);
}

}  // namespace

BellmanResult bellman_apply(const KernelSsp& model, const ValueFunction& v) {
    BellmanResult out = make_result(model.n_states);
    const auto n = static_cast<std::ptrdiff_t>(model.n_states);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t x = 0; x < n; ++x) backup_state(model, v, static_cast<std::size_t>(x), out);
    return out;
}

namespace serial {

BellmanResult bellman_apply(const KernelSsp& model, const ValueFunction& v) {
    BellmanResult out = make_result(model.n_states);
    for (std::size_t x = 0; x < model.n_states; ++x) backup_state(model, v, x, out);
    return out;
}

}  // namespace serial

double sup_norm_diff(const ValueFunction& a, const ValueFunction& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

std::vector<bool> can_reach_terminal(const KernelSsp& model) {
    // Backward search from t over the union of all positive-probability edges.
    std::vector<std::vector<std::size_t>> preds(model.n_states);
    for (std::size_t x = 0; x < model.n_states; ++x)
        for (const auto& tr : model.choices[x])
            for (const auto& s : tr.row)
                if (s.prob > 0.0) preds[s.to.index].push_back(x);
    std::vector<bool> reach(model.n_states, false);
    std::deque<std::size_t> queue{model.terminal.index};
    reach[model.terminal.index] = true;
    while (!queue.empty()) {
        const std::size_t y = queue.front();
        queue.pop_front();
        for (std::size_t x : preds[y]) {
            if (!reach[x]) {
                reach[x] = true;
                queue.push_back(x);
            }
        }
    }
    return reach;
}

std::vector<bool> reachable_under(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    std::vector<bool> seen(model.n_states, false);
    std::deque<std::size_t> queue{from.index};
    seen[from.index] = true;
    while (!queue.empty()) {
        const StateId x{queue.front()};
        queue.pop_front();
        for (const auto& s : model.at(x, pi(x)).row) {
            if (s.prob > 0.0 && !seen[s.to.index]) {
                seen[s.to.index] = true;
                queue.push_back(s.to.index);
            }
        }
    }
    return seen;
}

bool properness_check(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    require_policy(pi, model);
    const std::vector<bool> forward = reachable_under(model, pi, from);

    // Backward search from t restricted to closed-loop edges.
    std::vector<std::vector<std::size_t>> preds(model.n_states);
    for (std::size_t x = 0; x < model.n_states; ++x) {
        if (!forward[x]) continue;
        for (const auto& s : model.at(StateId{x}, pi.choice[x]).row)
            if (s.prob > 0.0) preds[s.to.index].push_back(x);
    }
    std::vector<bool> reach(model.n_states, false);
    std::deque<std::size_t> queue{model.terminal.index};
    reach[model.terminal.index] = true;
    while (!queue.empty()) {
        const std::size_t y = queue.front();
        queue.pop_front();
        for (std::size_t x : preds[y]) {
            if (!reach[x]) {
                reach[x] = true;
                queue.push_back(x);
            }
        }
    }
    for (std::size_t x = 0; x < model.n_states; ++x)
        if (forward[x] && !reach[x]) return false;
    return true;
}

SolveResult value_iteration(const KernelSsp& model, const SolverOptions& opts) {
    require_valid(model);
    if (!(opts.tol > 0.0)) throw std::invalid_argument("solver tolerance must be positive");
    const std::vector<bool> reach = can_reach_terminal(model);
    for (std::size_t x = 0; x < model.n_states; ++x)
        if (!reach[x]) throw NoProperPolicy(StateId{x});

    SolveResult res;
    res.value = ValueFunction(model.n_states, 0.0);
    res.residual = std::numeric_limits<double>::infinity();
    while (res.iterations < opts.max_iters) {
        BellmanResult next = bellman_apply(model, res.value);
        res.residual = sup_norm_diff(next.value, res.value);
        res.value = std::move(next.value);
        ++res.iterations;
        if (res.residual < opts.tol) break;
    }
    if (!(res.residual < opts.tol)) throw NotConverged(res.iterations, res.residual);

    BellmanResult step = bellman_apply(model, res.value);
    if (opts.polish) {
        const StationaryPolicy& g = step.greedy;
        bool proper = true;
        for (std::size_t x = 0; x < model.n_states && proper; ++x)
            proper = properness_check(model, g, StateId{x});
        if (proper) {
            try {
                ValueFunction exact = solve_costs(model, g, std::vector<bool>(model.n_states, true), false);
                BellmanResult check = bellman_apply(model, exact);
                const double r = sup_norm_diff(check.value, exact);
                if (r < opts.tol) {
                    res.value = std::move(exact);
                    res.residual = r;
                    step = std::move(check);
                }
            } catch (const SingularSystem&) {
                // keep the value-iteration iterate
            }
        }
    }
    res.greedy = std::move(step.greedy);
    return res;
}

PolicyValue policy_evaluation_exact(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    require_proper(model, pi, from);
    PolicyValue out;
    out.cost = solve_costs(model, pi, reachable_under(model, pi, from), false);
    out.at_start = out.cost[from];
    return out;
}

HittingTime hitting_time_exact(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    if (!properness_check(model, pi, from)) return {};
    const ValueFunction h = solve_costs(model, pi, reachable_under(model, pi, from), true);
    return {h[from]};
}

double OccupationMeasure::total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

OccupationMeasure occupation_measure(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    require_proper(model, pi, from);
    OccupationMeasure out;
    out.start = from;
    out.mass.assign(model.n_states, 0.0);
    const ClosedLoop cl = build_closed_loop(model, pi, reachable_under(model, pi, from));
    if (cl.states.empty()) return out;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cl.states.size()));
    e(cl.slot[from.index]) = 1.0;
    const Eigen::MatrixXd at = cl.a.transpose();
    const Eigen::VectorXd mu = factorize(at).solve(e);
    require_finite(mu);
    for (std::size_t i = 0; i < cl.states.size(); ++i)
        out.mass[cl.states[i]] = std::max(0.0, mu(static_cast<Eigen::Index>(i)));
    return out;
}

double advantage(const KernelSsp& model, const ValueFunction& vstar, StateId x, ActionId u) {
    return q_value(model, vstar, x, u) - vstar[x];
}

}  // namespace ssp
