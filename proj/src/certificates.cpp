#include "ssp/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "ssp/rollout.hpp"

namespace ssp {

namespace {

constexpr double kOneStepTolerance = 1e-9;

std::vector<bool> all_states(std::size_t n) { return std::vector<bool>(n, true); }

std::vector<bool> reachable_any_action(const KernelSsp& model, StateId from) {
    std::vector<bool> seen(model.n_states, false);
    std::deque<std::size_t> queue{from.index};
    seen[from.index] = true;
    while (!queue.empty()) {
        const std::size_t x = queue.front();
        queue.pop_front();
        for (const auto& tr : model.choices[x])
            for (const auto& s : tr.row)
                if (s.prob > 0.0 && !seen[s.to.index]) {
                    seen[s.to.index] = true;
                    queue.push_back(s.to.index);
                }
    }
    return seen;
}

// Inputs shared by the rollout and certainty-equivalent certificates once the
// policy and the mismatch have been fixed.
struct PolicyUnderTest {
    std::string kind;
    StationaryPolicy policy;
    double eta = 0.0;
    double delta = 0.0;
    std::vector<double> delta_by_state;  // max_u mismatch at each state; zeros for rollout
};

CertificateReport certify(const KernelSsp& k, const ValueFunction& v, StateId from, const SolveResult& sol,
                          const PolicyUnderTest& put, const CertificateOptions& opts) {
    CertificateReport r;
    r.kind = put.kind;
    r.from = from;
    r.policy = put.policy;
    r.vstar = sol.value;
    r.vstar_at_start = sol.value[from];
    r.solver_iterations = sol.iterations;
    r.solver_residual = sol.residual;
    r.solver_tol = opts.solver.tol;
    r.delta = put.delta;
    r.eta = put.eta;

    const std::vector<bool> closed_loop = reachable_under(k, put.policy, from);
    std::optional<std::vector<bool>> region;
    if (opts.local_epsilon) {
        region = lookahead_region(k, put.policy, from);
        r.epsilon_mode = "lookahead";
    }
    r.epsilon = epsilon_sup(v, sol.value, region);

    r.proper = properness_check(k, put.policy, from);
    if (!r.proper) return r;

    const PolicyValue pv = policy_evaluation_exact(k, put.policy, from);
    r.cost_at_start = pv.at_start;
    r.raw_gap = pv.at_start - r.vstar_at_start;
    double gap = r.raw_gap;
    if (gap < 0.0 && gap >= -kGapClampTolerance) {
        gap = 0.0;
        r.gap_clamped = true;
    }
    r.gap = gap;

    const double tau = *hitting_time_exact(k, put.policy, from).steps;
    r.expected_tau = tau;
    const OccupationMeasure occ = occupation_measure(k, put.policy, from);
    r.occupation = occ.mass;

    double occupation_advantage = 0.0;
    for (std::size_t y = 0; y < k.n_states; ++y)
        if (occ.mass[y] != 0.0) occupation_advantage += occ.mass[y] * advantage(k, sol.value, StateId{y}, put.policy.choice[y]);
    r.identity_residual = std::abs(r.raw_gap - occupation_advantage);

    const double amp = 2.0 * (r.epsilon + r.delta) + r.eta;
    r.bound_hitting = amp * tau;

    r.checks.push_back(make_check("gap_nonnegative", -r.raw_gap, 0.0, kGapClampTolerance));
    r.checks.push_back(make_check("bound_hitting", gap, *r.bound_hitting));
    r.checks.push_back(make_check("performance_difference_identity", *r.identity_residual, 0.0));
    r.checks.push_back(make_check("occupation_mass_equals_tau", std::abs(occ.total() - tau), 0.0, 1e-9));

    if (opts.uniform_hitting_bound) {
        const double n = *opts.uniform_hitting_bound;
        r.uniform_hitting_N = n;
        r.bound_uniform_N = amp * n;
        r.checks.push_back(make_check("hitting_time_le_N", tau, n, 1e-9));
        r.checks.push_back(make_check("bound_uniform_N", gap, *r.bound_uniform_N));
    }

    if (opts.lyapunov) {
        const LyapunovSpec& ly = *opts.lyapunov;
        r.lyapunov_c = ly.c;
        try {
            const LyapunovResult lr = lyapunov_check(k, put.policy, ly.values, ly.c, from, ly.uniform);
            r.bound_lyapunov = amp * lr.tau_bound;
            r.checks.push_back(make_check("lyapunov_drift", 0.0, 0.0));
            r.checks.push_back(make_check("hitting_time_le_L_over_c", tau, lr.tau_bound, 1e-9));
            r.checks.push_back(make_check("bound_lyapunov", gap, *r.bound_lyapunov));
            r.checks.push_back(make_check("lyapunov_not_tighter", *r.bound_hitting, *r.bound_lyapunov));
        } catch (const DriftViolated& e) {
            Check c = make_check("lyapunov_drift", e.expected_next, e.required, 0.0);
            c.passed = false;
            c.note = e.what();
            r.checks.push_back(std::move(c));
        }
    }

    // One-step inequalities: residual bound on TV and the per-step rollout (or CE)
    // inequality. With a localized epsilon they only hold on the closed loop.
    const std::vector<bool> one_step_states = opts.local_epsilon ? closed_loop : all_states(k.n_states);
    const BellmanResult tv = bellman_apply(k, v);
    double max_residual = 0.0;
    double max_step = -std::numeric_limits<double>::infinity();
    bool local_holds = true;
    double local_bound = 0.0;
    for (std::size_t x = 0; x < k.n_states; ++x) {
        if (!one_step_states[x]) continue;
        const StateId sx{x};
        max_residual = std::max(max_residual, std::abs(tv.value[sx] - sol.value[sx]));
        if (k.is_terminal(sx)) continue;
        const double step = q_value(k, sol.value, sx, put.policy(sx)) - sol.value[sx];
        max_step = std::max(max_step, step);
        if (closed_loop[x]) {
            const double local_e = 2.0 * std::abs(v[sx] - sol.value[sx]) + 2.0 * put.delta_by_state[x] + r.eta;
            if (step > local_e + kOneStepTolerance) local_holds = false;
            local_bound += occ.mass[x] * local_e;
        }
    }
    if (max_step < 0.0) max_step = 0.0;
    r.checks.push_back(make_check("one_step_residual", max_residual, r.epsilon, kOneStepTolerance));
    r.checks.push_back(make_check(put.kind == "ce" ? "one_step_ce" : "one_step_rollout", max_step, amp,
                                  kOneStepTolerance));

    r.bound_local = local_bound;
    r.checks.push_back(make_check("local_le_uniform", local_bound, *r.bound_hitting, 1e-10));
    if (local_holds) {
        r.checks.push_back(make_check("bound_local", gap, local_bound));
    } else {
        Check c = make_check("bound_local", gap, local_bound);
        c.passed = true;
        c.note = "not applicable: local one-step inequality fails on the closed loop";
        r.checks.push_back(std::move(c));
    }
    return r;
}

}  // namespace

Check make_check(std::string name, double lhs, double rhs, double tol) {
    Check c;
    c.name = std::move(name);
    c.lhs = lhs;
    c.rhs = rhs;
    c.slack = rhs - lhs;
    c.passed = lhs <= rhs + tol;
    return c;
}

bool CertificateReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* CertificateReport::find_check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

DriftViolated::DriftViolated(StateId x, std::optional<ActionId> u, double lhs, double rhs)
    : std::runtime_error("Lyapunov drift violated at state " + std::to_string(x.index) +
                         (u ? ", action " + std::to_string(u->index) : std::string{}) + ": E[L(next)] = " +
                         std::to_string(lhs) + " > L(x) - c = " + std::to_string(rhs)),
      state(x), action(u), expected_next(lhs), required(rhs) {}

double epsilon_sup(const ValueFunction& v, const ValueFunction& vstar,
                   const std::optional<std::vector<bool>>& restrict_to) {
    if (v.size() != vstar.size()) throw std::invalid_argument("value functions differ in size");
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (restrict_to && !(*restrict_to)[i]) continue;
        m = std::max(m, std::abs(v.values[i] - vstar.values[i]));
    }
    return m;
}

std::vector<bool> lookahead_region(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    const std::vector<bool> loop = reachable_under(model, pi, from);
    std::vector<bool> region = loop;
    for (std::size_t x = 0; x < model.n_states; ++x) {
        if (!loop[x]) continue;
        for (const auto& tr : model.choices[x])
            for (const auto& s : tr.row) region[s.to.index] = true;
    }
    return region;
}

CertificateReport rollout_certificate(const KernelSsp& model, const ValueFunction& v, StateId from,
                                      const CertificateOptions& opts) {
    require_valid(model);
    require_value_function(v, model.n_states, model.terminal);
    if (from.index >= model.n_states) throw std::invalid_argument("start state out of range");
    const SolveResult sol = value_iteration(model, opts.solver);

    PolicyUnderTest put;
    put.kind = "rollout";
    put.delta_by_state.assign(model.n_states, 0.0);
    if (opts.policy) {
        require_policy(*opts.policy, model);
        put.policy = *opts.policy;
        put.eta = eta_inexactness(model, v, put.policy).eta;
    } else {
        put.policy = greedy_policy(model, v).policy;
    }
    CertificateReport r = certify(model, v, from, sol, put, opts);
    if (!r.proper) throw ImproperRollout(from, std::move(r));
    return r;
}

CertificateReport ce_certificate(const DisturbanceSsp& d, const ValueFunction& v, StateId from,
                                 const CertificateOptions& opts) {
    require_valid(d);
    require_value_function(v, d.n_states, d.terminal);
    if (from.index >= d.n_states) throw std::invalid_argument("start state out of range");
    if (opts.policy) throw std::invalid_argument("policy override applies to kernel-form certificates only");
    const KernelSsp k = induce_kernel(d);
    const SolveResult sol = value_iteration(k, opts.solver);

    PolicyUnderTest put;
    put.kind = "ce";
    put.policy = ce_policy(d, v);
    std::optional<std::vector<bool>> restrict_to;
    if (opts.local_epsilon) restrict_to = reachable_under(k, put.policy, from);
    const MismatchResult mm = mismatch_delta(d, v, restrict_to);
    put.delta = mm.delta;
    put.delta_by_state.assign(d.n_states, 0.0);
    for (std::size_t x = 0; x < d.n_states; ++x)
        for (double e : mm.table[x]) put.delta_by_state[x] = std::max(put.delta_by_state[x], e);

    CertificateReport r = certify(k, v, from, sol, put, opts);
    if (!r.proper) throw ImproperCE(from, std::move(r));

    // The CE choice is 2 delta-greedy for the true one-step lookahead.
    const EtaResult eta = eta_inexactness(k, v, put.policy);
    double eta_ce = 0.0;
    for (std::size_t x = 0; x < d.n_states; ++x)
        if (!restrict_to || (*restrict_to)[x]) eta_ce = std::max(eta_ce, eta.per_state[x]);
    r.checks.push_back(make_check("ce_eta_within_2delta", eta_ce, 2.0 * r.delta, 1e-12));
    return r;
}

PerformanceDifference performance_difference(const KernelSsp& model, const StationaryPolicy& pi, StateId from,
                                             const ValueFunction& vstar) {
    const PolicyValue pv = policy_evaluation_exact(model, pi, from);
    const OccupationMeasure occ = occupation_measure(model, pi, from);
    PerformanceDifference out;
    out.lhs = pv.at_start - vstar[from];
    for (std::size_t y = 0; y < model.n_states; ++y)
        if (occ.mass[y] != 0.0) out.rhs += occ.mass[y] * advantage(model, vstar, StateId{y}, pi.choice[y]);
    out.residual = std::abs(out.lhs - out.rhs);
    return out;
}

PerformanceDifference performance_difference(const KernelSsp& model, const StationaryPolicy& pi, StateId from) {
    return performance_difference(model, pi, from, value_iteration(model).value);
}

OneStepReport one_step_checks(const KernelSsp& model, const ValueFunction& v, const ValueFunction& vstar) {
    require_value_function(v, model.n_states, model.terminal);
    require_value_function(vstar, model.n_states, model.terminal);
    OneStepReport out;
    out.epsilon = epsilon_sup(v, vstar);
    const BellmanResult tv = bellman_apply(model, v);
    out.residual.assign(model.n_states, 0.0);
    out.rollout_lhs.assign(model.n_states, 0.0);
    for (std::size_t x = 0; x < model.n_states; ++x) {
        const StateId sx{x};
        out.residual[x] = std::abs(tv.value[sx] - vstar[sx]);
        out.max_residual = std::max(out.max_residual, out.residual[x]);
        if (model.is_terminal(sx)) continue;
        out.rollout_lhs[x] = q_value(model, vstar, sx, tv.greedy(sx)) - vstar[sx];
        out.max_rollout_lhs = std::max(out.max_rollout_lhs, out.rollout_lhs[x]);
    }
    out.residual_ok = out.max_residual <= out.epsilon + kOneStepTolerance;
    out.rollout_ok = out.max_rollout_lhs <= 2.0 * out.epsilon + kOneStepTolerance;
    out.fatal = !(out.residual_ok && out.rollout_ok);
    return out;
}

LyapunovResult lyapunov_check(const KernelSsp& model, const StationaryPolicy& pi, const std::vector<double>& lyap,
                              double c, StateId from, bool uniform) {
    require_policy(pi, model);
    if (lyap.size() != model.n_states) throw std::invalid_argument("Lyapunov function size differs from state count");
    for (double e : lyap)
        if (!std::isfinite(e) || e < 0.0) throw std::invalid_argument("Lyapunov function must be finite and nonnegative");
    if (!(c > 0.0)) throw std::invalid_argument("drift constant c must be positive");

    const std::vector<bool> states = uniform ? reachable_any_action(model, from) : reachable_under(model, pi, from);
    auto expected_next = [&](StateId x, ActionId u) {
        double e = 0.0;
        for (const auto& s : model.at(x, u).row) e += s.prob * lyap[s.to.index];
        return e;
    };
    for (std::size_t x = 0; x < model.n_states; ++x) {
        const StateId sx{x};
        if (!states[x] || model.is_terminal(sx)) continue;
        const double required = lyap[x] - c;
        const double slack = 1e-12 * std::max(1.0, std::abs(lyap[x]));
        if (uniform) {
            for (std::size_t u = 0; u < model.num_actions(sx); ++u) {
                const double e = expected_next(sx, ActionId{u});
                if (e > required + slack) throw DriftViolated(sx, ActionId{u}, e, required);
            }
        } else {
            const double e = expected_next(sx, pi(sx));
            if (e > required + slack) throw DriftViolated(sx, std::nullopt, e, required);
        }
    }
    LyapunovResult out;
    out.holds = true;
    out.tau_bound = lyap[from.index] / c;
    out.expected_tau = hitting_time_exact(model, pi, from).steps;
    out.tau_within_bound = out.expected_tau && *out.expected_tau <= out.tau_bound + 1e-9;
    return out;
}

LocalErrorBound local_error_bound(const KernelSsp& model, const ValueFunction& v, StateId from,
                                  const ValueFunction& vstar) {
    require_value_function(v, model.n_states, model.terminal);
    const StationaryPolicy pi = greedy_policy(model, v).policy;
    if (!properness_check(model, pi, from)) {
        CertificateReport partial;
        partial.kind = "rollout";
        partial.from = from;
        partial.policy = pi;
        partial.epsilon = epsilon_sup(v, vstar);
        throw ImproperRollout(from, std::move(partial));
    }
    const OccupationMeasure occ = occupation_measure(model, pi, from);
    const std::vector<bool> loop = reachable_under(model, pi, from);
    LocalErrorBound out;
    out.local_inequality_holds = true;
    double tau = 0.0;
    for (std::size_t y = 0; y < model.n_states; ++y) {
        const StateId sy{y};
        const double err = std::abs(v[sy] - vstar[sy]);
        out.bound += 2.0 * occ.mass[y] * err;
        tau += occ.mass[y];
        if (loop[y] && !model.is_terminal(sy)) {
            const double step = q_value(model, vstar, sy, pi(sy)) - vstar[sy];
            if (step > 2.0 * err + kOneStepTolerance) out.local_inequality_holds = false;
        }
    }
    out.uniform_bound = 2.0 * epsilon_sup(v, vstar) * tau;
    out.gap = policy_evaluation_exact(model, pi, from).at_start - vstar[from];
    return out;
}

LocalErrorBound local_error_bound(const KernelSsp& model, const ValueFunction& v, StateId from) {
    return local_error_bound(model, v, from, value_iteration(model).value);
}

double multiplicative_hitting_bound(double h_star, double epsilon, double delta) {
    const double factor = 2.0 * (epsilon + delta);
    if (!(factor < 1.0)) throw FactorTooLarge(factor);
    return h_star / (1.0 - factor);
}

bool MinTimeReport::all_passed() const { return base.all_passed(); }

namespace {

MinTimeReport finish_min_time(CertificateReport base, const CertificateOptions& opts) {
    MinTimeReport m;
    m.h_star = base.vstar_at_start;
    const double tau = *base.expected_tau;
    // An eta-inexact minimization enters the multiplicative form like extra epsilon.
    const double extra = base.eta / 2.0;
    try {
        m.multiplicative = multiplicative_hitting_bound(m.h_star, base.epsilon + extra, base.delta);
        m.certified_excess = *m.multiplicative - m.h_star;
        base.checks.push_back(make_check("min_time_multiplicative", tau, *m.multiplicative, 1e-9));
    } catch (const FactorTooLarge& e) {
        m.factor_too_large = true;
        Check c = make_check("min_time_multiplicative", tau, std::numeric_limits<double>::infinity());
        c.note = e.what();
        base.checks.push_back(std::move(c));
    }
    const double amp = 2.0 * (base.epsilon + base.delta) + base.eta;
    if (opts.uniform_hitting_bound) {
        m.additive_N = m.h_star + amp * *opts.uniform_hitting_bound;
        base.checks.push_back(make_check("min_time_additive_N", tau, *m.additive_N, 1e-9));
    }
    if (base.bound_lyapunov) {
        m.additive_lyapunov = m.h_star + *base.bound_lyapunov;
        base.checks.push_back(make_check("min_time_additive_lyapunov", tau, *m.additive_lyapunov, 1e-9));
    }
    m.base = std::move(base);
    return m;
}

}  // namespace

MinTimeReport min_time_certificate(const KernelSsp& model, const ValueFunction& v, StateId from,
                                   const CertificateOptions& opts) {
    return finish_min_time(rollout_certificate(unit_cost(model), v, from, opts), opts);
}

MinTimeReport min_time_certificate(const DisturbanceSsp& d, const ValueFunction& v, StateId from,
                                   const CertificateOptions& opts) {
    return finish_min_time(ce_certificate(unit_cost(d), v, from, opts), opts);
}

}  // namespace ssp
