#include "ssp/montecarlo.hpp"

#include <cmath>
#include <ostream>

#include "ssp/random.hpp"

namespace ssp {

namespace {

struct Outcome {
    double cost = 0.0;
    std::size_t tau = 0;
    bool truncated = false;
};

StateId sample_row(const Transition& tr, CounterRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const Successor& s : tr.row) {
        acc += s.prob;
        if (u < acc) return s.to;
    }
    // Rounding left u above the accumulated mass; take the last positive entry.
    for (auto it = tr.row.rbegin(); it != tr.row.rend(); ++it)
        if (it->prob > 0.0) return it->to;
    return tr.row.back().to;
}

std::size_t sample_disturbance(const std::vector<double>& q, CounterRng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t w = 0; w < q.size(); ++w) {
        acc += q[w];
        if (u < acc) return w;
    }
    for (std::size_t w = q.size(); w-- > 0;)
        if (q[w] > 0.0) return w;
    return q.size() - 1;
}

// One closed-loop step; returns (cost, next).
struct Step {
    double cost;
    StateId next;
};

Step step(const KernelSsp& m, StateId x, ActionId u, CounterRng& rng) {
    const Transition& tr = m.at(x, u);
    return {tr.cost, sample_row(tr, rng)};
}

Step step(const DisturbanceSsp& m, StateId x, ActionId u, CounterRng& rng) {
    const std::size_t w = sample_disturbance(m.disturbance_probs, rng);
    return {m.cost[x.index][u.index], m.next(x, u, w)};
}

template <class Model>
void check_estimate_inputs(const Model& m, const StationaryPolicy& pi, StateId from) {
    require_valid(m);
    if (pi.size() != m.n_states) throw std::invalid_argument("policy size differs from state count");
    for (std::size_t x = 0; x < m.n_states; ++x)
        if (pi.choice[x].index >= m.num_actions(StateId{x}))
            throw std::invalid_argument("policy action out of range at state " + std::to_string(x));
    if (from.index >= m.n_states) throw std::invalid_argument("start state out of range");
}

template <class Model>
Trajectory run_trajectory(const Model& m, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                          std::size_t max_steps) {
    check_estimate_inputs(m, pi, from);
    CounterRng rng(seed);
    Trajectory t;
    StateId x = from;
    t.states.push_back(x);
    while (!m.is_terminal(x)) {
        if (t.tau >= max_steps) {
            t.truncated = true;
            break;
        }
        const ActionId u = pi(x);
        const Step s = step(m, x, u, rng);
        t.actions.push_back(u);
        t.costs.push_back(s.cost);
        t.states.push_back(s.next);
        ++t.tau;
        x = s.next;
    }
    return t;
}

// Allocation-free variant used by the estimators.
template <class Model>
Outcome run_outcome(const Model& m, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                    std::size_t max_steps) {
    CounterRng rng(seed);
    Outcome o;
    StateId x = from;
    while (!m.is_terminal(x)) {
        if (o.tau >= max_steps) {
            o.truncated = true;
            break;
        }
        const Step s = step(m, x, pi(x), rng);
        o.cost += s.cost;
        ++o.tau;
        x = s.next;
    }
    return o;
}

EstimateReport reduce(const std::vector<Outcome>& outcomes, std::uint64_t seed) {
    EstimateReport r;
    r.replications = outcomes.size();
    r.seed = seed;
    const auto n = static_cast<double>(outcomes.size());
    if (outcomes.empty()) return r;
    double sum_c = 0.0;
    double sum_t = 0.0;
    for (const Outcome& o : outcomes) {
        sum_c += o.cost;
        sum_t += static_cast<double>(o.tau);
        if (o.truncated) ++r.truncations;
    }
    r.mean_cost = sum_c / n;
    r.mean_tau = sum_t / n;
    if (outcomes.size() > 1) {
        double ss_c = 0.0;
        double ss_t = 0.0;
        for (const Outcome& o : outcomes) {
            const double dc = o.cost - r.mean_cost;
            const double dt = static_cast<double>(o.tau) - r.mean_tau;
            ss_c += dc * dc;
            ss_t += dt * dt;
        }
        r.sd_cost = std::sqrt(ss_c / (n - 1.0));
        r.sd_tau = std::sqrt(ss_t / (n - 1.0));
    }
    r.half_width_cost = kZ99 * r.sd_cost / std::sqrt(n);
    r.half_width_tau = kZ99 * r.sd_tau / std::sqrt(n);
    r.valid = r.truncations == 0;
    return r;
}

template <class Model>
EstimateReport estimate_parallel(const Model& m, const StationaryPolicy& pi, StateId from, std::size_t reps,
                                 std::uint64_t seed, std::size_t max_steps) {
    check_estimate_inputs(m, pi, from);
    std::vector<Outcome> outcomes(reps);
    const auto n = static_cast<std::ptrdiff_t>(reps);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r)
        outcomes[static_cast<std::size_t>(r)] =
            run_outcome(m, pi, from, derive_seed(seed, static_cast<std::uint64_t>(r)), max_steps);
    return reduce(outcomes, seed);
}

template <class Model>
EstimateReport estimate_serial(const Model& m, const StationaryPolicy& pi, StateId from, std::size_t reps,
                               std::uint64_t seed, std::size_t max_steps) {
    check_estimate_inputs(m, pi, from);
    std::vector<Outcome> outcomes(reps);
    for (std::size_t r = 0; r < reps; ++r) outcomes[r] = run_outcome(m, pi, from, derive_seed(seed, r), max_steps);
    return reduce(outcomes, seed);
}

}  // namespace

double Trajectory::total_cost() const {
    double s = 0.0;
    for (double c : costs) s += c;
    return s;
}

Trajectory simulate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                    std::size_t max_steps) {
    return run_trajectory(model, pi, from, seed, max_steps);
}

Trajectory simulate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                    std::size_t max_steps) {
    return run_trajectory(model, pi, from, seed, max_steps);
}

void write_trajectory_table(std::ostream& os, const Trajectory& traj) {
    os << "step,state,action,cost,next\n";
    for (std::size_t k = 0; k < traj.tau; ++k)
        os << k << ',' << traj.states[k].index << ',' << traj.actions[k].index << ',' << traj.costs[k] << ','
           << traj.states[k + 1].index << '\n';
    if (traj.truncated) os << "# truncated after " << traj.tau << " steps\n";
}

EstimateReport estimate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::size_t replications,
                        std::uint64_t seed, std::size_t max_steps) {
    return estimate_parallel(model, pi, from, replications, seed, max_steps);
}

EstimateReport estimate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from,
                        std::size_t replications, std::uint64_t seed, std::size_t max_steps) {
    return estimate_parallel(model, pi, from, replications, seed, max_steps);
}

bool covers(double mean, double half_width, double exact, double slack) {
    return std::abs(mean - exact) <= half_width + slack;
}

namespace serial {

EstimateReport estimate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::size_t replications,
                        std::uint64_t seed, std::size_t max_steps) {
    return estimate_serial(model, pi, from, replications, seed, max_steps);
}

EstimateReport estimate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from,
                        std::size_t replications, std::uint64_t seed, std::size_t max_steps) {
    return estimate_serial(model, pi, from, replications, seed, max_steps);
}

}  // namespace serial

}  // namespace ssp
