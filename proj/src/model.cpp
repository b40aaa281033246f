#include "ssp/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ssp {

namespace {

Violation violation(std::string what, std::size_t x, std::size_t u) {
    return {std::move(what), static_cast<std::int64_t>(x), static_cast<std::int64_t>(u)};
}

Violation violation(std::string what, std::size_t x) {
    return {std::move(what), static_cast<std::int64_t>(x), -1};
}

std::string describe(const Violation& v) {
    std::ostringstream os;
    os << v.what;
    if (v.state >= 0) os << " at state " << v.state;
    if (v.action >= 0) os << ", action " << v.action;
    return os.str();
}

// Shared checks for the parts both forms have in common.
void check_shape(ValidationReport& out, std::size_t n_states, StateId terminal,
                 const std::vector<std::vector<std::string>>& labels, std::size_t n_rows) {
    if (n_states == 0) out.push_back({"model has no states"});
    if (terminal.index >= n_states) out.push_back({"terminal index out of range"});
    if (labels.size() != n_states) out.push_back({"action label list count differs from n_states"});
    if (n_rows != n_states) out.push_back({"per-state action table count differs from n_states"});
}

}  // namespace

ValidationReport validate(const KernelSsp& model) {
    ValidationReport out;
    check_shape(out, model.n_states, model.terminal, model.action_labels, model.choices.size());
    if (!out.empty()) return out;

    for (std::size_t x = 0; x < model.n_states; ++x) {
        const auto& acts = model.choices[x];
        if (model.action_labels[x].size() != acts.size())
            out.push_back(violation("action label count differs from action count", x));
        if (acts.empty()) {
            out.push_back(violation("state has no admissible action", x));
            continue;
        }
        const bool terminal = x == model.terminal.index;
        if (terminal && acts.size() != 1)
            out.push_back(violation("terminal state must have exactly one stop action", x));

        for (std::size_t u = 0; u < acts.size(); ++u) {
            const Transition& tr = acts[u];
            if (!std::isfinite(tr.cost) || tr.cost < 0.0)
                out.push_back(violation("stage cost is negative or not finite", x, u));
            if (tr.row.empty()) {
                out.push_back(violation("transition row is empty", x, u));
                continue;
            }
            double sum = 0.0;
            bool bad_entry = false;
            for (std::size_t k = 0; k < tr.row.size(); ++k) {
                const Successor& s = tr.row[k];
                if (s.to.index >= model.n_states) bad_entry = true;
                if (!(s.prob >= 0.0 && s.prob <= 1.0)) bad_entry = true;
                if (k > 0 && !(tr.row[k - 1].to < s.to)) bad_entry = true;
                sum += s.prob;
            }
            if (bad_entry)
                out.push_back(violation(
                    "row has an out-of-range successor, a probability outside [0,1], or unsorted/duplicate successors",
                    x, u));
            if (std::abs(sum - 1.0) > kProbabilityTolerance)
                out.push_back(violation("transition row does not sum to 1 (sum=" + std::to_string(sum) + ")", x, u));
            if (terminal) {
                const bool self_loop = tr.row.size() == 1 && tr.row[0].to == model.terminal && tr.row[0].prob == 1.0;
                if (!self_loop || tr.cost != 0.0)
                    out.push_back(violation("terminal state must self-loop with probability 1 and cost 0", x, u));
            }
        }
    }
    return out;
}

ValidationReport validate(const DisturbanceSsp& model) {
    ValidationReport out;
    check_shape(out, model.n_states, model.terminal, model.action_labels, model.cost.size());
    if (model.successor.size() != model.n_states)
        out.push_back({"successor table count differs from n_states"});
    const std::size_t nw = model.disturbance_probs.size();
    if (nw == 0) out.push_back({"disturbance set is empty"});
    if (model.disturbance_labels.size() != nw) out.push_back({"disturbance label count differs from probability count"});
    if (!out.empty()) return out;

    double qsum = 0.0;
    for (std::size_t w = 0; w < nw; ++w) {
        const double q = model.disturbance_probs[w];
        if (!(q >= 0.0 && q <= 1.0)) out.push_back({"disturbance probability outside [0,1] at index " + std::to_string(w)});
        qsum += q;
    }
    if (std::abs(qsum - 1.0) > kProbabilityTolerance)
        out.push_back({"disturbance probabilities do not sum to 1 (sum=" + std::to_string(qsum) + ")"});
    if (model.nominal >= nw) out.push_back({"nominal disturbance index out of range"});

    for (std::size_t x = 0; x < model.n_states; ++x) {
        const std::size_t na = model.cost[x].size();
        const bool terminal = x == model.terminal.index;
        if (model.action_labels[x].size() != na)
            out.push_back(violation("action label count differs from action count", x));
        if (na == 0) {
            out.push_back(violation("state has no admissible action", x));
            continue;
        }
        if (terminal && na != 1)
            out.push_back(violation("terminal state must have exactly one stop action", x));
        if (model.successor[x].size() != na) {
            out.push_back(violation("successor table action count differs from cost table", x));
            continue;
        }
        for (std::size_t u = 0; u < na; ++u) {
            const double f = model.cost[x][u];
            if (!std::isfinite(f) || f < 0.0) out.push_back(violation("stage cost is negative or not finite", x, u));
            if (terminal && f != 0.0) out.push_back(violation("terminal stage cost must be 0", x, u));
            const auto& by_w = model.successor[x][u];
            if (by_w.size() != nw) {
                out.push_back(violation("successor table is not total over disturbances", x, u));
                continue;
            }
            for (std::size_t w = 0; w < nw; ++w) {
                if (by_w[w].index >= model.n_states)
                    out.push_back(violation("successor out of range for disturbance " + std::to_string(w), x, u));
                else if (terminal && by_w[w] != model.terminal)
                    out.push_back(violation("terminal state must map to itself under every disturbance", x, u));
            }
        }
    }
    return out;
}

void require_valid(const KernelSsp& model) {
    const auto report = validate(model);
    if (!report.empty()) throw InvalidModel("invalid kernel model: " + describe(report.front()));
}

void require_valid(const DisturbanceSsp& model) {
    const auto report = validate(model);
    if (!report.empty()) throw InvalidModel("invalid disturbance model: " + describe(report.front()));
}

void require_value_function(const ValueFunction& v, std::size_t n_states, StateId terminal) {
    if (v.size() != n_states)
        throw std::invalid_argument("value function has " + std::to_string(v.size()) + " entries, model has " +
                                    std::to_string(n_states) + " states");
    for (double e : v.values)
        if (!std::isfinite(e)) throw std::invalid_argument("value function has a non-finite entry");
    if (v[terminal] != 0.0) throw std::invalid_argument("value function must be 0 at the terminal state");
}

void require_policy(const StationaryPolicy& pi, const KernelSsp& model) {
    if (pi.size() != model.n_states) throw std::invalid_argument("policy size differs from state count");
    for (std::size_t x = 0; x < model.n_states; ++x) {
        if (pi.choice[x].index >= model.choices[x].size())
            throw std::invalid_argument("policy action out of range at state " + std::to_string(x));
    }
}

KernelSsp induce_kernel(const DisturbanceSsp& d) {
    require_valid(d);
    KernelSsp k;
    k.n_states = d.n_states;
    k.terminal = d.terminal;
    k.action_labels = d.action_labels;
    k.choices.resize(d.n_states);
    for (std::size_t x = 0; x < d.n_states; ++x) {
        k.choices[x].resize(d.cost[x].size());
        for (std::size_t u = 0; u < d.cost[x].size(); ++u) {
            Transition& tr = k.choices[x][u];
            tr.cost = d.cost[x][u];
            // Accumulate in disturbance order so merged masses are reproducible.
            for (std::size_t w = 0; w < d.num_disturbances(); ++w) {
                const StateId y = d.successor[x][u][w];
                const double q = d.disturbance_probs[w];
                auto it = std::lower_bound(tr.row.begin(), tr.row.end(), y,
                                           [](const Successor& s, StateId id) { return s.to < id; });
                if (it != tr.row.end() && it->to == y)
                    it->prob += q;
                else
                    tr.row.insert(it, Successor{y, q});
            }
            std::erase_if(tr.row, [](const Successor& s) { return s.prob == 0.0; });
            if (tr.row.empty()) tr.row.push_back(Successor{d.successor[x][u][d.nominal], 1.0});
            // All disturbances agree: the sum of q can be 1 +- ulp, but the
            // successor is certain (and the terminal loop needs exactly 1).
            if (tr.row.size() == 1) tr.row[0].prob = 1.0;
        }
    }
    return k;
}

KernelSsp unit_cost(const KernelSsp& model) {
    require_valid(model);
    KernelSsp out = model;
    for (std::size_t x = 0; x < out.n_states; ++x)
        for (auto& tr : out.choices[x]) tr.cost = x == out.terminal.index ? 0.0 : 1.0;
    return out;
}

DisturbanceSsp unit_cost(const DisturbanceSsp& model) {
    require_valid(model);
    DisturbanceSsp out = model;
    for (std::size_t x = 0; x < out.n_states; ++x)
        for (double& f : out.cost[x]) f = x == out.terminal.index ? 0.0 : 1.0;
    return out;
}

void canonicalize_rows(KernelSsp& model) {
    for (auto& acts : model.choices) {
        for (auto& tr : acts) {
            std::stable_sort(tr.row.begin(), tr.row.end(),
                             [](const Successor& a, const Successor& b) { return a.to < b.to; });
            std::vector<Successor> merged;
            for (const auto& s : tr.row) {
                if (!merged.empty() && merged.back().to == s.to)
                    merged.back().prob += s.prob;
                else
                    merged.push_back(s);
            }
            tr.row = std::move(merged);
            double sum = 0.0;
            for (const auto& s : tr.row) sum += s.prob;
            // Rows already normalized up to summation rounding are left alone, so
            // that canonicalizing twice (e.g. a save/load cycle) is a no-op.
            const double noise = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(tr.row.size());
            const double off = std::abs(sum - 1.0);
            if (tr.row.size() == 1 && off <= kProbabilityTolerance)
                tr.row[0].prob = 1.0;
            else if (off > noise && off <= kProbabilityTolerance)
                for (auto& s : tr.row) s.prob /= sum;
        }
    }
}

void ensure_stop_action(KernelSsp& model) {
    const std::size_t t = model.terminal.index;
    if (t >= model.choices.size() || !model.choices[t].empty()) return;
    model.choices[t].push_back(Transition{{Successor{model.terminal, 1.0}}, 0.0});
    if (t < model.action_labels.size() && model.action_labels[t].empty())
        model.action_labels[t].push_back(kStopLabel);
}

}  // namespace ssp
