#include "ssp/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ssp::io {

namespace {

template <class T>
T get_field(const Json& j, const char* key) {
    if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw FormatError(std::string("field '") + key + "': " + e.what());
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
    return j.contains(key) ? get_field<T>(j, key) : fallback;
}

Cell cell_from_json(const Json& j, const char* key, Cell fallback) {
    if (!j.contains(key)) return fallback;
    const auto v = get_field<std::vector<int>>(j, key);
    if (v.size() != 2) throw FormatError(std::string("field '") + key + "' must be [x, y]");
    return {v[0], v[1]};
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void read_header(const Json& j, std::size_t& n, StateId& terminal, std::vector<std::vector<std::string>>& labels) {
    n = get_field<std::size_t>(j, "n_states");
    terminal = StateId{get_field<std::size_t>(j, "terminal")};
    labels = get_field<std::vector<std::vector<std::string>>>(j, "actions");
    if (labels.size() != n) throw FormatError("'actions' must list one label array per state");
    if (terminal.index >= n) throw FormatError("terminal index out of range");
    if (labels[terminal.index].empty()) labels[terminal.index] = {kStopLabel};
}

void check_coordinates(std::size_t x, std::size_t u, const std::vector<std::vector<std::string>>& labels) {
    if (x >= labels.size()) throw FormatError("entry state " + std::to_string(x) + " out of range");
    if (u >= labels[x].size())
        throw FormatError("entry action " + std::to_string(u) + " out of range at state " + std::to_string(x));
}

KernelSsp kernel_from_json(const Json& j) {
    KernelSsp k;
    read_header(j, k.n_states, k.terminal, k.action_labels);
    k.choices.resize(k.n_states);
    std::vector<std::vector<bool>> seen(k.n_states);
    for (std::size_t x = 0; x < k.n_states; ++x) {
        k.choices[x].resize(k.action_labels[x].size());
        seen[x].assign(k.action_labels[x].size(), false);
    }
    for (const Json& e : get_field<Json>(j, "transitions")) {
        const auto x = get_field<std::size_t>(e, "state");
        const auto u = get_field<std::size_t>(e, "action");
        check_coordinates(x, u, k.action_labels);
        if (seen[x][u]) throw FormatError("duplicate transition entry for state " + std::to_string(x));
        seen[x][u] = true;
        Transition& tr = k.choices[x][u];
        tr.cost = get_field<double>(e, "cost");
        for (const auto& pair : get_field<std::vector<std::pair<std::size_t, double>>>(e, "row"))
            tr.row.push_back(Successor{StateId{pair.first}, pair.second});
    }
    const std::size_t t = k.terminal.index;
    if (k.choices[t].size() == 1 && !seen[t][0]) k.choices[t][0] = Transition{{Successor{k.terminal, 1.0}}, 0.0};
    canonicalize_rows(k);
    return k;
}

DisturbanceSsp disturbance_from_json(const Json& j) {
    DisturbanceSsp d;
    read_header(j, d.n_states, d.terminal, d.action_labels);
    const Json dist = get_field<Json>(j, "disturbances");
    d.disturbance_labels = get_field<std::vector<std::string>>(dist, "labels");
    d.disturbance_probs = get_field<std::vector<double>>(dist, "probs");
    d.nominal = get_field<std::size_t>(dist, "nominal");
    const std::size_t nw = d.disturbance_probs.size();

    d.cost.resize(d.n_states);
    d.successor.resize(d.n_states);
    std::vector<std::vector<bool>> seen(d.n_states);
    for (std::size_t x = 0; x < d.n_states; ++x) {
        d.cost[x].assign(d.action_labels[x].size(), 0.0);
        d.successor[x].resize(d.action_labels[x].size());
        seen[x].assign(d.action_labels[x].size(), false);
    }
    for (const Json& e : get_field<Json>(j, "successors")) {
        const auto x = get_field<std::size_t>(e, "state");
        const auto u = get_field<std::size_t>(e, "action");
        check_coordinates(x, u, d.action_labels);
        if (seen[x][u]) throw FormatError("duplicate successor entry for state " + std::to_string(x));
        seen[x][u] = true;
        d.cost[x][u] = get_field<double>(e, "cost");
        for (std::size_t y : get_field<std::vector<std::size_t>>(e, "by_disturbance"))
            d.successor[x][u].push_back(StateId{y});
    }
    const std::size_t t = d.terminal.index;
    if (d.successor[t].size() == 1 && !seen[t][0]) d.successor[t][0].assign(nw, d.terminal);
    return d;
}

std::vector<Move> moves_from_json(const Json& spec) {
    if (spec.contains("obstacle_moves")) {
        std::vector<Move> out;
        for (const Json& m : get_field<Json>(spec, "obstacle_moves"))
            out.push_back({get_field<std::string>(m, "label"), get_field<int>(m, "dx"), get_field<int>(m, "dy"),
                           get_field<double>(m, "prob")});
        return out;
    }
    const auto motion = get_or<std::string>(spec, "obstacle_motion", "stay");
    if (motion == "stay") return {{"stay", 0, 0, 1.0}};
    if (motion == "five-move") return five_move_obstacle(get_or<double>(spec, "stay_prob", 0.2));
    throw FormatError("unknown obstacle_motion '" + motion + "' (expected stay or five-move)");
}

}  // namespace

Json to_json(const KernelSsp& m) {
    Json transitions = Json::array();
    for (std::size_t x = 0; x < m.n_states; ++x) {
        for (std::size_t u = 0; u < m.choices[x].size(); ++u) {
            Json row = Json::array();
            for (const auto& s : m.choices[x][u].row) row.push_back({s.to.index, s.prob});
            transitions.push_back({{"state", x}, {"action", u}, {"row", row}, {"cost", m.choices[x][u].cost}});
        }
    }
    return {{"form", "kernel"},          {"n_states", m.n_states},   {"terminal", m.terminal.index},
            {"actions", m.action_labels}, {"transitions", transitions}};
}

Json to_json(const DisturbanceSsp& m) {
    Json successors = Json::array();
    for (std::size_t x = 0; x < m.n_states; ++x) {
        for (std::size_t u = 0; u < m.cost[x].size(); ++u) {
            std::vector<std::size_t> by_w;
            for (StateId y : m.successor[x][u]) by_w.push_back(y.index);
            successors.push_back({{"state", x}, {"action", u}, {"by_disturbance", by_w}, {"cost", m.cost[x][u]}});
        }
    }
    return {{"form", "disturbance"},
            {"n_states", m.n_states},
            {"terminal", m.terminal.index},
            {"actions", m.action_labels},
            {"disturbances",
             {{"labels", m.disturbance_labels}, {"probs", m.disturbance_probs}, {"nominal", m.nominal}}},
            {"successors", successors}};
}

Json to_json(const AnyModel& m) {
    return std::visit([](const auto& model) { return to_json(model); }, m);
}

GridworldSpec gridworld_spec_from_json(const Json& spec) {
    GridworldSpec g;
    g.width = get_or<int>(spec, "width", g.width);
    g.height = get_or<int>(spec, "height", g.height);
    g.robot_start = cell_from_json(spec, "robot_start", g.robot_start);
    g.target = cell_from_json(spec, "target", {g.width - 1, g.height - 1});
    g.arrival_radius = get_or<int>(spec, "arrival_radius", 0);
    g.obstacle_start = cell_from_json(spec, "obstacle_start", {g.width / 2, g.height / 2});
    g.obstacle_moves = moves_from_json(spec);
    g.collision_penalty = get_or<double>(spec, "collision_penalty", 0.0);
    g.nominal_move = get_or<std::string>(spec, "nominal_move", "stay");
    g.eight_connected = get_or<bool>(spec, "eight_connected", false);
    return g;
}

LoadedModel scenario_from_json(const Json& spec) {
    const auto kind = get_field<std::string>(spec, "kind");
    LoadedModel out;
    out.source = "scenario:" + kind;
    try {
        if (kind == "sharpness") {
            SharpnessInstance inst =
                sharpness_chain({get_field<std::size_t>(spec, "M"), get_field<double>(spec, "eps")});
            out.surrogate = inst.surrogate;
            out.start = StateId{0};
            out.model = std::move(inst.model);
        } else if (kind == "gridworld") {
            const GridworldSpec gs = gridworld_spec_from_json(spec);
            Gridworld g = gridworld_nav(gs);
            out.start = g.start();
            out.surrogate = frozen_obstacle_surrogate(gs);
            out.model = std::move(g.model);
        } else if (kind == "random") {
            const auto n = get_or<std::size_t>(spec, "n_states", 8);
            const auto na = get_or<std::size_t>(spec, "n_actions", 3);
            const auto range = get_or<std::pair<double, double>>(spec, "cost_range", {0.0, 1.0});
            const auto seed = get_or<std::uint64_t>(spec, "seed", 0);
            if (get_or<std::string>(spec, "form", "kernel") == "disturbance")
                out.model = random_disturbance_ssp(n, na, get_or<std::size_t>(spec, "n_disturbances", 3), range, seed);
            else
                out.model = random_proper_ssp(n, na, get_or<double>(spec, "density", 0.4), range, seed);
            out.start = StateId{0};
        } else {
            throw FormatError("unknown scenario kind '" + kind + "' (expected sharpness, gridworld or random)");
        }
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid scenario: ") + e.what());
    }
    return out;
}

LoadedModel model_from_json(const Json& j) {
    if (!j.is_object()) throw FormatError("model document must be an object");
    if (j.contains("scenario")) return scenario_from_json(j.at("scenario"));
    const auto form = get_field<std::string>(j, "form");
    LoadedModel out;
    out.source = form;
    if (form == "kernel")
        out.model = kernel_from_json(j);
    else if (form == "disturbance")
        out.model = disturbance_from_json(j);
    else
        throw FormatError("unknown form '" + form + "' (expected kernel or disturbance)");
    return out;
}

LoadedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

std::string model_hash(const AnyModel& m) {
    const std::string text = to_json(m).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

KernelSsp kernel_of(const AnyModel& m) {
    if (const auto* k = std::get_if<KernelSsp>(&m)) return *k;
    return induce_kernel(std::get<DisturbanceSsp>(m));
}

Json to_json(const ValueFunction& v) { return {{"values", v.values}}; }

ValueFunction value_function_from_json(const Json& j) {
    if (j.is_array()) return ValueFunction(j.get<std::vector<double>>());
    return ValueFunction(get_field<std::vector<double>>(j, "values"));
}

ValueFunction load_value_function(const std::filesystem::path& path) {
    return value_function_from_json(read_json(path));
}

Json to_json(const StationaryPolicy& pi, const std::string& hash) {
    std::vector<std::size_t> a;
    for (ActionId u : pi.choice) a.push_back(u.index);
    return {{"actions", a}, {"model_hash", hash}};
}

StationaryPolicy policy_from_json(const Json& j, const std::string& expected_hash) {
    StationaryPolicy pi;
    const auto actions = j.is_array() ? j.get<std::vector<std::size_t>>() : get_field<std::vector<std::size_t>>(j, "actions");
    for (std::size_t u : actions) pi.choice.push_back(ActionId{u});
    if (!expected_hash.empty() && j.is_object() && j.contains("model_hash")) {
        const auto h = get_field<std::string>(j, "model_hash");
        if (!h.empty() && h != expected_hash)
            throw FormatError("policy was built against model " + h + ", not " + expected_hash);
    }
    return pi;
}

StationaryPolicy load_policy(const std::filesystem::path& path, const std::string& expected_hash) {
    return policy_from_json(read_json(path), expected_hash);
}

Json to_json(const ValidationReport& r) {
    Json out = Json::array();
    for (const auto& v : r) {
        Json e{{"violation", v.what}};
        e["state"] = v.state >= 0 ? Json(v.state) : Json(nullptr);
        e["action"] = v.action >= 0 ? Json(v.action) : Json(nullptr);
        out.push_back(e);
    }
    return out;
}

Json to_json(const Check& c) {
    Json j{{"name", c.name}, {"passed", c.passed}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"slack", c.slack}};
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

Json to_json(const CertificateReport& r, const std::string& hash) {
    Json checks = Json::array();
    for (const auto& c : r.checks) checks.push_back(to_json(c));
    std::vector<std::size_t> policy;
    for (ActionId u : r.policy.choice) policy.push_back(u.index);
    return {{"kind", r.kind},
            {"model_hash", hash},
            {"from", r.from.index},
            {"proper", r.proper},
            {"epsilon", r.epsilon},
            {"epsilon_mode", r.epsilon_mode},
            {"delta", r.delta},
            {"eta", r.eta},
            {"expected_tau", optional_json(r.expected_tau)},
            {"gap", optional_json(r.gap)},
            {"raw_gap", r.raw_gap},
            {"gap_clamped", r.gap_clamped},
            {"cost_at_start", r.cost_at_start},
            {"vstar_at_start", r.vstar_at_start},
            {"bound_hitting", optional_json(r.bound_hitting)},
            {"bound_uniform_N", optional_json(r.bound_uniform_N)},
            {"bound_lyapunov", optional_json(r.bound_lyapunov)},
            {"bound_local", optional_json(r.bound_local)},
            {"identity_residual", optional_json(r.identity_residual)},
            {"N", optional_json(r.uniform_hitting_N)},
            {"lyapunov_c", optional_json(r.lyapunov_c)},
            {"policy", policy},
            {"vstar", r.vstar.values},
            {"occupation", r.occupation},
            {"solver", {{"tol", r.solver_tol}, {"iterations", r.solver_iterations}, {"residual", r.solver_residual}}},
            {"checks", checks},
            {"all_passed", r.all_passed()}};
}

Json to_json(const MinTimeReport& r, const std::string& hash) {
    Json j = to_json(r.base, hash);
    j["min_time"] = {{"h_star", r.h_star},
                     {"multiplicative", optional_json(r.multiplicative)},
                     {"certified_excess", optional_json(r.certified_excess)},
                     {"additive_N", optional_json(r.additive_N)},
                     {"additive_lyapunov", optional_json(r.additive_lyapunov)},
                     {"factor_too_large", r.factor_too_large}};
    return j;
}

Json to_json(const EstimateReport& r) {
    return {{"mean_cost", r.mean_cost},
            {"mean_tau", r.mean_tau},
            {"sd_cost", r.sd_cost},
            {"sd_tau", r.sd_tau},
            {"half_width_cost_99", r.half_width_cost},
            {"half_width_tau_99", r.half_width_tau},
            {"replications", r.replications},
            {"seed", r.seed},
            {"truncations", r.truncations},
            {"valid", r.valid}};
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace ssp::io
