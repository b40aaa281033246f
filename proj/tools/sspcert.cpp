// sspcert: validate models, certify rollout / certainty-equivalent policies,
// sweep families of instances and simulate closed loops.
//
// Exit codes: 0 ok, 1 validation or hypothesis failure, 2 I/O, 3 certificate
// refused (policy not proper), 4 a certified bound was violated.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ssp/certificates.hpp"
#include "ssp/exact_solver.hpp"
#include "ssp/io.hpp"
#include "ssp/montecarlo.hpp"
#include "ssp/random.hpp"
#include "ssp/rollout.hpp"
#include "ssp/scenarios.hpp"

using namespace ssp;
using io::Json;

namespace {

enum Exit : int { kOk = 0, kInvalid = 1, kIo = 2, kRefused = 3, kViolated = 4 };

constexpr const char* kTableHeader = "kind,param,eps,gap,expected_tau,bound_hitting,ratio,status";

// Thrown for bad flag combinations; reported like a validation failure.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelFlags {
    std::string path;
    std::string scenario;
    std::size_t M = 4;
    double eps = 0.1;
    int width = 5;
    int height = 5;
    int radius = 0;
    std::string obstacle_motion = "stay";
    double stay_prob = 0.2;
    double penalty = 0.0;
    bool eight = false;
    std::size_t n_states = 8;
    std::size_t n_actions = 3;
    std::size_t n_disturbances = 3;
    std::string form = "kernel";
    std::uint64_t model_seed = 0;
};

struct ValueFlags {
    std::string path;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double offset = 0.0;
};

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
    cmd->add_option("--model", m.path, "Model file (kernel or disturbance form, or a scenario document)");
    cmd->add_option("--scenario", m.scenario, "Built-in scenario: sharpness, gridworld or random");
    cmd->add_option("--M", m.M, "Sharpness chain length");
    cmd->add_option("--eps", m.eps, "Sharpness surrogate error");
    cmd->add_option("--width", m.width, "Grid width");
    cmd->add_option("--height", m.height, "Grid height");
    cmd->add_option("--radius", m.radius, "Arrival radius (Manhattan)");
    cmd->add_option("--obstacle-motion", m.obstacle_motion, "stay or five-move");
    cmd->add_option("--stay-prob", m.stay_prob, "Obstacle stay probability for five-move");
    cmd->add_option("--penalty", m.penalty, "Collision penalty");
    cmd->add_flag("--eight", m.eight, "Eight-connected robot moves");
    cmd->add_option("--n-states", m.n_states, "Random model: states including t");
    cmd->add_option("--n-actions", m.n_actions, "Random model: actions per state");
    cmd->add_option("--n-disturbances", m.n_disturbances, "Random model: disturbance values");
    cmd->add_option("--form", m.form, "Random model form: kernel or disturbance");
    cmd->add_option("--model-seed", m.model_seed, "Random model seed");
}

void add_value_flags(CLI::App* cmd, ValueFlags& v) {
    cmd->add_option("--value", v.path, "Surrogate value function file");
    cmd->add_option("--noise", v.noise, "Add uniform noise of this amplitude to the surrogate");
    cmd->add_option("--seed", v.seed, "Seed for --noise (and for simulation)");
    cmd->add_option("--surrogate-offset", v.offset, "Add a constant to the surrogate off t");
}

io::LoadedModel load(const ModelFlags& f) {
    if (!f.path.empty() && !f.scenario.empty()) throw UsageError("give either --model or --scenario, not both");
    if (!f.path.empty()) return io::load_model(f.path);
    if (f.scenario.empty()) throw UsageError("a model is required (--model or --scenario)");
    Json spec{{"kind", f.scenario}};
    if (f.scenario == "sharpness") {
        spec["M"] = f.M;
        spec["eps"] = f.eps;
    } else if (f.scenario == "gridworld") {
        spec["width"] = f.width;
        spec["height"] = f.height;
        spec["arrival_radius"] = f.radius;
        spec["obstacle_motion"] = f.obstacle_motion;
        spec["stay_prob"] = f.stay_prob;
        spec["collision_penalty"] = f.penalty;
        spec["eight_connected"] = f.eight;
        spec["target"] = {f.width - 1, f.height - 1};
        spec["obstacle_start"] = {f.width / 2, f.height / 2};
    } else if (f.scenario == "random") {
        spec["n_states"] = f.n_states;
        spec["n_actions"] = f.n_actions;
        spec["n_disturbances"] = f.n_disturbances;
        spec["form"] = f.form;
        spec["seed"] = f.model_seed;
    }
    try {
        return io::scenario_from_json(spec);
    } catch (const io::FormatError& e) {
        throw UsageError(e.what());
    }
}

double default_tolerance() {
    const char* env = std::getenv("SSPCERT_TOL");
    if (env == nullptr || *env == '\0') return SolverOptions{}.tol;
    char* end = nullptr;
    const double tol = std::strtod(env, &end);
    if (end == env || *end != '\0' || !(tol > 0.0) || !std::isfinite(tol))
        throw UsageError(std::string("SSPCERT_TOL must be a positive number, got '") + env + "'");
    return tol;
}

// Surrogate: file, else the scenario's own, else the exact optimum of `base`;
// then optional noise and a constant offset, both off t.
ValueFunction resolve_value(const ValueFlags& f, const io::LoadedModel& lm, const KernelSsp& base,
                            const SolverOptions& solver) {
    ValueFunction v;
    if (!f.path.empty())
        v = io::load_value_function(f.path);
    else if (lm.surrogate)
        v = *lm.surrogate;
    else
        v = value_iteration(base, solver).value;
    if (v.size() != base.n_states)
        throw UsageError("value function has " + std::to_string(v.size()) + " entries, model has " +
                         std::to_string(base.n_states) + " states");
    if (f.noise > 0.0) v = noisy_surrogate(v, base.terminal, f.noise, f.seed);
    if (f.offset != 0.0)
        for (std::size_t x = 0; x < v.size(); ++x)
            if (x != base.terminal.index) v.values[x] += f.offset;
    return v;
}

void emit(const std::string& text, const std::string& output) {
    if (output.empty())
        std::cout << text;
    else
        io::write_text(output, text);
}

bool is_hypothesis(const std::string& name) {
    return name == "hitting_time_le_N" || name == "lyapunov_drift" || name == "hitting_time_le_L_over_c" ||
           name == "min_time_additive_N" || name == "min_time_additive_lyapunov";
}

// Failed hypotheses (N, drift) are the caller's problem; anything else failing
// means a certified inequality did not hold.
int exit_for(const std::vector<Check>& checks) {
    bool hypothesis = false;
    bool violated = false;
    for (const Check& c : checks) {
        if (c.passed) continue;
        if (is_hypothesis(c.name))
            hypothesis = true;
        else
            violated = true;
    }
    if (hypothesis) return kInvalid;
    return violated ? kViolated : kOk;
}

std::string ratio_of(const CertificateReport& r) {
    const double denom = r.epsilon * r.expected_tau.value_or(0.0);
    return denom > 0.0 ? io::format_number(*r.gap / denom) : std::string("nan");
}

std::string table_row(const std::string& kind, const std::string& param, const CertificateReport& r) {
    std::ostringstream os;
    os << kind << ',' << param << ',' << io::format_number(r.epsilon) << ',';
    if (!r.proper) {
        os << ",,,,refused";
        return os.str();
    }
    os << io::format_number(*r.gap) << ',' << io::format_number(*r.expected_tau) << ','
       << io::format_number(*r.bound_hitting) << ',' << ratio_of(r) << ',' << (r.all_passed() ? "pass" : "FAIL");
    return os.str();
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
    const io::LoadedModel lm = io::load_model(path);
    const ValidationReport report = std::visit([](const auto& m) { return validate(m); }, lm.model);
    if (report.empty()) {
        std::cout << "ok: " << lm.source << " model, hash " << io::model_hash(lm.model) << '\n';
        return kOk;
    }
    for (const Violation& v : report) {
        std::cout << "violation";
        if (v.state >= 0) std::cout << " at state " << v.state;
        if (v.action >= 0) std::cout << ", action " << v.action;
        std::cout << ": " << v.what << '\n';
    }
    return kInvalid;
}

struct CertifyFlags {
    ModelFlags model;
    ValueFlags value;
    std::optional<std::size_t> from;
    bool ce = false;
    std::optional<double> N;
    std::string lyapunov_path;
    double c = 1.0;
    bool uniform_drift = false;
    bool local_eps = false;
    bool min_time = false;
    std::string policy_path;
    std::string save_policy;
    std::string output;
    std::string format = "report";
    std::optional<double> tol;
};

int cmd_certify(const CertifyFlags& f) {
    const io::LoadedModel lm = load(f.model);
    const std::string hash = io::model_hash(lm.model);
    const bool disturbance = std::holds_alternative<DisturbanceSsp>(lm.model);
    if (f.ce && !disturbance) throw UsageError("--ce needs a disturbance-form model");
    if (f.ce && !f.policy_path.empty()) throw UsageError("--policy cannot be combined with --ce");

    CertificateOptions opts;
    opts.solver.tol = f.tol.value_or(default_tolerance());
    opts.uniform_hitting_bound = f.N;
    opts.local_epsilon = f.local_eps;
    KernelSsp kernel = io::kernel_of(lm.model);
    if (f.min_time) kernel = unit_cost(kernel);
    if (!f.lyapunov_path.empty())
        opts.lyapunov = LyapunovSpec{io::load_value_function(f.lyapunov_path).values, f.c, f.uniform_drift};
    if (!f.policy_path.empty()) opts.policy = io::load_policy(f.policy_path, hash);

    const ValueFunction v = resolve_value(f.value, lm, kernel, opts.solver);
    const StateId from{f.from.value_or(lm.start.value_or(StateId{0}).index)};

    Json report;
    std::vector<Check> checks;
    CertificateReport base;
    try {
        if (f.min_time) {
            const MinTimeReport mt = f.ce ? min_time_certificate(std::get<DisturbanceSsp>(lm.model), v, from, opts)
                                          : min_time_certificate(kernel, v, from, opts);
            report = io::to_json(mt, hash);
            base = mt.base;
        } else {
            base = f.ce ? ce_certificate(std::get<DisturbanceSsp>(lm.model), v, from, opts)
                        : rollout_certificate(kernel, v, from, opts);
            report = io::to_json(base, hash);
        }
    } catch (const CertificateRefused& e) {
        std::cerr << "certificate refused: " << e.what() << '\n';
        if (f.format == "table")
            emit(std::string(kTableHeader) + '\n' + table_row(e.report.kind, std::to_string(from.index), e.report) + '\n',
                 f.output);
        else
            emit(io::to_json(e.report, hash).dump(2) + '\n', f.output);
        return kRefused;
    }
    if (!f.save_policy.empty()) io::write_text(f.save_policy, io::to_json(base.policy, hash).dump(2) + '\n');
    if (f.format == "table")
        emit(std::string(kTableHeader) + '\n' + table_row(base.kind, std::to_string(from.index), base) + '\n', f.output);
    else
        emit(report.dump(2) + '\n', f.output);
    return exit_for(base.checks);
}

struct SweepFlags {
    std::string scenario;
    std::string m_list;
    std::string eps_list = "0.1";
    bool random = false;
    std::size_t seeds = 100;
    std::size_t n_states = 10;
    std::size_t n_actions = 3;
    std::size_t n_disturbances = 3;
    double noise = 0.1;
    bool ce = false;
    std::string output;
    std::optional<double> tol;
};

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream is(item);
        T value{};
        if (!(is >> value) || !(is >> std::ws).eof()) throw UsageError(std::string("bad entry '") + item + "' in " + what);
        out.push_back(value);
    }
    return out;
}

int cmd_sweep(const SweepFlags& f) {
    CertificateOptions opts;
    opts.solver.tol = f.tol.value_or(default_tolerance());
    std::ostringstream out;
    out << kTableHeader << '\n';
    bool violated = false;
    auto record = [&](const std::string& kind, const std::string& param, const CertificateReport& r) {
        out << table_row(kind, param, r) << '\n';
        if (r.proper && exit_for(r.checks) != kOk) violated = true;
    };

    if (f.random == !f.scenario.empty()) throw UsageError("sweep needs exactly one of --scenario sharpness or --random");
    if (!f.random) {
        if (f.scenario != "sharpness") throw UsageError("only the sharpness scenario can be swept by M and eps");
        for (const auto m : parse_list<std::size_t>(f.m_list, "--M-list"))
            for (const double eps : parse_list<double>(f.eps_list, "--eps-list")) {
                const SharpnessInstance s = sharpness_chain({m, eps});
                record("sharpness", std::to_string(m), rollout_certificate(s.model, s.surrogate, StateId{0}, opts));
            }
    } else {
        for (std::uint64_t seed = 0; seed < f.seeds; ++seed) {
            try {
                if (f.ce) {
                    const DisturbanceSsp d =
                        random_disturbance_ssp(f.n_states, f.n_actions, f.n_disturbances, {0.0, 1.0}, seed);
                    const ValueFunction vstar = value_iteration(induce_kernel(d), opts.solver).value;
                    record("random-ce", std::to_string(seed),
                           ce_certificate(d, noisy_surrogate(vstar, d.terminal, f.noise, seed), StateId{0}, opts));
                } else {
                    const KernelSsp k = random_proper_ssp(f.n_states, f.n_actions, 0.4, {0.0, 1.0}, seed);
                    const ValueFunction vstar = value_iteration(k, opts.solver).value;
                    record("random", std::to_string(seed),
                           rollout_certificate(k, noisy_surrogate(vstar, k.terminal, f.noise, seed), StateId{0}, opts));
                }
            } catch (const CertificateRefused& e) {
                record(f.ce ? "random-ce" : "random", std::to_string(seed), e.report);
            }
        }
    }
    emit(out.str(), f.output);
    return violated ? kViolated : kOk;
}

struct SimulateFlags {
    ModelFlags model;
    ValueFlags value;
    std::optional<std::size_t> from;
    std::string policy_source = "rollout";
    std::string policy_path;
    std::size_t reps = 10000;
    std::size_t max_steps = kDefaultMaxSteps;
    bool cross_check = false;
    std::string trajectory;
    std::string output;
    std::string format = "report";
    std::optional<double> tol;
};

int cmd_simulate(const SimulateFlags& f) {
    const io::LoadedModel lm = load(f.model);
    const std::string hash = io::model_hash(lm.model);
    const KernelSsp kernel = io::kernel_of(lm.model);
    SolverOptions solver;
    solver.tol = f.tol.value_or(default_tolerance());
    const StateId from{f.from.value_or(lm.start.value_or(StateId{0}).index)};

    StationaryPolicy pi;
    if (!f.policy_path.empty()) {
        pi = io::load_policy(f.policy_path, hash);
    } else if (f.policy_source == "optimal") {
        pi = value_iteration(kernel, solver).greedy;
    } else if (f.policy_source == "rollout") {
        pi = greedy_policy(kernel, resolve_value(f.value, lm, kernel, solver)).policy;
    } else if (f.policy_source == "ce") {
        const auto* d = std::get_if<DisturbanceSsp>(&lm.model);
        if (d == nullptr) throw UsageError("--policy-source ce needs a disturbance-form model");
        pi = ce_policy(*d, resolve_value(f.value, lm, kernel, solver));
    } else {
        throw UsageError("unknown policy source '" + f.policy_source + "' (rollout, ce, optimal)");
    }
    require_policy(pi, kernel);

    const EstimateReport est = std::visit(
        [&](const auto& m) { return estimate(m, pi, from, f.reps, f.value.seed, f.max_steps); }, lm.model);
    if (!f.trajectory.empty()) {
        const Trajectory t = std::visit(
            [&](const auto& m) { return simulate(m, pi, from, derive_seed(f.value.seed, 0), f.max_steps); }, lm.model);
        std::ostringstream os;
        write_trajectory_table(os, t);
        io::write_text(f.trajectory, os.str());
    }

    Json report = io::to_json(est);
    report["model_hash"] = hash;
    report["from"] = from.index;
    int code = est.valid ? kOk : kInvalid;
    std::string check_status;
    if (f.cross_check) {
        if (!properness_check(kernel, pi, from)) {
            std::cerr << "cross-check impossible: policy is not proper from state " << from.index << '\n';
            return kRefused;
        }
        const double j = policy_evaluation_exact(kernel, pi, from).at_start;
        const double tau = *hitting_time_exact(kernel, pi, from).steps;
        const bool cost_ok = covers(est.mean_cost, est.half_width_cost, j);
        const bool tau_ok = covers(est.mean_tau, est.half_width_tau, tau);
        report["cross_check"] = {{"exact_cost", j}, {"exact_tau", tau}, {"cost_covered", cost_ok},
                                 {"tau_covered", tau_ok}};
        check_status = cost_ok && tau_ok ? "pass" : "miss";
        // A 99% interval misses about once in a hundred seeds; that is not a bug.
        if (!(cost_ok && tau_ok) && code == kOk) code = kInvalid;
    }
    if (f.format == "table") {
        std::ostringstream os;
        os << "mean_cost,half_width_cost,mean_tau,half_width_tau,replications,seed,truncations,cross_check\n"
           << io::format_number(est.mean_cost) << ',' << io::format_number(est.half_width_cost) << ','
           << io::format_number(est.mean_tau) << ',' << io::format_number(est.half_width_tau) << ','
           << est.replications << ',' << est.seed << ',' << est.truncations << ',' << check_status << '\n';
        emit(os.str(), f.output);
    } else {
        emit(report.dump(2) + '\n', f.output);
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certificates for rollout and certainty-equivalent policies on finite SSPs"};
    app.require_subcommand(1);

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Check a model file");
    validate_cmd->add_option("model", validate_path, "Model file")->required();

    CertifyFlags cf;
    auto* certify_cmd = app.add_subcommand("certify", "Certify the rollout (or CE) policy of a surrogate");
    add_model_flags(certify_cmd, cf.model);
    add_value_flags(certify_cmd, cf.value);
    certify_cmd->add_option("--from", cf.from, "Start state (default: scenario start or 0)");
    certify_cmd->add_flag("--ce", cf.ce, "Certainty-equivalent policy (disturbance-form models)");
    certify_cmd->add_option("--N", cf.N, "Uniform bound on the expected hitting time");
    certify_cmd->add_option("--lyapunov", cf.lyapunov_path, "Lyapunov function file");
    certify_cmd->add_option("--c", cf.c, "Drift constant for --lyapunov");
    certify_cmd->add_flag("--uniform-drift", cf.uniform_drift, "Require the drift for every action");
    certify_cmd->add_flag("--local-eps", cf.local_eps, "Measure eps over the lookahead region only");
    certify_cmd->add_flag("--min-time", cf.min_time, "Unit costs; report the multiplicative hitting-time bound");
    certify_cmd->add_option("--policy", cf.policy_path, "Certify this policy instead (eta-inexact)");
    certify_cmd->add_option("--save-policy", cf.save_policy, "Write the certified policy to a file");
    certify_cmd->add_option("--output", cf.output, "Write the report here instead of stdout");
    certify_cmd->add_option("--format", cf.format, "report or table")->check(CLI::IsMember({"report", "table"}));
    certify_cmd->add_option("--tol", cf.tol, "Solver tolerance (default SSPCERT_TOL or 1e-10)");

    SweepFlags sf;
    auto* sweep_cmd = app.add_subcommand("sweep", "Certify a family of instances, one table row each");
    sweep_cmd->add_option("--scenario", sf.scenario, "sharpness");
    sweep_cmd->add_option("--M-list", sf.m_list, "Comma-separated chain lengths");
    sweep_cmd->add_option("--eps-list", sf.eps_list, "Comma-separated surrogate errors");
    sweep_cmd->add_flag("--random", sf.random, "Random models instead");
    sweep_cmd->add_option("--seeds", sf.seeds, "Random models: seeds 0..n-1");
    sweep_cmd->add_option("--n-states", sf.n_states, "Random models: states including t");
    sweep_cmd->add_option("--n-actions", sf.n_actions, "Random models: actions per state");
    sweep_cmd->add_option("--n-disturbances", sf.n_disturbances, "Random models: disturbance values (--ce)");
    sweep_cmd->add_option("--noise", sf.noise, "Surrogate noise amplitude around V*");
    sweep_cmd->add_flag("--ce", sf.ce, "Disturbance-form models, CE certificates");
    sweep_cmd->add_option("--output", sf.output, "Write the table here instead of stdout");
    sweep_cmd->add_option("--tol", sf.tol, "Solver tolerance");

    SimulateFlags mf;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate of a closed loop");
    add_model_flags(simulate_cmd, mf.model);
    add_value_flags(simulate_cmd, mf.value);
    simulate_cmd->add_option("--from", mf.from, "Start state");
    simulate_cmd->add_option("--policy-source", mf.policy_source, "rollout, ce or optimal");
    simulate_cmd->add_option("--policy", mf.policy_path, "Policy file (overrides --policy-source)");
    simulate_cmd->add_option("--reps", mf.reps, "Replications");
    simulate_cmd->add_option("--max-steps", mf.max_steps, "Truncation length per trajectory");
    simulate_cmd->add_flag("--cross-check", mf.cross_check, "Compare with the exact values");
    simulate_cmd->add_option("--trajectory", mf.trajectory, "Write one sample trajectory (replication 0)");
    simulate_cmd->add_option("--output", mf.output, "Write the report here instead of stdout");
    simulate_cmd->add_option("--format", mf.format, "report or table")->check(CLI::IsMember({"report", "table"}));
    simulate_cmd->add_option("--tol", mf.tol, "Solver tolerance");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (*validate_cmd) return cmd_validate(validate_path);
        if (*certify_cmd) return cmd_certify(cf);
        if (*sweep_cmd) return cmd_sweep(sf);
        if (*simulate_cmd) return cmd_simulate(mf);
    } catch (const io::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kIo;
    } catch (const io::FormatError& e) {
        std::cerr << "format error: " << e.what() << '\n';
        return kIo;
    } catch (const DriftViolated& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const FactorTooLarge& e) {
        std::cerr << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        // InvalidModel, NoProperPolicy, NotConverged, bad flags, ...
        std::cerr << "error: " << e.what() << '\n';
        return kInvalid;
    }
    return kOk;
}
