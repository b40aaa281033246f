#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssp/exact_solver.hpp"
#include "ssp/model.hpp"

namespace ssp {

/// Absolute tolerance for certificate comparisons.
inline constexpr double kCertificateTolerance = 1e-8;
/// Negative gaps down to this value are treated as rounding noise and clamped to 0.
inline constexpr double kGapClampTolerance = 1e-9;

/// A named inequality lhs <= rhs. `slack` is rhs - lhs.
struct Check {
    std::string name;
    bool passed = false;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
    std::string note;
};

Check make_check(std::string name, double lhs, double rhs, double tol = kCertificateTolerance);

struct LyapunovSpec {
    std::vector<double> values;  // L(x) >= 0 on every state
    double c = 1.0;
    bool uniform = false;
};

struct CertificateOptions {
    std::optional<double> uniform_hitting_bound;  // N
    std::optional<LyapunovSpec> lyapunov;
    /// Measure epsilon (and delta, for CE) only over the region the closed loop
    /// actually consults instead of the whole state space.
    bool local_epsilon = false;
    /// Certify this policy instead of the exact greedy one; its one-step
    /// inexactness eta is added to the bounds. Kernel-form certificates only.
    std::optional<StationaryPolicy> policy;
    SolverOptions solver;
};

struct CertificateReport {
    std::string kind;  // "rollout" or "ce"
    StateId from;
    bool proper = false;
    std::string epsilon_mode = "global";

    double epsilon = 0.0;
    double delta = 0.0;
    double eta = 0.0;
    std::optional<double> expected_tau;
    std::optional<double> gap;
    double raw_gap = 0.0;
    bool gap_clamped = false;
    double vstar_at_start = 0.0;
    double cost_at_start = 0.0;

    std::optional<double> bound_hitting;
    std::optional<double> bound_uniform_N;
    std::optional<double> bound_lyapunov;
    std::optional<double> bound_local;
    std::optional<double> identity_residual;
    std::optional<double> uniform_hitting_N;
    std::optional<double> lyapunov_c;

    StationaryPolicy policy;
    ValueFunction vstar;
    std::vector<double> occupation;
    std::size_t solver_iterations = 0;
    double solver_residual = 0.0;
    double solver_tol = 0.0;

    std::vector<Check> checks;

    bool all_passed() const;
    const Check* find_check(const std::string& name) const;
};

/// The certified policy is not proper from the start state; no bound is issued.
class CertificateRefused : public std::runtime_error {
public:
    CertificateRefused(const std::string& what, CertificateReport partial)
        : std::runtime_error(what), report(std::move(partial)) {}
    CertificateReport report;
};

class ImproperRollout : public CertificateRefused {
public:
    ImproperRollout(StateId from, CertificateReport partial)
        : CertificateRefused("rollout policy is not proper from state " + std::to_string(from.index),
                             std::move(partial)) {}
};

class ImproperCE : public CertificateRefused {
public:
    ImproperCE(StateId from, CertificateReport partial)
        : CertificateRefused("certainty-equivalent policy is not proper from state " + std::to_string(from.index),
                             std::move(partial)) {}
};

class DriftViolated : public std::runtime_error {
public:
    DriftViolated(StateId x, std::optional<ActionId> u, double lhs, double rhs);
    StateId state;
    std::optional<ActionId> action;
    double expected_next = 0.0;  // E[L(next)]
    double required = 0.0;       // L(x) - c
};

class FactorTooLarge : public std::runtime_error {
public:
    explicit FactorTooLarge(double factor)
        : std::runtime_error("2(eps+delta) = " + std::to_string(factor) + " >= 1; multiplicative bound inapplicable"),
          factor(factor) {}
    double factor;
};

/// sup |V - V*| over all states, or over the flagged states when given.
double epsilon_sup(const ValueFunction& v, const ValueFunction& vstar,
                   const std::optional<std::vector<bool>>& restrict_to = std::nullopt);

/// Closed-loop states reachable from `from` plus every one-step successor of
/// every admissible action at those states.
std::vector<bool> lookahead_region(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

CertificateReport rollout_certificate(const KernelSsp& model, const ValueFunction& v, StateId from,
                                      const CertificateOptions& opts = {});

CertificateReport ce_certificate(const DisturbanceSsp& d, const ValueFunction& v, StateId from,
                                 const CertificateOptions& opts = {});

struct PerformanceDifference {
    double lhs = 0.0;  // J^pi(from) - V*(from)
    double rhs = 0.0;  // sum_y mu(y) A*(y, pi(y))
    double residual = 0.0;
};

PerformanceDifference performance_difference(const KernelSsp& model, const StationaryPolicy& pi, StateId from,
                                             const ValueFunction& vstar);
PerformanceDifference performance_difference(const KernelSsp& model, const StationaryPolicy& pi, StateId from);

struct OneStepReport {
    double epsilon = 0.0;
    std::vector<double> residual;     // |(TV)(x) - V*(x)|
    std::vector<double> rollout_lhs;  // E[f(x,pi_R(x)) + V*(next)] - V*(x)
    double max_residual = 0.0;
    double max_rollout_lhs = 0.0;
    bool residual_ok = false;   // max_residual <= epsilon
    bool rollout_ok = false;    // max_rollout_lhs <= 2 epsilon
    bool fatal = false;         // a violation beyond 1e-9
};

OneStepReport one_step_checks(const KernelSsp& model, const ValueFunction& v, const ValueFunction& vstar);

struct LyapunovResult {
    bool holds = false;
    double tau_bound = 0.0;  // L(from)/c
    std::optional<double> expected_tau;
    bool tau_within_bound = false;
};

/// Verifies E[L(next)] <= L(x) - c on every closed-loop state reachable from
/// `from` (with `uniform`, for every admissible action at every state reachable
/// under some action). Throws DriftViolated at the first failing state.
LyapunovResult lyapunov_check(const KernelSsp& model, const StationaryPolicy& pi, const std::vector<double>& lyap,
                              double c, StateId from, bool uniform = false);

struct LocalErrorBound {
    double bound = 0.0;          // 2 sum_y mu(y) |V(y) - V*(y)|
    double uniform_bound = 0.0;  // 2 eps E[tau]
    bool local_inequality_holds = false;
    double gap = 0.0;
};

LocalErrorBound local_error_bound(const KernelSsp& model, const ValueFunction& v, StateId from);
LocalErrorBound local_error_bound(const KernelSsp& model, const ValueFunction& v, StateId from,
                                  const ValueFunction& vstar);

/// H*(x) / (1 - 2(eps + delta)); throws FactorTooLarge when 2(eps+delta) >= 1.
double multiplicative_hitting_bound(double h_star, double epsilon, double delta);

struct MinTimeReport {
    CertificateReport base;  // certificate on the unit-cost model
    double h_star = 0.0;
    std::optional<double> multiplicative;
    std::optional<double> additive_N;
    std::optional<double> additive_lyapunov;
    bool factor_too_large = false;
    std::optional<double> certified_excess;  // multiplicative - H*

    bool all_passed() const;
};

MinTimeReport min_time_certificate(const KernelSsp& model, const ValueFunction& v, StateId from,
                                   const CertificateOptions& opts = {});
MinTimeReport min_time_certificate(const DisturbanceSsp& d, const ValueFunction& v, StateId from,
                                   const CertificateOptions& opts = {});

}  // namespace ssp
