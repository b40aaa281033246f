#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "ssp/model.hpp"

namespace ssp {

inline constexpr std::size_t kDefaultMaxSteps = 1'000'000;
/// Two-sided 99% standard normal quantile.
inline constexpr double kZ99 = 2.5758293035489004;

struct Trajectory {
    std::vector<StateId> states;  // states[0] = start; ends at t when absorbed
    std::vector<ActionId> actions;
    std::vector<double> costs;
    std::size_t tau = 0;  // steps taken (equals costs.size())
    bool truncated = false;
    double total_cost() const;
};

/// Sampled single trajectory. Kernel rows are sampled by inverse CDF over the
/// sorted row; disturbance models sample w by inverse CDF over q.
Trajectory simulate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                    std::size_t max_steps = kDefaultMaxSteps);
Trajectory simulate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from, std::uint64_t seed,
                    std::size_t max_steps = kDefaultMaxSteps);

void write_trajectory_table(std::ostream& os, const Trajectory& traj);

struct EstimateReport {
    double mean_cost = 0.0;
    double mean_tau = 0.0;
    double sd_cost = 0.0;
    double sd_tau = 0.0;
    double half_width_cost = 0.0;  // 99% normal-approximation half-width
    double half_width_tau = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::size_t truncations = 0;
    bool valid = false;

    bool operator==(const EstimateReport&) const = default;
};

/// Replication r is simulated with seed derive_seed(seed, r); per-replication
/// results are reduced in index order, so the report does not depend on the
/// thread count. Parallel over replications.
EstimateReport estimate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::size_t replications,
                        std::uint64_t seed, std::size_t max_steps = kDefaultMaxSteps);
EstimateReport estimate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from,
                        std::size_t replications, std::uint64_t seed, std::size_t max_steps = kDefaultMaxSteps);

/// |mean - exact| <= half_width, with `slack` absorbing floating-point noise
/// when the sample variance is zero.
bool covers(double mean, double half_width, double exact, double slack = 1e-9);

namespace serial {

EstimateReport estimate(const KernelSsp& model, const StationaryPolicy& pi, StateId from, std::size_t replications,
                        std::uint64_t seed, std::size_t max_steps = kDefaultMaxSteps);
EstimateReport estimate(const DisturbanceSsp& model, const StationaryPolicy& pi, StateId from,
                        std::size_t replications, std::uint64_t seed, std::size_t max_steps = kDefaultMaxSteps);

}  // namespace serial

}  // namespace ssp
