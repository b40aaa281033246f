#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "ssp/certificates.hpp"
#include "ssp/model.hpp"
#include "ssp/montecarlo.hpp"
#include "ssp/scenarios.hpp"

namespace ssp::io {

using Json = nlohmann::json;

/// File could not be read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File was read but its content does not follow the format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using AnyModel = std::variant<KernelSsp, DisturbanceSsp>;

/// A model file or scenario spec after loading. Scenarios also carry their
/// natural surrogate value function and start state.
struct LoadedModel {
    AnyModel model;
    std::string source;  // "kernel", "disturbance", or "scenario:<kind>"
    std::optional<ValueFunction> surrogate;
    std::optional<StateId> start;
};

Json to_json(const KernelSsp& m);
Json to_json(const DisturbanceSsp& m);
Json to_json(const AnyModel& m);

/// Parses a model object (`form` = kernel | disturbance) or a `scenario` object.
/// Kernel rows are canonicalized; the terminal stop action is filled in when absent.
LoadedModel model_from_json(const Json& j);
LoadedModel load_model(const std::filesystem::path& path);

/// Scenario specs, as found under the `scenario` key.
LoadedModel scenario_from_json(const Json& spec);
GridworldSpec gridworld_spec_from_json(const Json& spec);

/// 64-bit FNV-1a of the canonical (compact) JSON serialization, as 16 hex digits.
std::string model_hash(const AnyModel& m);

KernelSsp kernel_of(const AnyModel& m);

Json to_json(const ValueFunction& v);
ValueFunction value_function_from_json(const Json& j);
ValueFunction load_value_function(const std::filesystem::path& path);

Json to_json(const StationaryPolicy& pi, const std::string& hash);
StationaryPolicy policy_from_json(const Json& j, const std::string& expected_hash = {});
StationaryPolicy load_policy(const std::filesystem::path& path, const std::string& expected_hash = {});

Json to_json(const ValidationReport& r);
Json to_json(const Check& c);
Json to_json(const CertificateReport& r, const std::string& hash);
Json to_json(const MinTimeReport& r, const std::string& hash);
Json to_json(const EstimateReport& r);

Json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Fixed 12-significant-digit formatting used in every table.
std::string format_number(double x);

}  // namespace ssp::io
