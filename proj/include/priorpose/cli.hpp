#pragma once

#include "priorpose/fusion.hpp"
#include "priorpose/synthbench.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace priorpose {

inline constexpr const char *kToolVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNoHypothesis = 3;

/// "oracle:rot_deg,dir_deg,scale_rel" or a pose JSON path.
PriorProvider parse_prior_spec(const std::string &spec);
/// "fixed:w_r,w_t", "logistic:midpoint,steepness" or a weights JSON path.
WeightProvider parse_weights_spec(const std::string &spec);
std::string weights_spec(const WeightProvider &w);
std::string oracle_spec(const SyntheticOracle &o);

/// Bench configuration. Keys mirror the command-line flags; missing keys keep
/// their defaults. A run manifest is accepted too (its "config" member is used).
SweepConfig sweep_config_from_json(const nlohmann::json &j);
nlohmann::json sweep_config_to_json(const SweepConfig &cfg);

/// Entry point shared by the executable and the tests.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace priorpose
