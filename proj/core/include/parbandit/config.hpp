#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "parbandit/environments.hpp"
#include "parbandit/logistic_model.hpp"
#include "parbandit/surrogate.hpp"
#include "parbandit/telemetry.hpp"

namespace parbandit {

/// One policy to evaluate. Unset knobs take environment-dependent defaults
/// when the policy is built (see make_policy).
struct PolicySpec {
  /// ucb | ucb_logit | linucb_pr | thompson_naive | thompson_multi |
  /// logging | random | fixed | oracle
  std::string kind;
  /// Name used in outputs and to derive the policy's random stream; defaults to kind.
  std::string label;

  std::optional<double> lambda;
  std::optional<double> delta;
  std::optional<double> noise_scale;
  std::optional<double> norm_bound;
  /// Constant UCB radius instead of the OFUL radius.
  std::optional<double> beta;
  /// LinUCB-PR width multiplier.
  std::optional<double> alpha;
  /// Linear Thompson posterior scale v.
  std::optional<double> scale;
  /// Thompson model: linear | logistic | hierarchical.
  std::optional<std::string> model;
  PenaltyConfig penalty;
  FitOptions fit;
  double logit_eps = 1e-3;
  /// Action index for `fixed`.
  std::size_t action = 0;

  std::string name() const { return label.empty() ? kind : label; }
};

enum class EnvironmentKind { kLinearToy, kLogistic, kReplay };

struct LogisticEnvSpec {
  LogisticEnv::Config config;
  /// Global parameter; per-agent offsets are N(0, local_scale^2 I). Length
  /// state_dim + 1. Empty means a fresh draw per repetition.
  std::vector<double> global_theta;
  double local_scale = 0.5;
};

struct ReplaySpec {
  /// Telemetry CSV. When unset, synthetic telemetry is generated per repetition.
  std::optional<std::filesystem::path> telemetry;
  SyntheticTelemetryConfig synthetic;
  SurrogateOptions surrogate;
};

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::kLinearToy;
  LinearToyEnv::Config linear;
  LogisticEnvSpec logistic;
  ReplaySpec replay;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::vector<PolicySpec> policies;
  std::size_t agents = 20;
  std::size_t horizon = 500;
  std::size_t repetitions = 100;
  std::uint64_t seed = 0;
  std::filesystem::path output = "results.csv";
  /// 0 means one worker per hardware thread.
  std::size_t workers = 1;
  std::size_t stride = 1;
  std::vector<double> variance_grid{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
  std::vector<std::size_t> agent_grid{1, 5, 10, 20, 50, 100};

  void validate() const;
};

/// Defaults when a config lists no policies:
///   linear_toy, logistic: ucb, thompson_naive, thompson_multi;
///   replay: thompson_multi, ucb_logit, logging.
std::vector<PolicySpec> default_policies(EnvironmentKind kind);
/// Defaults for an environment kind with default policies; replay runs 20 repetitions.
ExperimentConfig default_config(EnvironmentKind kind);

/// Parses a JSON config. Keys left out keep the values of default_config;
/// unknown keys are rejected so typos surface early. Relative telemetry paths
/// resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Canonical JSON of the fully resolved config (stable key order).
std::string experiment_config_to_json(const ExperimentConfig& cfg);

std::string to_string(EnvironmentKind kind);

}  // namespace parbandit
