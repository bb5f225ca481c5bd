#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "parbandit/config.hpp"
#include "parbandit/environments.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/policy.hpp"

namespace parbandit {

/// Raised when an episode aborts; carries the round at which it happened.
class EpisodeFailure : public Error {
 public:
  EpisodeFailure(std::size_t round, const std::string& what)
      : Error("round " + std::to_string(round) + ": " + what), round_(round) {}
  std::size_t round() const { return round_; }

 private:
  std::size_t round_;
};

/// Streams feeding one episode. Environments draw states and noise from
/// their own streams so that policies evaluated on the same seed are paired.
struct EpisodeStreams {
  RngStream states;
  RngStream noise;
  RngStream policy;

  /// Streams for repetition seed `seed`; the policy stream is keyed by name.
  static EpisodeStreams make(std::uint64_t seed, const std::string& policy_name);
};

struct EpisodeResult {
  std::size_t agents = 0;
  std::size_t rounds = 0;
  /// Per round and agent, index t * agents + i. Empty unless details were kept.
  std::vector<std::size_t> actions;
  std::vector<double> rewards;
  std::vector<double> regret;
  /// Aggregated expected regret after rounds 1..T.
  std::vector<double> cumulative;

  double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Round loop: states, select_batch, rewards, regret, observe_batch. The
/// horizon is capped at env.horizon() for replayed data. Policy or model
/// errors are rethrown as EpisodeFailure.
EpisodeResult run_episode(Policy& policy, const Environment& env, std::size_t horizon, EpisodeStreams& streams,
                          bool keep_details = true);

/// Builds a policy for `env`. Defaults for unset knobs:
///   linear environments: lambda 0.01, R = sqrt(noise variance), S = sqrt(2),
///     delta 0.05, Thompson scale v = R, Thompson model linear;
///   logistic/replay: lambda 1, R 1, S 1, delta 0.05, Thompson model hierarchical.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Environment& env);

/// Ground truth for repetition seed `seed` (theta* or surrogate resampled).
std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec, std::size_t agents, std::uint64_t seed);

/// Seed of repetition k.
inline std::uint64_t repetition_seed(std::uint64_t base, std::size_t k) { return base ^ static_cast<std::uint64_t>(k); }

struct RepetitionSummary {
  std::string policy;
  /// Final aggregated regret per repetition; NaN where the repetition failed.
  std::vector<double> finals;
  /// Cumulative regret curve per repetition; empty where it failed.
  std::vector<std::vector<double>> curves;
  std::vector<std::string> errors;
  std::size_t failures = 0;
  /// Over successful repetitions. Sample std (n - 1), stderr = std / sqrt(n).
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;

  void summarize();
};

struct SweepPoint {
  double value = 0.0;
  std::vector<RepetitionSummary> policies;

  const RepetitionSummary& policy(const std::string& name) const;
};

struct SweepResult {
  /// "none" for a single configuration.
  std::string variable = "none";
  std::vector<SweepPoint> points;
};

/// Per-policy summaries for cfg; repetition k runs on seed cfg.seed ^ k and
/// every policy sees the same environment and state/noise streams.
std::vector<RepetitionSummary> run_repetitions(const ExperimentConfig& cfg);
SweepResult simulate(const ExperimentConfig& cfg);
SweepResult sweep_variance(const ExperimentConfig& cfg, const std::vector<double>& variances);
SweepResult sweep_agents(const ExperimentConfig& cfg, const std::vector<std::size_t>& agents);
/// Surrogate replay of all configured policies; one point with value 0.
SweepResult replay_benchmark(const ExperimentConfig& cfg);

struct PairedDifference {
  double mean = 0.0;
  double stderr_mean = 0.0;
  std::size_t count = 0;
};

/// Statistics of a.finals[k] - b.finals[k] over repetitions where both succeeded.
PairedDifference paired_difference(const RepetitionSummary& a, const RepetitionSummary& b);

/// Runs fn(0..count) on `workers` threads (0: hardware concurrency).
/// Exceptions from fn are rethrown after all workers finish.
void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace parbandit
