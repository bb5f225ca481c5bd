#pragma once

#include <cstdint>
#include <vector>

#include "parbandit/environments.hpp"
#include "parbandit/logistic_model.hpp"
#include "parbandit/telemetry.hpp"

namespace parbandit {

struct SurrogateOptions {
  PenaltyConfig penalty;
  FitOptions fit;
  /// Leading share of hours used to fit the surrogates; the rest is replayed.
  double train_fraction = 0.7;
  /// Reward noise seen by policies during replay (regret is noise-free).
  RewardModel reward{20};

  void validate() const;
};

/// Offline evaluation environment: a hierarchical logistic model fitted once
/// on the training hours is frozen and treated as ground truth while the
/// evaluation hours are replayed in time order. Only hours where every cell
/// reported become rounds.
class SurrogateReplayEnv final : public Environment {
 public:
  const std::vector<double>& threshold_grid() const { return grid_; }
  const ContextEncoding& encoding() const { return encoding_; }
  const HierarchicalFit& fit() const { return fit_; }
  const Vector& surrogate_theta(std::size_t agent) const { return theta_.at(agent); }
  const std::vector<std::string>& cells() const { return cells_; }
  const std::vector<std::int64_t>& train_hours() const { return train_hours_; }
  const std::vector<std::int64_t>& eval_hours() const { return eval_hours_; }
  std::size_t rounds() const { return round_states_.size(); }

  std::size_t agents() const override { return theta_.size(); }
  const ActionSet& actions() const override { return actions_; }
  std::size_t state_dim() const override { return ContextEncoding::kStateDim; }
  std::optional<std::size_t> horizon() const override { return round_states_.size(); }

  /// Recorded states for an evaluation round; the rng is not used.
  std::vector<State> states(std::size_t round, RngStream& rng) const override;
  double expected_reward(std::size_t agent, const State& state, std::size_t action) const override;
  double draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const override;
  std::vector<std::size_t> logged_actions(std::size_t round) const override;

 private:
  friend SurrogateReplayEnv build_surrogate_env(const TelemetryTable&, const SurrogateOptions&);
  SurrogateReplayEnv() : actions_(std::vector<double>{0.0}) {}

  std::vector<std::string> cells_;
  std::vector<double> grid_;
  ActionSet actions_;
  ContextEncoding encoding_;
  HierarchicalFit fit_;
  std::vector<Vector> theta_;
  RewardModel reward_;
  std::vector<std::int64_t> train_hours_;
  std::vector<std::int64_t> eval_hours_;
  std::vector<std::vector<State>> round_states_;
  std::vector<std::vector<std::size_t>> round_logged_;
};

/// Standardises features and thresholds on the training hours, fits the
/// hierarchical model there and freezes theta + local_theta[i] per cell.
/// Throws DataError on a grid with fewer than two thresholds or an empty
/// split; fit failures propagate.
SurrogateReplayEnv build_surrogate_env(const TelemetryTable& table, const SurrogateOptions& opts = {});

}  // namespace parbandit
