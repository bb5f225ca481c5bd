#include "parbandit/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "parbandit/errors.hpp"

namespace parbandit {

void SurrogateOptions::validate() const {
  penalty.validate(true);
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("train_fraction must lie in (0, 1)");
  if (reward.trials < 0) throw InvalidInput("reward trials must be >= 0");
}

std::vector<State> SurrogateReplayEnv::states(std::size_t round, RngStream&) const {
  if (round >= round_states_.size()) throw DataError("replay round " + std::to_string(round) + " beyond the log");
  return round_states_[round];
}

double SurrogateReplayEnv::expected_reward(std::size_t agent, const State& state, std::size_t action) const {
  return expected_reward_logistic(make_context(state, actions_, action), theta_.at(agent));
}

double SurrogateReplayEnv::draw_reward(std::size_t agent, const State& state, std::size_t action,
                                       RngStream& noise) const {
  return reward_.draw(expected_reward(agent, state, action), noise);
}

std::vector<std::size_t> SurrogateReplayEnv::logged_actions(std::size_t round) const {
  if (round >= round_logged_.size()) throw DataError("no logged actions for round " + std::to_string(round));
  return round_logged_[round];
}

SurrogateReplayEnv build_surrogate_env(const TelemetryTable& table, const SurrogateOptions& opts) {
  opts.validate();
  if (table.cell_count() == 0) throw DataError("telemetry has no cells");

  std::set<double> thresholds;
  for (std::size_t c = 0; c < table.cell_count(); ++c) {
    for (const auto& r : table.records(c)) thresholds.insert(r.a2_threshold);
  }
  if (thresholds.size() < 2) {
    throw DataError("degenerate action grid: telemetry contains " + std::to_string(thresholds.size()) +
                    " distinct threshold(s), need at least 2");
  }

  const auto hours = table.hours();
  const auto n_train = static_cast<std::size_t>(std::floor(opts.train_fraction * static_cast<double>(hours.size())));
  if (n_train == 0 || n_train >= hours.size()) {
    throw DataError("train/evaluation split of " + std::to_string(hours.size()) + " hours leaves an empty side");
  }

  SurrogateReplayEnv env;
  env.cells_ = table.cells();
  env.grid_.assign(thresholds.begin(), thresholds.end());
  env.reward_ = opts.reward;
  env.train_hours_.assign(hours.begin(), hours.begin() + static_cast<std::ptrdiff_t>(n_train));
  env.eval_hours_.assign(hours.begin() + static_cast<std::ptrdiff_t>(n_train), hours.end());
  const std::int64_t first_eval = env.eval_hours_.front();

  std::vector<TelemetryRecord> train;
  for (std::size_t c = 0; c < table.cell_count(); ++c) {
    for (const auto& r : table.records(c)) {
      if (r.hour < first_eval) train.push_back(r);
    }
  }
  if (train.size() < 2) throw DataError("training split has fewer than 2 records");

  // Scaling comes from the training hours only and is reused for replay.
  const auto scaling = fit_feature_scaling(train);
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    env.encoding_.feature_mean[k] = scaling.mean[k];
    env.encoding_.feature_scale[k] = scaling.scale[k];
  }
  double mean = 0.0;
  for (const auto& r : train) mean += r.a2_threshold;
  mean /= static_cast<double>(train.size());
  double ss = 0.0;
  for (const auto& r : train) ss += (r.a2_threshold - mean) * (r.a2_threshold - mean);
  const double sd = std::sqrt(ss / static_cast<double>(train.size()));
  if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
    env.encoding_.action_mean = mean;
    env.encoding_.action_scale = sd;
  }

  std::vector<double> encoded;
  for (double t : env.grid_) encoded.push_back(env.encoding_.action(t));
  env.actions_ = ActionSet(std::move(encoded));

  std::vector<LogisticDataset> data(table.cell_count(), LogisticDataset(ContextEncoding::kContextDim));
  for (std::size_t c = 0; c < table.cell_count(); ++c) {
    for (const auto& r : table.records(c)) {
      if (r.hour >= first_eval) break;
      data[c].add(env.encoding_.context(r.features, r.a2_threshold), r.reward);
    }
  }
  env.fit_ = fit_hierarchical(data, opts.penalty, opts.fit);
  for (std::size_t c = 0; c < table.cell_count(); ++c) env.theta_.push_back(env.fit_.agent_theta(c));

  for (auto h : env.eval_hours_) {
    std::vector<State> states;
    std::vector<std::size_t> logged;
    for (std::size_t c = 0; c < table.cell_count(); ++c) {
      const auto* r = table.find(c, h);
      if (r == nullptr) break;
      states.push_back(env.encoding_.state(r->features));
      const auto it = std::lower_bound(env.grid_.begin(), env.grid_.end(), r->a2_threshold);
      logged.push_back(static_cast<std::size_t>(it - env.grid_.begin()));
    }
    if (states.size() != table.cell_count()) continue;
    env.round_states_.push_back(std::move(states));
    env.round_logged_.push_back(std::move(logged));
  }
  if (env.round_states_.empty()) throw DataError("no evaluation hour has records for every cell");
  return env;
}

}  // namespace parbandit
