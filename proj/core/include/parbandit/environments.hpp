#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "parbandit/rng.hpp"
#include "parbandit/types.hpp"

namespace parbandit {

/// Ground truth for an episode. Implementations are immutable after
/// construction; all randomness comes from the streams passed in.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t agents() const = 0;
  virtual const ActionSet& actions() const = 0;
  virtual std::size_t state_dim() const = 0;
  std::size_t context_dim() const { return state_dim() + actions().feature_dim(); }
  /// Fixed number of rounds for replayed data; nullopt for synthetic streams.
  virtual std::optional<std::size_t> horizon() const { return std::nullopt; }

  virtual std::vector<State> states(std::size_t round, RngStream& rng) const = 0;
  virtual double expected_reward(std::size_t agent, const State& state, std::size_t action) const = 0;
  /// Consumes the same number of draws from `noise` whatever the action, so
  /// policies run on identical noise streams stay paired.
  virtual double draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const = 0;
  /// Actions of the data-collection strategy; empty when there is no log.
  virtual std::vector<std::size_t> logged_actions(std::size_t /*round*/) const { return {}; }

  /// max_a f(s, a) - f(s, chosen) under the true parameters; >= 0.
  virtual double instantaneous_regret(std::size_t agent, const State& state, std::size_t action) const;
  std::size_t optimal_action(std::size_t agent, const State& state) const;
};

/// theta_s ~ N(0, I) rescaled to unit norm, with a trailing action coefficient 1.
Vector sample_theta_star(std::size_t state_dim, RngStream& rng);

/// Linear toy bandit: s ~ N(0, sigma_s^2 I), r = x^T theta* + eps,
/// eps ~ N(0, R^2), x = (s, a), a in {0, ..., K - 1}.
class LinearToyEnv final : public Environment {
 public:
  struct Config {
    std::size_t state_dim = 10;
    double state_variance = 0.01;
    double noise_variance = 2.5;
    std::size_t agents = 20;
    std::size_t action_count = 5;
  };

  LinearToyEnv(Config cfg, Vector theta_star);
  static LinearToyEnv sample(const Config& cfg, RngStream& rng);

  const Config& config() const { return cfg_; }
  const Vector& theta_star() const { return theta_star_; }

  std::vector<State> sample_states(std::size_t n, RngStream& rng) const;
  double mean_reward(const ContextVector& x) const;
  double reward_draw(const ContextVector& x, RngStream& noise) const;

  std::size_t agents() const override { return cfg_.agents; }
  const ActionSet& actions() const override { return actions_; }
  std::size_t state_dim() const override { return cfg_.state_dim; }
  std::vector<State> states(std::size_t round, RngStream& rng) const override;
  double expected_reward(std::size_t agent, const State& state, std::size_t action) const override;
  double draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const override;
  /// The state term cancels, so regret is computed from the action part alone.
  double instantaneous_regret(std::size_t agent, const State& state, std::size_t action) const override;

 private:
  Config cfg_;
  Vector theta_star_;
  ActionSet actions_;
};

/// How a success probability p becomes an observed reward.
struct RewardModel {
  /// 0 means a single Bernoulli draw; m > 0 means Binomial(m, p) / m.
  int trials = 0;

  double draw(double p, RngStream& rng) const;
};

/// Logistic bandit with per-agent parameters theta_i; states are an optional
/// leading 1 followed by N(0, sigma^2) coordinates.
class LogisticEnv final : public Environment {
 public:
  struct Config {
    std::size_t state_dim = 4;
    double state_variance = 1.0;
    bool intercept = true;
    std::vector<double> actions{-1.0, -0.5, 0.0, 0.5, 1.0};
    RewardModel reward;
  };

  LogisticEnv(Config cfg, std::vector<Vector> agent_theta);
  /// theta_i = global + local_i with local_i ~ N(0, local_scale^2 I).
  static LogisticEnv sample(const Config& cfg, std::size_t agents, const Vector& global_theta, double local_scale,
                            RngStream& rng);

  const Vector& agent_theta(std::size_t agent) const { return agent_theta_.at(agent); }
  double reward_draw(std::size_t agent, const ContextVector& x, RngStream& noise) const;

  std::size_t agents() const override { return agent_theta_.size(); }
  const ActionSet& actions() const override { return actions_; }
  std::size_t state_dim() const override { return cfg_.state_dim; }
  std::vector<State> states(std::size_t round, RngStream& rng) const override;
  double expected_reward(std::size_t agent, const State& state, std::size_t action) const override;
  double draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const override;

 private:
  Config cfg_;
  ActionSet actions_;
  std::vector<Vector> agent_theta_;
};

}  // namespace parbandit
