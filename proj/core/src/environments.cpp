#include "parbandit/environments.hpp"

#include <cmath>
#include <string>

#include "parbandit/errors.hpp"
#include "parbandit/logistic_model.hpp"

namespace parbandit {

double Environment::instantaneous_regret(std::size_t agent, const State& state, std::size_t action) const {
  if (action >= actions().size()) throw InvalidInput("action outside the action set");
  double best = expected_reward(agent, state, 0);
  for (std::size_t a = 1; a < actions().size(); ++a) best = std::max(best, expected_reward(agent, state, a));
  return std::max(best - expected_reward(agent, state, action), 0.0);
}

std::size_t Environment::optimal_action(std::size_t agent, const State& state) const {
  std::vector<double> values(actions().size());
  for (std::size_t a = 0; a < values.size(); ++a) values[a] = expected_reward(agent, state, a);
  return argmax_lowest(values);
}

Vector sample_theta_star(std::size_t state_dim, RngStream& rng) {
  if (state_dim == 0) throw InvalidInput("state dimension must be >= 1");
  Vector direction;
  double norm = 0.0;
  do {
    direction = rng.normal_vector(state_dim);
    norm = direction.norm();
  } while (norm == 0.0);
  Vector theta(static_cast<Eigen::Index>(state_dim) + 1);
  theta << direction / norm, 1.0;
  return theta;
}

LinearToyEnv::LinearToyEnv(Config cfg, Vector theta_star)
    : cfg_(cfg), theta_star_(std::move(theta_star)), actions_(ActionSet::integer_range(cfg.action_count)) {
  if (cfg_.agents == 0) throw InvalidInput("need at least one agent");
  if (!(cfg_.state_variance > 0.0)) throw InvalidInput("state variance must be > 0");
  if (!(cfg_.noise_variance >= 0.0)) throw InvalidInput("noise variance must be >= 0");
  if (static_cast<std::size_t>(theta_star_.size()) != cfg_.state_dim + 1) {
    throw InvalidInput("theta* must have length state_dim + 1");
  }
  if (std::abs(theta_star_.head(theta_star_.size() - 1).norm() - 1.0) > 1e-12) {
    throw InvalidInput("state part of theta* must have unit norm");
  }
  if (theta_star_(theta_star_.size() - 1) != 1.0) throw InvalidInput("action coefficient of theta* must be 1");
}

LinearToyEnv LinearToyEnv::sample(const Config& cfg, RngStream& rng) {
  return LinearToyEnv(cfg, sample_theta_star(cfg.state_dim, rng));
}

std::vector<State> LinearToyEnv::sample_states(std::size_t n, RngStream& rng) const {
  const double sd = std::sqrt(cfg_.state_variance);
  std::vector<State> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(sd * rng.normal_vector(cfg_.state_dim));
  return out;
}

double LinearToyEnv::mean_reward(const ContextVector& x) const {
  if (static_cast<Eigen::Index>(x.dim()) != theta_star_.size()) throw InvalidInput("context dimension mismatch");
  return x.values().dot(theta_star_);
}

double LinearToyEnv::reward_draw(const ContextVector& x, RngStream& noise) const {
  return mean_reward(x) + std::sqrt(cfg_.noise_variance) * noise.normal();
}

std::vector<State> LinearToyEnv::states(std::size_t, RngStream& rng) const { return sample_states(cfg_.agents, rng); }

double LinearToyEnv::expected_reward(std::size_t, const State& state, std::size_t action) const {
  const auto ds = static_cast<Eigen::Index>(cfg_.state_dim);
  return state.values().dot(theta_star_.head(ds)) + actions_.value(action) * theta_star_(ds);
}

double LinearToyEnv::draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const {
  return expected_reward(agent, state, action) + std::sqrt(cfg_.noise_variance) * noise.normal();
}

double LinearToyEnv::instantaneous_regret(std::size_t, const State& state, std::size_t action) const {
  if (action >= actions_.size()) throw InvalidInput("action outside the action set");
  if (state.dim() != cfg_.state_dim) throw InvalidInput("state dimension mismatch");
  const double coef = theta_star_(static_cast<Eigen::Index>(cfg_.state_dim));
  double best = 0.0;
  for (std::size_t a = 0; a < actions_.size(); ++a) {
    best = std::max(best, (actions_.value(a) - actions_.value(action)) * coef);
  }
  return best;
}

double RewardModel::draw(double p, RngStream& rng) const {
  if (trials <= 0) return rng.uniform() < p ? 1.0 : 0.0;
  int successes = 0;
  for (int k = 0; k < trials; ++k) successes += rng.uniform() < p ? 1 : 0;
  return static_cast<double>(successes) / static_cast<double>(trials);
}

LogisticEnv::LogisticEnv(Config cfg, std::vector<Vector> agent_theta)
    : cfg_(std::move(cfg)), actions_(cfg_.actions), agent_theta_(std::move(agent_theta)) {
  if (agent_theta_.empty()) throw InvalidInput("need at least one agent");
  if (cfg_.intercept && cfg_.state_dim == 0) throw InvalidInput("intercept needs state_dim >= 1");
  if (!(cfg_.state_variance >= 0.0)) throw InvalidInput("state variance must be >= 0");
  for (const auto& theta : agent_theta_) {
    if (static_cast<std::size_t>(theta.size()) != context_dim()) throw InvalidInput("agent theta has wrong length");
    if (!theta.allFinite()) throw InvalidInput("agent theta is not finite");
  }
}

LogisticEnv LogisticEnv::sample(const Config& cfg, std::size_t agents, const Vector& global_theta,
                                double local_scale, RngStream& rng) {
  std::vector<Vector> thetas;
  thetas.reserve(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    thetas.push_back(global_theta + local_scale * rng.normal_vector(static_cast<std::size_t>(global_theta.size())));
  }
  return LogisticEnv(cfg, std::move(thetas));
}

double LogisticEnv::reward_draw(std::size_t agent, const ContextVector& x, RngStream& noise) const {
  return cfg_.reward.draw(expected_reward_logistic(x, agent_theta_.at(agent)), noise);
}

std::vector<State> LogisticEnv::states(std::size_t, RngStream& rng) const {
  const double sd = std::sqrt(cfg_.state_variance);
  std::vector<State> out;
  out.reserve(agents());
  for (std::size_t i = 0; i < agents(); ++i) {
    Vector s(static_cast<Eigen::Index>(cfg_.state_dim));
    Eigen::Index k = 0;
    if (cfg_.intercept) s(k++) = 1.0;
    for (; k < s.size(); ++k) s(k) = sd * rng.normal();
    out.emplace_back(std::move(s));
  }
  return out;
}

double LogisticEnv::expected_reward(std::size_t agent, const State& state, std::size_t action) const {
  return expected_reward_logistic(make_context(state, actions_, action), agent_theta_.at(agent));
}

double LogisticEnv::draw_reward(std::size_t agent, const State& state, std::size_t action, RngStream& noise) const {
  return reward_draw(agent, make_context(state, actions_, action), noise);
}

}  // namespace parbandit
