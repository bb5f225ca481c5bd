#include "parbandit/ucb_policies.hpp"

#include <cmath>

#include "parbandit/errors.hpp"
#include "parbandit/logistic_model.hpp"

namespace parbandit {

UcbParallelPolicy::UcbParallelPolicy(std::size_t context_dim, Config cfg)
    : cfg_(cfg), model_(context_dim, cfg.lambda) {
  cfg_.oful.validate();
  if (cfg_.fixed_beta && !(*cfg_.fixed_beta >= 0.0)) throw InvalidInput("fixed beta must be >= 0");
}

std::vector<std::size_t> UcbParallelPolicy::do_select(const RoundInput& in, RngStream&) {
  const PosteriorFactor factor(model_);
  const double beta = cfg_.fixed_beta ? *cfg_.fixed_beta : factor.radius(cfg_.oful);
  const ActionSet& actions = *in.actions;
  std::vector<std::size_t> chosen(in.states.size());
  std::vector<double> scores(actions.size());
  for (std::size_t i = 0; i < in.states.size(); ++i) {
    for (std::size_t a = 0; a < actions.size(); ++a) {
      const ContextVector x = make_context(in.states[i], actions, a);
      if (x.dim() != model_.dim()) throw InvalidInput("context dimension does not match the UCB model");
      scores[a] = factor.ucb(x.values(), beta);
    }
    chosen[i] = argmax_lowest(scores);
  }
  return chosen;
}

void UcbParallelPolicy::do_observe(std::span<const BatchObservation> batch) {
  for (const auto& obs : batch) model_.update(obs.context, obs.reward);
}

LinUcbPrPolicy::LinUcbPrPolicy(std::size_t state_dim, std::size_t action_count, Config cfg) : cfg_(cfg) {
  if (state_dim == 0) throw InvalidInput("LinUCB-PR needs a non-empty state");
  if (action_count == 0) throw InvalidInput("LinUCB-PR needs at least one action");
  if (!(cfg.alpha >= 0.0)) throw InvalidInput("LinUCB-PR alpha must be >= 0");
  const auto d = static_cast<Eigen::Index>(state_dim);
  designs_.assign(action_count, Matrix::Identity(d, d));
  responses_.assign(action_count, Vector::Zero(d));
  weights_.assign(action_count, Vector::Zero(d));
  factors_.resize(action_count);
  for (std::size_t a = 0; a < action_count; ++a) refactor(a);
}

double LinUcbPrPolicy::default_alpha(double delta) { return 1.0 + std::sqrt(std::log(2.0 / delta) / 2.0); }

void LinUcbPrPolicy::refactor(std::size_t action) {
  factors_[action].compute(designs_[action]);
  if (factors_[action].info() != Eigen::Success) throw IllConditioned("LinUCB-PR design is not positive definite");
}

std::vector<std::size_t> LinUcbPrPolicy::do_select(const RoundInput& in, RngStream&) {
  if (in.actions->size() != designs_.size()) throw InvalidInput("action set size changed");
  std::vector<std::size_t> chosen(in.states.size());
  std::vector<double> scores(designs_.size());
  staged_states_.assign(in.states.begin(), in.states.end());
  for (std::size_t i = 0; i < in.states.size(); ++i) {
    const Vector& s = in.states[i].values();
    if (s.size() != designs_.front().rows()) throw InvalidInput("state dimension does not match LinUCB-PR");
    for (std::size_t a = 0; a < designs_.size(); ++a) {
      const double width = factors_[a].matrixL().solve(s).norm();
      scores[a] = weights_[a].dot(s) + cfg_.alpha * width;
    }
    const std::size_t best = argmax_lowest(scores);
    chosen[i] = best;
    designs_[best].selfadjointView<Eigen::Lower>().rankUpdate(s);
    designs_[best].triangularView<Eigen::StrictlyUpper>() = designs_[best].transpose();
    refactor(best);
  }
  return chosen;
}

void LinUcbPrPolicy::do_observe(std::span<const BatchObservation> batch) {
  std::vector<bool> touched(designs_.size(), false);
  for (const auto& obs : batch) {
    if (!std::isfinite(obs.reward)) throw InvalidInput("reward must be finite");
    responses_[obs.action] += obs.reward * staged_states_[obs.agent].values();
    touched[obs.action] = true;
  }
  for (std::size_t a = 0; a < designs_.size(); ++a) {
    if (touched[a]) weights_[a] = factors_[a].solve(responses_[a]);
  }
}

LogitTransformPolicy::LogitTransformPolicy(std::unique_ptr<Policy> inner, double eps)
    : inner_(std::move(inner)), eps_(eps) {
  if (!inner_) throw InvalidInput("logit transform needs an inner policy");
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidInput("logit clamp eps must lie in (0, 0.5)");
}

std::vector<std::size_t> LogitTransformPolicy::do_select(const RoundInput& in, RngStream& rng) {
  return inner_->select_batch(in, rng);
}

void LogitTransformPolicy::do_observe(std::span<const BatchObservation> batch) {
  std::vector<BatchObservation> transformed(batch.begin(), batch.end());
  for (auto& obs : transformed) obs.reward = logit_transform(obs.reward, eps_);
  inner_->observe_batch(transformed);
}

}  // namespace parbandit
