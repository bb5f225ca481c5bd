#include "parbandit/thompson_policy.hpp"

#include "parbandit/errors.hpp"

namespace parbandit {

LinearThompsonModel::LinearThompsonModel(std::size_t dim, double lambda, double scale)
    : posterior_(dim, lambda), scale_(scale) {
  if (!(scale >= 0.0)) throw InvalidInput("Thompson scale v must be >= 0");
}

const PosteriorFactor& LinearThompsonModel::factor() const {
  if (!factor_) factor_.emplace(posterior_);
  return *factor_;
}

std::vector<Vector> LinearThompsonModel::sample_agent_parameters(std::size_t agents, std::size_t draws,
                                                                 RngStream& rng) const {
  std::vector<Vector> samples;
  samples.reserve(draws);
  for (std::size_t k = 0; k < draws; ++k) samples.push_back(factor().sample(scale_, rng));
  std::vector<Vector> out(agents);
  for (std::size_t i = 0; i < agents; ++i) out[i] = samples[i % draws];
  return out;
}

Vector LinearThompsonModel::mean_parameter(std::size_t) const { return factor().theta(); }

double LinearThompsonModel::expected_reward(const ContextVector& x, const Vector& theta) const {
  return x.values().dot(theta);
}

void LinearThompsonModel::absorb(std::span<const BatchObservation> batch) {
  for (const auto& obs : batch) posterior_.update(obs.context, obs.reward);
  factor_.reset();
}

LogisticThompsonModel::LogisticThompsonModel(std::size_t dim, PenaltyConfig pen, FitOptions opts)
    : pen_(pen), opts_(opts), history_(dim) {
  pen_.validate(false);
  fit_ = fit_penalized_logistic(history_, pen_, opts_);
}

std::vector<Vector> LogisticThompsonModel::sample_agent_parameters(std::size_t agents, std::size_t draws,
                                                                   RngStream& rng) const {
  std::vector<Vector> samples;
  samples.reserve(draws);
  for (std::size_t k = 0; k < draws; ++k) samples.push_back(sample_diag_gaussian(fit_.theta, fit_.diag_precision, rng));
  std::vector<Vector> out(agents);
  for (std::size_t i = 0; i < agents; ++i) out[i] = samples[i % draws];
  return out;
}

double LogisticThompsonModel::expected_reward(const ContextVector& x, const Vector& theta) const {
  return expected_reward_logistic(x, theta);
}

void LogisticThompsonModel::absorb(std::span<const BatchObservation> batch) {
  for (const auto& obs : batch) history_.add(obs.context, obs.reward);
  fit_ = fit_penalized_logistic(history_, pen_, opts_, fit_.theta);
}

HierarchicalThompsonModel::HierarchicalThompsonModel(std::size_t dim, std::size_t agents, PenaltyConfig pen,
                                                     FitOptions opts)
    : dim_(dim), pen_(pen), opts_(opts), history_(agents, LogisticDataset(dim)) {
  if (agents == 0) throw InvalidInput("hierarchical model needs at least one agent");
  pen_.validate(true);
  fit_ = fit_hierarchical(history_, pen_, opts_);
}

std::vector<Vector> HierarchicalThompsonModel::sample_agent_parameters(std::size_t agents, std::size_t draws,
                                                                       RngStream& rng) const {
  if (agents != fit_.agents()) throw InvalidInput("agent count does not match the hierarchical model");
  std::vector<Vector> globals;
  globals.reserve(draws);
  for (std::size_t k = 0; k < draws; ++k) globals.push_back(sample_diag_gaussian(fit_.theta, fit_.diag_precision, rng));
  std::vector<Vector> out(agents);
  for (std::size_t i = 0; i < agents; ++i) {
    out[i] = globals[i % draws] + sample_diag_gaussian(fit_.local_theta[i], fit_.local_precision[i], rng);
  }
  return out;
}

double HierarchicalThompsonModel::expected_reward(const ContextVector& x, const Vector& theta) const {
  return expected_reward_logistic(x, theta);
}

void HierarchicalThompsonModel::absorb(std::span<const BatchObservation> batch) {
  for (const auto& obs : batch) {
    if (obs.agent >= history_.size()) throw InvalidInput("observation for unknown agent");
    history_[obs.agent].add(obs.context, obs.reward);
  }
  fit_ = fit_hierarchical(history_, pen_, opts_, &fit_);
}

ThompsonPolicy::ThompsonPolicy(ThompsonMode mode, std::unique_ptr<ThompsonModel> model)
    : mode_(mode), model_(std::move(model)) {
  if (!model_) throw InvalidInput("Thompson policy needs a posterior model");
}

std::string ThompsonPolicy::name() const {
  return mode_ == ThompsonMode::kNaive ? "thompson_naive" : "thompson_multi";
}

std::vector<std::size_t> ThompsonPolicy::do_select(const RoundInput& in, RngStream& rng) {
  const std::size_t agents = in.states.size();
  const std::size_t draws = mode_ == ThompsonMode::kNaive ? 1 : agents;
  const std::vector<Vector> params = model_->sample_agent_parameters(agents, draws, rng);
  const ActionSet& actions = *in.actions;
  std::vector<std::size_t> chosen(agents);
  std::vector<double> scores(actions.size());
  for (std::size_t i = 0; i < agents; ++i) {
    for (std::size_t a = 0; a < actions.size(); ++a) {
      const ContextVector x = make_context(in.states[i], actions, a);
      if (x.dim() != model_->dim()) throw InvalidInput("context dimension does not match the Thompson model");
      scores[a] = model_->score(x, params[i]);
    }
    chosen[i] = argmax_lowest(scores);
  }
  return chosen;
}

void ThompsonPolicy::do_observe(std::span<const BatchObservation> batch) { model_->absorb(batch); }

}  // namespace parbandit
