#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "parbandit/linear_model.hpp"
#include "parbandit/logistic_model.hpp"
#include "parbandit/policy.hpp"

namespace parbandit {

/// Posterior over reward parameters that Thompson sampling draws from.
class ThompsonModel {
 public:
  virtual ~ThompsonModel() = default;

  virtual std::size_t dim() const = 0;
  /// Per-agent parameters built from `draws` independent posterior samples;
  /// agent i uses sample i % draws. draws = 1 is naive Thompson, draws = agents
  /// is multisampling.
  virtual std::vector<Vector> sample_agent_parameters(std::size_t agents, std::size_t draws,
                                                      RngStream& rng) const = 0;
  /// Posterior mean parameter for an agent.
  virtual Vector mean_parameter(std::size_t agent) const = 0;
  virtual double expected_reward(const ContextVector& x, const Vector& theta) const = 0;
  /// Any strictly increasing function of expected_reward; used for argmax.
  virtual double score(const ContextVector& x, const Vector& theta) const { return expected_reward(x, theta); }
  virtual void absorb(std::span<const BatchObservation> batch) = 0;
};

/// Gaussian N(theta_hat, v^2 A^-1) over a ridge posterior.
class LinearThompsonModel final : public ThompsonModel {
 public:
  LinearThompsonModel(std::size_t dim, double lambda, double scale);

  std::size_t dim() const override { return posterior_.dim(); }
  std::vector<Vector> sample_agent_parameters(std::size_t agents, std::size_t draws,
                                              RngStream& rng) const override;
  Vector mean_parameter(std::size_t) const override;
  double expected_reward(const ContextVector& x, const Vector& theta) const override;
  void absorb(std::span<const BatchObservation> batch) override;

  const LinearPosterior& posterior() const { return posterior_; }
  LinearPosterior& posterior() {
    factor_.reset();
    return posterior_;
  }
  double scale() const { return scale_; }

 private:
  const PosteriorFactor& factor() const;

  LinearPosterior posterior_;
  double scale_;
  mutable std::optional<PosteriorFactor> factor_;
};

/// One logistic parameter shared by all agents; diagonal Laplace posterior
/// refit on the full history after every batch, warm-started.
class LogisticThompsonModel final : public ThompsonModel {
 public:
  LogisticThompsonModel(std::size_t dim, PenaltyConfig pen, FitOptions opts = {});

  std::size_t dim() const override { return history_.dim(); }
  std::vector<Vector> sample_agent_parameters(std::size_t agents, std::size_t draws,
                                              RngStream& rng) const override;
  Vector mean_parameter(std::size_t) const override { return fit_.theta; }
  double expected_reward(const ContextVector& x, const Vector& theta) const override;
  double score(const ContextVector& x, const Vector& theta) const override { return x.values().dot(theta); }
  void absorb(std::span<const BatchObservation> batch) override;

  const LogisticFit& fit() const { return fit_; }
  const LogisticDataset& history() const { return history_; }

 private:
  PenaltyConfig pen_;
  FitOptions opts_;
  LogisticDataset history_;
  LogisticFit fit_;
};

/// Global + per-agent logistic parameters with block-diagonal Laplace
/// posterior. Local offsets are drawn once per agent; the global part is drawn
/// `draws` times.
class HierarchicalThompsonModel final : public ThompsonModel {
 public:
  HierarchicalThompsonModel(std::size_t dim, std::size_t agents, PenaltyConfig pen, FitOptions opts = {});

  std::size_t dim() const override { return dim_; }
  std::vector<Vector> sample_agent_parameters(std::size_t agents, std::size_t draws,
                                              RngStream& rng) const override;
  Vector mean_parameter(std::size_t agent) const override { return fit_.agent_theta(agent); }
  double expected_reward(const ContextVector& x, const Vector& theta) const override;
  double score(const ContextVector& x, const Vector& theta) const override { return x.values().dot(theta); }
  void absorb(std::span<const BatchObservation> batch) override;

  const HierarchicalFit& fit() const { return fit_; }

 private:
  std::size_t dim_;
  PenaltyConfig pen_;
  FitOptions opts_;
  std::vector<LogisticDataset> history_;
  HierarchicalFit fit_;
};

enum class ThompsonMode { kNaive, kMultisampling };

/// Thompson sampling for parallel bandits. Naive draws one parameter per
/// round and shares it across agents; multisampling draws one per agent.
class ThompsonPolicy final : public Policy {
 public:
  ThompsonPolicy(ThompsonMode mode, std::unique_ptr<ThompsonModel> model);

  std::string name() const override;
  ThompsonMode mode() const { return mode_; }
  const ThompsonModel& model() const { return *model_; }
  ThompsonModel& model() { return *model_; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation> batch) override;

 private:
  ThompsonMode mode_;
  std::unique_ptr<ThompsonModel> model_;
};

}  // namespace parbandit
