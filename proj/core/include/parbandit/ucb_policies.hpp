#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "parbandit/linear_model.hpp"
#include "parbandit/policy.hpp"

namespace parbandit {

/// OFUL extended to n agents: one shared ridge posterior, every agent picks
/// argmax_a x^T theta_hat + beta ||x||_{A^-1} with no intra-batch update.
class UcbParallelPolicy final : public Policy {
 public:
  struct Config {
    double lambda = 1.0;
    OfulConfig oful;
    /// Overrides the OFUL radius with a constant when set.
    std::optional<double> fixed_beta;
  };

  UcbParallelPolicy(std::size_t context_dim, Config cfg);

  std::string name() const override { return "ucb"; }
  const LinearPosterior& posterior() const { return model_; }
  LinearPosterior& posterior() { return model_; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation> batch) override;

 private:
  Config cfg_;
  LinearPosterior model_;
};

/// LinUCB for piled rewards: disjoint per-action models over the state.
/// Agents are served in ascending index order and each choice immediately
/// adds s s^T to the chosen action's design, so later agents in the batch see
/// a shrunken confidence width. Rewards update b and w after the batch.
class LinUcbPrPolicy final : public Policy {
 public:
  struct Config {
    double alpha = 1.0;
  };

  LinUcbPrPolicy(std::size_t state_dim, std::size_t action_count, Config cfg);

  std::string name() const override { return "linucb_pr"; }
  const Matrix& design(std::size_t action) const { return designs_.at(action); }
  const Vector& weights(std::size_t action) const { return weights_.at(action); }

  /// Default alpha = 1 + sqrt(log(2 / delta) / 2).
  static double default_alpha(double delta);

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation> batch) override;

 private:
  void refactor(std::size_t action);

  Config cfg_;
  std::vector<Matrix> designs_;
  std::vector<Vector> responses_;
  std::vector<Vector> weights_;
  std::vector<Eigen::LLT<Matrix>> factors_;
  std::vector<State> staged_states_;
};

/// Feeds logit-transformed rewards to an inner policy; used to run OFUL on
/// proportions.
class LogitTransformPolicy final : public Policy {
 public:
  LogitTransformPolicy(std::unique_ptr<Policy> inner, double eps = 1e-3);

  std::string name() const override { return inner_->name() + "_logit"; }
  const Policy& inner() const { return *inner_; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation> batch) override;

 private:
  std::unique_ptr<Policy> inner_;
  double eps_;
};

}  // namespace parbandit
