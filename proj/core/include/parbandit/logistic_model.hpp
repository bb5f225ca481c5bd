#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "parbandit/rng.hpp"
#include "parbandit/types.hpp"

namespace parbandit {

/// Elastic-net weights. The unprimed pair applies to the global (or only)
/// parameter, the `_local` pair to each per-agent offset of a hierarchical fit.
///   Omega(theta) = l1 |theta|_1 + l2/2 ||theta||^2
struct PenaltyConfig {
  double l1 = 0.0;
  double l2 = 1.0;
  double l1_local = 0.0;
  double l2_local = 1.0;

  void validate(bool hierarchical) const;
};

struct FitOptions {
  /// Infinity-norm bound on the minimum-norm subgradient.
  double tol = 1e-8;
  int max_iter = 100;
  /// When set, receives the objective value at every accepted iterate.
  std::vector<double>* objective_trace = nullptr;
};

/// Observations of (context, reward in [0, 1]) with a fixed context dimension.
/// Rows are stored contiguously so fits can map them as a matrix.
class LogisticDataset {
 public:
  explicit LogisticDataset(std::size_t dim);

  void add(const ContextVector& x, double reward);
  void add(const Vector& x, double reward);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rewards_.size(); }
  bool empty() const { return rewards_.empty(); }

  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMatrix> contexts() const;
  Eigen::Map<const Vector> rewards() const;

 private:
  std::size_t dim_;
  std::vector<double> rows_;
  std::vector<double> rewards_;
};

struct LogisticFit {
  Vector theta;
  /// Diagonal of the Laplace precision (Hessian of the penalised negative
  /// log-likelihood). Floored at kMinPrecision so it can always be inverted.
  Vector diag_precision;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
};

/// Global parameter plus per-agent offsets; agent i's parameter is
/// theta + local_theta[i].
struct HierarchicalFit {
  Vector theta;
  Vector diag_precision;
  std::vector<Vector> local_theta;
  std::vector<Vector> local_precision;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;

  std::size_t agents() const { return local_theta.size(); }
  Vector agent_theta(std::size_t agent) const { return theta + local_theta.at(agent); }
};

inline constexpr double kMinPrecision = 1e-10;

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);

/// sigma(x^T theta)
double expected_reward_logistic(const ContextVector& x, const Vector& theta);

/// log(c / (1 - c)) with c = clamp(r, eps, 1 - eps). r must lie in [0, 1].
double logit_transform(double reward, double eps = 1e-3);

/// Bernoulli cross-entropy sum_s [softplus(z_s) - r_s z_s] with z_s = x_s^T theta.
double logistic_nll(const LogisticDataset& data, const Vector& theta);
double penalized_logistic_objective(const LogisticDataset& data, const Vector& theta, const PenaltyConfig& pen);
double hierarchical_objective(std::span<const LogisticDataset> per_agent, const Vector& theta,
                              std::span<const Vector> local_theta, const PenaltyConfig& pen);

/// Proximal Newton on the penalised negative log-likelihood. With no l1 term
/// each step is a plain Newton step; otherwise the quadratic model is solved
/// by coordinate descent with soft-thresholding. Backtracking halves the step
/// until the objective decreases sufficiently.
LogisticFit fit_penalized_logistic(const LogisticDataset& data, const PenaltyConfig& pen,
                                   const FitOptions& opts = {},
                                   const std::optional<Vector>& warm_start = std::nullopt);

/// diag( sum_s sigma(1 - sigma) x_s x_s^T + l2 I ), not floored.
Vector laplace_diag_precision(const LogisticDataset& data, const Vector& theta, const PenaltyConfig& pen);

/// Coordinate k ~ N(mean_k, 1 / precision_k), independently.
Vector sample_diag_gaussian(const Vector& mean, const Vector& diag_precision, RngStream& rng);

/// Joint fit of (theta, local_theta[0..n)) where agent i's rewards follow
/// sigma(x^T (theta + local_theta[i])). Newton systems use the arrow structure
/// of the Hessian (one global block coupled to n local blocks), so the cost is
/// linear in the number of agents.
HierarchicalFit fit_hierarchical(std::span<const LogisticDataset> per_agent, const PenaltyConfig& pen,
                                 const FitOptions& opts = {},
                                 const HierarchicalFit* warm_start = nullptr);

}  // namespace parbandit
