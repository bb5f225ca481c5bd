#pragma once

#include <cstddef>

#include <Eigen/Cholesky>

#include "parbandit/rng.hpp"
#include "parbandit/types.hpp"

namespace parbandit {

/// Confidence-set parameters for OFUL: level delta, sub-gaussian noise scale R
/// and a bound S on the norm of the true parameter.
struct OfulConfig {
  double delta = 0.05;
  double noise_scale = 1.0;
  double norm_bound = 1.0;

  void validate() const;
};

/// Ridge posterior over a linear reward parameter:
///   A = lambda * I + sum x x^T,   b = sum r x.
class LinearPosterior {
 public:
  LinearPosterior(std::size_t dim, double lambda);

  std::size_t dim() const { return static_cast<std::size_t>(b_.size()); }
  double lambda() const { return lambda_; }
  std::size_t count() const { return count_; }
  const Matrix& design() const { return a_; }
  const Vector& response() const { return b_; }

  /// In-place rank-one update. Throws InvalidInput on a non-finite reward or
  /// a dimension mismatch.
  void update(const ContextVector& x, double reward);
  /// Adds x x^T to the design only (used for staged, reward-free updates).
  void update_design(const Vector& x);

 private:
  Matrix a_;
  Vector b_;
  double lambda_;
  std::size_t count_ = 0;
};

/// Cholesky factorisation of a posterior, reused across the many scoring
/// queries issued within a single round.
class PosteriorFactor {
 public:
  explicit PosteriorFactor(const LinearPosterior& posterior);

  const Vector& theta() const { return theta_; }
  /// log det(A)
  double log_det() const { return log_det_; }
  /// ||x||_{A^-1}
  double width(const Vector& x) const;
  double radius(const OfulConfig& cfg) const;
  double ucb(const Vector& x, double beta) const { return x.dot(theta_) + beta * width(x); }
  /// theta_hat + scale * L^-T z with z ~ N(0, I); covariance scale^2 A^-1.
  Vector sample(double scale, RngStream& rng) const;

 private:
  Eigen::LLT<Matrix> llt_;
  Vector theta_;
  double log_det_ = 0.0;
  double lambda_;
  std::size_t dim_;
};

LinearPosterior ridge_update(LinearPosterior p, const ContextVector& x, double reward);
Vector ridge_theta(const LinearPosterior& p);
double confidence_width(const LinearPosterior& p, const ContextVector& x);
/// beta = R sqrt(2 log(det(A)^1/2 det(lambda I)^-1/2 / delta)) + sqrt(lambda) S
double oful_radius(const LinearPosterior& p, const OfulConfig& cfg);
/// Upper confidence bound x^T theta_hat + beta ||x||_{A^-1}; the maximum of
/// x^T theta over the ellipsoid ||theta - theta_hat||_A <= beta.
double ucb_score(const LinearPosterior& p, const ContextVector& x, double beta);
/// Draw from N(theta_hat, scale^2 A^-1).
Vector sample_linear_posterior(const LinearPosterior& p, double scale, RngStream& rng);

}  // namespace parbandit
