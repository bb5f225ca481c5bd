#include "parbandit/linear_model.hpp"

#include <cmath>
#include <string>

#include "parbandit/errors.hpp"

namespace parbandit {

void OfulConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("OFUL delta must lie in (0, 1)");
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) {
    throw InvalidInput("OFUL noise scale R must be finite and >= 0");
  }
  if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) {
    throw InvalidInput("OFUL norm bound S must be finite and > 0");
  }
}

LinearPosterior::LinearPosterior(std::size_t dim, double lambda) : lambda_(lambda) {
  if (dim == 0) throw InvalidInput("posterior dimension must be > 0");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInput("ridge lambda must be > 0");
  const auto d = static_cast<Eigen::Index>(dim);
  a_ = Matrix::Identity(d, d) * lambda;
  b_ = Vector::Zero(d);
}

void LinearPosterior::update(const ContextVector& x, double reward) {
  if (!std::isfinite(reward)) throw InvalidInput("reward must be finite");
  if (x.dim() != dim()) {
    throw InvalidInput("context dimension " + std::to_string(x.dim()) + " does not match posterior " +
                       std::to_string(dim()));
  }
  a_.selfadjointView<Eigen::Lower>().rankUpdate(x.values());
  a_.triangularView<Eigen::StrictlyUpper>() = a_.transpose();
  b_.noalias() += reward * x.values();
  ++count_;
}

void LinearPosterior::update_design(const Vector& x) {
  if (static_cast<std::size_t>(x.size()) != dim()) throw InvalidInput("staged vector has wrong dimension");
  a_.selfadjointView<Eigen::Lower>().rankUpdate(x);
  a_.triangularView<Eigen::StrictlyUpper>() = a_.transpose();
}

PosteriorFactor::PosteriorFactor(const LinearPosterior& posterior)
    : llt_(posterior.design()), lambda_(posterior.lambda()), dim_(posterior.dim()) {
  if (llt_.info() != Eigen::Success) throw IllConditioned("design matrix is not positive definite");
  const Vector diag = llt_.matrixLLT().diagonal();
  if (diag.minCoeff() <= 1e-12 * diag.maxCoeff()) {
    throw IllConditioned("design matrix is numerically singular");
  }
  log_det_ = 2.0 * diag.array().log().sum();
  theta_ = llt_.solve(posterior.response());
}

double PosteriorFactor::width(const Vector& x) const {
  const Vector y = llt_.matrixL().solve(x);
  return y.norm();
}

double PosteriorFactor::radius(const OfulConfig& cfg) const {
  cfg.validate();
  const double log_ratio = 0.5 * log_det_ - 0.5 * static_cast<double>(dim_) * std::log(lambda_);
  const double inner = 2.0 * (log_ratio - std::log(cfg.delta));
  return cfg.noise_scale * std::sqrt(std::max(inner, 0.0)) + std::sqrt(lambda_) * cfg.norm_bound;
}

Vector PosteriorFactor::sample(double scale, RngStream& rng) const {
  if (!(scale >= 0.0)) throw InvalidInput("posterior sampling scale must be >= 0");
  const Vector z = rng.normal_vector(dim_);
  return theta_ + scale * llt_.matrixU().solve(z);
}

LinearPosterior ridge_update(LinearPosterior p, const ContextVector& x, double reward) {
  p.update(x, reward);
  return p;
}

Vector ridge_theta(const LinearPosterior& p) { return PosteriorFactor(p).theta(); }

double confidence_width(const LinearPosterior& p, const ContextVector& x) {
  if (x.dim() != p.dim()) throw InvalidInput("context dimension does not match posterior");
  return PosteriorFactor(p).width(x.values());
}

double oful_radius(const LinearPosterior& p, const OfulConfig& cfg) { return PosteriorFactor(p).radius(cfg); }

double ucb_score(const LinearPosterior& p, const ContextVector& x, double beta) {
  if (!(beta >= 0.0)) throw InvalidInput("UCB radius beta must be >= 0");
  if (x.dim() != p.dim()) throw InvalidInput("context dimension does not match posterior");
  return PosteriorFactor(p).ucb(x.values(), beta);
}

Vector sample_linear_posterior(const LinearPosterior& p, double scale, RngStream& rng) {
  return PosteriorFactor(p).sample(scale, rng);
}

}  // namespace parbandit
