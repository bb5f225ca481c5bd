#include "parbandit/logistic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "parbandit/errors.hpp"

namespace parbandit {

void PenaltyConfig::validate(bool hierarchical) const {
  for (double v : {l1, l2, l1_local, l2_local}) {
    if (!(v >= 0.0) || std::isnan(v)) throw InvalidInput("penalty weights must be >= 0");
  }
  if (!(l1 > 0.0 || l2 > 0.0)) throw InvalidInput("global penalty needs l1 > 0 or l2 > 0");
  if (hierarchical && !(l1_local > 0.0 || l2_local > 0.0)) {
    throw InvalidInput("local penalty needs l1_local > 0 or l2_local > 0");
  }
}

LogisticDataset::LogisticDataset(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidInput("logistic dataset dimension must be > 0");
}

void LogisticDataset::add(const Vector& x, double reward) {
  if (static_cast<std::size_t>(x.size()) != dim_) {
    throw InvalidInput("context dimension " + std::to_string(x.size()) + " does not match dataset " +
                       std::to_string(dim_));
  }
  if (!x.allFinite()) throw InvalidInput("context has a non-finite entry");
  if (!(reward >= 0.0 && reward <= 1.0)) {
    throw InvalidInput("logistic reward " + std::to_string(reward) + " outside [0, 1]");
  }
  rows_.insert(rows_.end(), x.data(), x.data() + x.size());
  rewards_.push_back(reward);
}

void LogisticDataset::add(const ContextVector& x, double reward) { add(x.values(), reward); }

Eigen::Map<const LogisticDataset::RowMatrix> LogisticDataset::contexts() const {
  return {rows_.data(), static_cast<Eigen::Index>(rewards_.size()), static_cast<Eigen::Index>(dim_)};
}

Eigen::Map<const Vector> LogisticDataset::rewards() const {
  return {rewards_.data(), static_cast<Eigen::Index>(rewards_.size())};
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double expected_reward_logistic(const ContextVector& x, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != x.dim()) throw InvalidInput("theta dimension mismatch");
  return sigmoid(x.values().dot(theta));
}

double logit_transform(double reward, double eps) {
  if (!(reward >= 0.0 && reward <= 1.0)) throw InvalidInput("logit transform needs a reward in [0, 1]");
  if (!(eps > 0.0 && eps < 0.5)) throw InvalidInput("logit clamp eps must lie in (0, 0.5)");
  const double c = std::clamp(reward, eps, 1.0 - eps);
  return std::log(c / (1.0 - c));
}

double logistic_nll(const LogisticDataset& data, const Vector& theta) {
  if (data.empty()) return 0.0;
  const Vector z = data.contexts() * theta;
  const auto r = data.rewards();
  double sum = 0.0;
  for (Eigen::Index s = 0; s < z.size(); ++s) sum += softplus(z(s)) - r(s) * z(s);
  return sum;
}

namespace {

double elastic_net(const Vector& v, double l1, double l2) {
  return l1 * v.lpNorm<1>() + 0.5 * l2 * v.squaredNorm();
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

/// Distance from zero of the smallest element of the subdifferential of
/// g + l1 |.| at w, per coordinate.
double subgradient_residual(double w, double g, double l1) {
  if (w > 0.0) return std::abs(g + l1);
  if (w < 0.0) return std::abs(g - l1);
  return std::max(std::abs(g) - l1, 0.0);
}

// Problem with one global block and optional per-group local blocks. A plain
// penalised logistic fit is a single group without locals.
struct ArrowProblem {
  std::vector<const LogisticDataset*> groups;
  std::size_t dim = 0;
  bool locals = false;
  PenaltyConfig pen;

  bool smooth() const { return pen.l1 == 0.0 && (!locals || pen.l1_local == 0.0); }
};

struct Iterate {
  Vector global;
  std::vector<Vector> local;

  Vector group_theta(std::size_t g) const { return local.empty() ? global : Vector(global + local[g]); }
};

double objective(const ArrowProblem& p, const Iterate& it) {
  double f = elastic_net(it.global, p.pen.l1, p.pen.l2);
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    f += logistic_nll(*p.groups[g], it.group_theta(g));
    if (p.locals) f += elastic_net(it.local[g], p.pen.l1_local, p.pen.l2_local);
  }
  return f;
}

double nonsmooth(const ArrowProblem& p, const Iterate& it) {
  double h = p.pen.l1 * it.global.lpNorm<1>();
  if (p.locals) {
    for (const auto& v : it.local) h += p.pen.l1_local * v.lpNorm<1>();
  }
  return h;
}

// Gradient of the smooth part (likelihood + l2) and the Hessian blocks.
struct SecondOrder {
  Vector grad_global;
  std::vector<Vector> grad_local;
  Matrix hess_global;             // sum_g M_g + l2 I
  std::vector<Matrix> group_hess;  // M_g = X_g^T W_g X_g
};

SecondOrder second_order(const ArrowProblem& p, const Iterate& it) {
  const auto d = static_cast<Eigen::Index>(p.dim);
  SecondOrder so;
  so.grad_global = p.pen.l2 * it.global;
  so.hess_global = Matrix::Identity(d, d) * p.pen.l2;
  so.group_hess.reserve(p.groups.size());
  if (p.locals) so.grad_local.reserve(p.groups.size());

  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    const LogisticDataset& data = *p.groups[g];
    Matrix m = Matrix::Zero(d, d);
    Vector grad = Vector::Zero(d);
    if (!data.empty()) {
      const auto x = data.contexts();
      const Vector z = x * it.group_theta(g);
      Vector resid(z.size());
      Vector sqrt_w(z.size());
      const auto r = data.rewards();
      for (Eigen::Index s = 0; s < z.size(); ++s) {
        const double mu = sigmoid(z(s));
        resid(s) = mu - r(s);
        sqrt_w(s) = std::sqrt(mu * (1.0 - mu));
      }
      grad.noalias() = x.transpose() * resid;
      const Matrix xw = sqrt_w.asDiagonal() * x;
      m.selfadjointView<Eigen::Lower>().rankUpdate(xw.transpose());
      m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
    }
    so.grad_global += grad;
    so.hess_global += m;
    if (p.locals) so.grad_local.push_back(grad + p.pen.l2_local * it.local[g]);
    so.group_hess.push_back(std::move(m));
  }
  return so;
}

double optimality(const ArrowProblem& p, const Iterate& it, const SecondOrder& so) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < it.global.size(); ++k) {
    worst = std::max(worst, subgradient_residual(it.global(k), so.grad_global(k), p.pen.l1));
  }
  if (p.locals) {
    for (std::size_t g = 0; g < it.local.size(); ++g) {
      for (Eigen::Index k = 0; k < it.local[g].size(); ++k) {
        worst = std::max(worst, subgradient_residual(it.local[g](k), so.grad_local[g](k), p.pen.l1_local));
      }
    }
  }
  return worst;
}

// Exact Newton direction. For the arrow system
//   [ H    M_1 ... M_n ] [d  ]     [ G   ]
//   [ M_1  K_1         ] [d_1] = - [ G_1 ]
//   [ ...        ...   ] [...]     [ ... ]
// with K_g = M_g + l2_local I, eliminate the local blocks via the Schur
// complement S = H - sum M_g K_g^-1 M_g.
Iterate newton_direction(const ArrowProblem& p, const SecondOrder& so) {
  const auto d = static_cast<Eigen::Index>(p.dim);
  Iterate dir;
  if (!p.locals) {
    Eigen::LDLT<Matrix> ldlt(so.hess_global);
    if (ldlt.info() != Eigen::Success) throw IllConditioned("logistic Hessian factorisation failed");
    dir.global = ldlt.solve(-so.grad_global);
    return dir;
  }
  Matrix schur = so.hess_global;
  Vector rhs = -so.grad_global;
  std::vector<Eigen::LLT<Matrix>> local_factors;
  local_factors.reserve(p.groups.size());
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    const Matrix& m = so.group_hess[g];
    Matrix k = m + Matrix::Identity(d, d) * p.pen.l2_local;
    local_factors.emplace_back(k);
    if (local_factors.back().info() != Eigen::Success) throw IllConditioned("local Hessian block is singular");
    const Matrix kinv_m = local_factors.back().solve(m);
    schur.noalias() -= m * kinv_m;
    rhs.noalias() += m * local_factors.back().solve(so.grad_local[g]);
  }
  Eigen::LDLT<Matrix> ldlt(schur);
  if (ldlt.info() != Eigen::Success) throw IllConditioned("Schur complement factorisation failed");
  dir.global = ldlt.solve(rhs);
  dir.local.resize(p.groups.size());
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    dir.local[g] = local_factors[g].solve(-so.grad_local[g] - so.group_hess[g] * dir.global);
  }
  return dir;
}

// Proximal Newton direction for the l1 case: minimise the quadratic model
// plus the l1 terms by cyclic coordinate descent, maintaining H * dir
// incrementally through the arrow structure.
Iterate proximal_direction(const ArrowProblem& p, const Iterate& it, const SecondOrder& so) {
  const auto d = static_cast<Eigen::Index>(p.dim);
  const std::size_t n = p.locals ? p.groups.size() : 0;
  constexpr double kDamping = 1e-12;
  constexpr int kMaxSweeps = 1000;

  Iterate dir;
  dir.global = Vector::Zero(d);
  Vector hd_global = Vector::Zero(d);
  std::vector<Vector> hd_local(n, Vector::Zero(d));
  dir.local.assign(n, Vector::Zero(d));

  double scale = 1.0 + it.global.lpNorm<Eigen::Infinity>();
  for (const auto& v : it.local) scale = std::max(scale, 1.0 + v.lpNorm<Eigen::Infinity>());

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double largest = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double h = std::max(so.hess_global(k, k), kDamping);
      const double cur = it.global(k) + dir.global(k);
      const double grad = so.grad_global(k) + hd_global(k);
      const double delta = soft_threshold(cur - grad / h, p.pen.l1 / h) - cur;
      if (delta == 0.0) continue;
      largest = std::max(largest, std::abs(delta));
      dir.global(k) += delta;
      hd_global.noalias() += delta * so.hess_global.col(k);
      for (std::size_t g = 0; g < n; ++g) hd_local[g].noalias() += delta * so.group_hess[g].col(k);
    }
    for (std::size_t g = 0; g < n; ++g) {
      const Matrix& m = so.group_hess[g];
      for (Eigen::Index k = 0; k < d; ++k) {
        const double h = std::max(m(k, k) + p.pen.l2_local, kDamping);
        const double cur = it.local[g](k) + dir.local[g](k);
        const double grad = so.grad_local[g](k) + hd_local[g](k);
        const double delta = soft_threshold(cur - grad / h, p.pen.l1_local / h) - cur;
        if (delta == 0.0) continue;
        largest = std::max(largest, std::abs(delta));
        dir.local[g](k) += delta;
        hd_global.noalias() += delta * m.col(k);
        hd_local[g].noalias() += delta * m.col(k);
        hd_local[g](k) += delta * p.pen.l2_local;
      }
    }
    if (largest <= 1e-13 * scale) break;
  }
  return dir;
}

Iterate step(const Iterate& it, const Iterate& dir, double t) {
  Iterate out;
  out.global = it.global + t * dir.global;
  out.local.resize(it.local.size());
  for (std::size_t g = 0; g < it.local.size(); ++g) out.local[g] = it.local[g] + t * dir.local[g];
  return out;
}

double directional(const SecondOrder& so, const Iterate& dir) {
  double v = so.grad_global.dot(dir.global);
  for (std::size_t g = 0; g < dir.local.size(); ++g) v += so.grad_local[g].dot(dir.local[g]);
  return v;
}

struct SolveResult {
  Iterate iterate;
  bool converged = false;
  int iterations = 0;
  double objective = 0.0;
};

SolveResult solve(const ArrowProblem& p, Iterate it, const FitOptions& opts) {
  constexpr double kArmijo = 1e-4;
  constexpr double kShrink = 0.5;
  constexpr int kMaxHalvings = 60;

  if (!(opts.tol > 0.0)) throw InvalidInput("fit tolerance must be > 0");
  if (opts.max_iter < 0) throw InvalidInput("max_iter must be >= 0");

  SolveResult res;
  double f = objective(p, it);
  if (!std::isfinite(f)) throw OptimizationFailure("initial objective is not finite");
  if (opts.objective_trace) opts.objective_trace->push_back(f);

  for (int iter = 0;; ++iter) {
    const SecondOrder so = second_order(p, it);
    if (optimality(p, it, so) <= opts.tol) {
      res.converged = true;
      res.iterations = iter;
      break;
    }
    if (iter >= opts.max_iter) {
      res.iterations = iter;
      break;
    }
    const Iterate dir = p.smooth() ? newton_direction(p, so) : proximal_direction(p, it, so);
    const double h0 = nonsmooth(p, it);
    const double decrease = directional(so, dir) + nonsmooth(p, step(it, dir, 1.0)) - h0;
    // Objective sums carry rounding of order eps * |f|; steps inside that band
    // are indistinguishable from zero change.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));

    bool accepted = false;
    double t = 1.0;
    for (int k = 0; k <= kMaxHalvings; ++k, t *= kShrink) {
      Iterate trial = step(it, dir, t);
      const double ft = objective(p, trial);
      if (std::isfinite(ft) && ft <= f + kArmijo * t * std::min(decrease, 0.0) + noise) {
        it = std::move(trial);
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw OptimizationFailure("line search could not decrease the objective (iteration " +
                                std::to_string(iter) + ", objective " + std::to_string(f) + ")");
    }
    if (opts.objective_trace) opts.objective_trace->push_back(f);
  }
  res.iterate = std::move(it);
  res.objective = f;
  return res;
}

Vector weighted_square_sum(const LogisticDataset& data, const Vector& theta) {
  Vector out = Vector::Zero(static_cast<Eigen::Index>(data.dim()));
  if (data.empty()) return out;
  const auto x = data.contexts();
  const Vector z = x * theta;
  for (Eigen::Index s = 0; s < z.size(); ++s) {
    const double mu = sigmoid(z(s));
    out.noalias() += (mu * (1.0 - mu)) * x.row(s).transpose().cwiseAbs2();
  }
  return out;
}

Vector floored(Vector v) { return v.cwiseMax(kMinPrecision); }

}  // namespace

double penalized_logistic_objective(const LogisticDataset& data, const Vector& theta, const PenaltyConfig& pen) {
  return logistic_nll(data, theta) + elastic_net(theta, pen.l1, pen.l2);
}

double hierarchical_objective(std::span<const LogisticDataset> per_agent, const Vector& theta,
                              std::span<const Vector> local_theta, const PenaltyConfig& pen) {
  if (per_agent.size() != local_theta.size()) throw InvalidInput("one local parameter per agent required");
  double f = elastic_net(theta, pen.l1, pen.l2);
  for (std::size_t i = 0; i < per_agent.size(); ++i) {
    f += logistic_nll(per_agent[i], theta + local_theta[i]);
    f += elastic_net(local_theta[i], pen.l1_local, pen.l2_local);
  }
  return f;
}

LogisticFit fit_penalized_logistic(const LogisticDataset& data, const PenaltyConfig& pen, const FitOptions& opts,
                                   const std::optional<Vector>& warm_start) {
  pen.validate(false);
  ArrowProblem p;
  p.groups = {&data};
  p.dim = data.dim();
  p.pen = pen;

  Iterate start;
  start.global = Vector::Zero(static_cast<Eigen::Index>(p.dim));
  if (warm_start) {
    if (static_cast<std::size_t>(warm_start->size()) != p.dim) throw InvalidInput("warm start has wrong dimension");
    start.global = *warm_start;
  }
  SolveResult res = solve(p, std::move(start), opts);

  LogisticFit fit;
  fit.theta = std::move(res.iterate.global);
  fit.diag_precision = floored(laplace_diag_precision(data, fit.theta, pen));
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.objective = res.objective;
  return fit;
}

Vector laplace_diag_precision(const LogisticDataset& data, const Vector& theta, const PenaltyConfig& pen) {
  if (!theta.allFinite()) throw InvalidInput("theta must be finite");
  if (static_cast<std::size_t>(theta.size()) != data.dim()) throw InvalidInput("theta dimension mismatch");
  Vector prec = weighted_square_sum(data, theta);
  prec.array() += pen.l2;
  return prec;
}

Vector sample_diag_gaussian(const Vector& mean, const Vector& diag_precision, RngStream& rng) {
  if (mean.size() != diag_precision.size()) throw InvalidInput("mean and precision sizes differ");
  if (!((diag_precision.array() > 0.0).all()) || !diag_precision.allFinite()) {
    throw InvalidInput("diagonal precision entries must be finite and > 0");
  }
  Vector out(mean.size());
  for (Eigen::Index k = 0; k < mean.size(); ++k) {
    out(k) = mean(k) + rng.normal() / std::sqrt(diag_precision(k));
  }
  return out;
}

HierarchicalFit fit_hierarchical(std::span<const LogisticDataset> per_agent, const PenaltyConfig& pen,
                                 const FitOptions& opts, const HierarchicalFit* warm_start) {
  pen.validate(true);
  if (per_agent.empty()) throw InvalidInput("hierarchical fit needs at least one agent");
  ArrowProblem p;
  p.dim = per_agent.front().dim();
  p.locals = true;
  p.pen = pen;
  for (const auto& data : per_agent) {
    if (data.dim() != p.dim) throw InvalidInput("agents disagree on context dimension");
    p.groups.push_back(&data);
  }
  const auto d = static_cast<Eigen::Index>(p.dim);

  Iterate start;
  if (warm_start && warm_start->agents() == per_agent.size() && warm_start->theta.size() == d) {
    start.global = warm_start->theta;
    start.local = warm_start->local_theta;
  } else {
    start.global = Vector::Zero(d);
    start.local.assign(per_agent.size(), Vector::Zero(d));
  }
  SolveResult res = solve(p, std::move(start), opts);

  HierarchicalFit fit;
  fit.theta = std::move(res.iterate.global);
  fit.local_theta = std::move(res.iterate.local);
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.objective = res.objective;

  Vector global_prec = Vector::Constant(d, pen.l2);
  fit.local_precision.reserve(per_agent.size());
  for (std::size_t i = 0; i < per_agent.size(); ++i) {
    const Vector w = weighted_square_sum(per_agent[i], fit.agent_theta(i));
    global_prec += w;
    fit.local_precision.push_back(floored((w.array() + pen.l2_local).matrix()));
  }
  fit.diag_precision = floored(std::move(global_prec));
  return fit;
}

}  // namespace parbandit
