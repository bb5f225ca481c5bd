#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/linear_model.hpp"

using namespace parbandit;

namespace {

ContextVector cv(std::initializer_list<double> v) {
  Vector x(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), x.data());
  return ContextVector(x);
}

std::vector<oracle::Sample> random_samples(int n, int d, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<oracle::Sample> out;
  for (int s = 0; s < n; ++s) {
    Vector x(d);
    for (int k = 0; k < d; ++k) x(k) = normal(gen);
    out.push_back({x, normal(gen)});
  }
  return out;
}

LinearPosterior posterior_from(const std::vector<oracle::Sample>& data, int d, double lambda) {
  LinearPosterior p(static_cast<std::size_t>(d), lambda);
  for (const auto& s : data) p.update(ContextVector(s.x), s.r);
  return p;
}

}  // namespace

TEST(RidgeUpdate, ZeroContextLeavesModelUnchanged) {
  LinearPosterior p(2, 1.0);
  const auto q = ridge_update(p, ContextVector(Vector::Zero(2)), 5.0);
  EXPECT_EQ(q.design(), p.design());
  EXPECT_EQ(q.response(), p.response());
  EXPECT_EQ(q.count(), 1u);
}

TEST(RidgeUpdate, RankOneArithmetic) {
  const auto q = ridge_update(LinearPosterior(2, 1.0), cv({1, 0}), 2.0);
  EXPECT_EQ(q.design(), Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix());
  EXPECT_EQ(q.response(), Eigen::Vector2d(2, 0));
}

TEST(RidgeUpdate, MatchesDirectSummation) {
  std::mt19937_64 gen(1);
  const auto data = random_samples(20, 4, gen);
  const auto p = posterior_from(data, 4, 0.5);
  EXPECT_LT((p.design() - oracle::design_by_summation(data, 4, 0.5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RidgeUpdate, RejectsNonFiniteReward) {
  LinearPosterior p(2, 1.0);
  EXPECT_THROW(p.update(cv({1, 0}), NAN), InvalidInput);
  EXPECT_THROW(p.update(cv({1, 0, 0}), 1.0), InvalidInput);
}

TEST(RidgeUpdate, OrderIndependent) {
  std::mt19937_64 gen(2);
  auto data = random_samples(30, 3, gen);
  const auto p = posterior_from(data, 3, 1.0);
  std::shuffle(data.begin(), data.end(), gen);
  const auto q = posterior_from(data, 3, 1.0);
  EXPECT_LT((p.design() - q.design()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((p.response() - q.response()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(RidgeTheta, EmptyPosteriorIsZero) { EXPECT_EQ(ridge_theta(LinearPosterior(3, 0.1)), Vector::Zero(3)); }

TEST(RidgeTheta, SingleObservationClosedForm) {
  const auto q = ridge_update(LinearPosterior(2, 1.0), cv({1, 0}), 2.0);
  EXPECT_NEAR((ridge_theta(q) - Eigen::Vector2d(1, 0)).norm(), 0.0, 1e-15);
}

TEST(RidgeTheta, MatchesNormalEquationsOracle) {
  std::mt19937_64 gen(3);
  const auto data = random_samples(30, 5, gen);
  const auto p = posterior_from(data, 5, 0.01);
  EXPECT_LT((ridge_theta(p) - oracle::ridge_by_inverse(data, 5, 0.01)).norm(), 1e-8);
}

TEST(LinearPosterior, LambdaMustBePositive) {
  EXPECT_THROW(LinearPosterior(2, 0.0), InvalidInput);
}

TEST(ConfidenceWidth, Examples) {
  EXPECT_DOUBLE_EQ(confidence_width(LinearPosterior(2, 1.0), cv({3, 4})), 5.0);
  EXPECT_DOUBLE_EQ(confidence_width(LinearPosterior(2, 1.0), cv({0, 0})), 0.0);
  LinearPosterior p(2, 1.0);
  p.update_design(Eigen::Vector2d(1, 0));
  EXPECT_NEAR(confidence_width(p, cv({1, 0})), std::sqrt(0.5), 1e-15);
}

TEST(ConfidenceWidth, ShrinksUnderRankOneUpdates) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 1000; ++trial) {
    LinearPosterior p(4, 0.5);
    for (int k = 0; k < 3; ++k) {
      Vector y(4);
      for (auto& v : y) v = normal(gen);
      p.update_design(y);
    }
    Vector x(4), y(4);
    for (auto& v : x) v = normal(gen);
    for (auto& v : y) v = normal(gen);
    const double before = confidence_width(p, ContextVector(x));
    p.update_design(y);
    ASSERT_LE(confidence_width(p, ContextVector(x)), before * (1 + 1e-12));
  }
}

TEST(OfulRadius, EmptyPosterior) {
  const OfulConfig cfg{0.05, 1.5, 2.0};
  const double expected = 1.5 * std::sqrt(2 * std::log(1 / 0.05)) + std::sqrt(0.25) * 2.0;
  EXPECT_NEAR(oful_radius(LinearPosterior(3, 0.25), cfg), expected, 1e-12);
}

TEST(OfulRadius, NoiseFreeIsSqrtLambdaS) {
  std::mt19937_64 gen(5);
  const auto p = posterior_from(random_samples(10, 3, gen), 3, 1.0);
  EXPECT_NEAR(oful_radius(p, OfulConfig{0.05, 0.0, 1.0}), 1.0, 1e-15);
}

TEST(OfulRadius, MatchesEigendecompositionOracle) {
  std::mt19937_64 gen(6);
  const auto data = random_samples(25, 4, gen);
  const auto p = posterior_from(data, 4, 0.3);
  const double expect = oracle::oful_radius_eigen(oracle::design_by_summation(data, 4, 0.3), 0.3, 0.1, 0.7, 1.3);
  EXPECT_NEAR(oful_radius(p, OfulConfig{0.1, 0.7, 1.3}), expect, 1e-10);
}

TEST(OfulRadius, NonDecreasingInCount) {
  std::mt19937_64 gen(7);
  const auto data = random_samples(40, 3, gen);
  LinearPosterior p(3, 1.0);
  double prev = oful_radius(p, OfulConfig{});
  for (const auto& s : data) {
    p.update(ContextVector(s.x), s.r);
    const double now = oful_radius(p, OfulConfig{});
    ASSERT_GE(now, prev - 1e-12);
    prev = now;
  }
}

TEST(OfulConfig, Validation) {
  EXPECT_THROW((OfulConfig{0.0, 1, 1}).validate(), InvalidInput);
  EXPECT_THROW((OfulConfig{1.0, 1, 1}).validate(), InvalidInput);
  EXPECT_THROW((OfulConfig{0.1, -1, 1}).validate(), InvalidInput);
  EXPECT_THROW((OfulConfig{0.1, 1, 0}).validate(), InvalidInput);
}

TEST(UcbScore, BetaZeroIsPrediction) {
  std::mt19937_64 gen(8);
  const auto p = posterior_from(random_samples(15, 3, gen), 3, 1.0);
  const auto x = cv({0.3, -1.2, 2.0});
  EXPECT_EQ(ucb_score(p, x, 0.0), x.values().dot(ridge_theta(p)));
  EXPECT_THROW(ucb_score(p, x, -1.0), InvalidInput);
}

TEST(UcbScore, EmptyPosteriorExample) { EXPECT_DOUBLE_EQ(ucb_score(LinearPosterior(2, 1.0), cv({1, 0}), 2.0), 2.0); }

TEST(UcbScore, MatchesEllipsoidDiscretization) {
  std::mt19937_64 gen(9);
  std::normal_distribution<double> normal;
  for (int inst = 0; inst < 3; ++inst) {
    const auto data = random_samples(8, 3, gen);
    const auto p = posterior_from(data, 3, 0.5);
    const Vector x = Eigen::Vector3d(normal(gen), normal(gen), normal(gen));
    const double beta = 1.0 + std::abs(normal(gen));
    const double brute = oracle::ellipsoid_max_3d(p.design(), ridge_theta(p), beta, x, 600);
    EXPECT_NEAR(ucb_score(p, ContextVector(x), beta), brute, 1e-3);
  }
}

TEST(LinearSampler, ZeroScaleReturnsMean) {
  std::mt19937_64 gen(10);
  const auto p = posterior_from(random_samples(12, 3, gen), 3, 1.0);
  RngStream rng(1, 2);
  EXPECT_LT((sample_linear_posterior(p, 0.0, rng) - ridge_theta(p)).norm(), 1e-15);
}

TEST(LinearSampler, IdentityCovariance) {
  RngStream rng(3, 4);
  const int n = 100000;
  Matrix cov = Matrix::Zero(3, 3);
  Vector mean = Vector::Zero(3);
  LinearPosterior p(3, 1.0);
  std::vector<Vector> draws;
  for (int k = 0; k < n; ++k) draws.push_back(sample_linear_posterior(p, 1.0, rng));
  for (const auto& d : draws) mean += d / n;
  for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose() / (n - 1);
  EXPECT_LT((cov - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 0.05);
}

TEST(LinearSampler, DiagonalMarginalStd) {
  LinearPosterior p(2, 1.0);
  p.update_design(Eigen::Vector2d(std::sqrt(3.0), 0));
  RngStream rng(5, 6);
  const double v = 0.7;
  double ss = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) ss += std::pow(sample_linear_posterior(p, v, rng)(0), 2);
  EXPECT_NEAR(std::sqrt(ss / n), v / 2, 0.01 * v);
}
