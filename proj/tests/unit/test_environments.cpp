#include <gtest/gtest.h>

#include <cmath>

#include "parbandit/environments.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/logistic_model.hpp"
#include "parbandit/surrogate.hpp"
#include "parbandit/telemetry.hpp"

using namespace parbandit;

namespace {

// Adds a constant to every expected reward of a wrapped environment.
class ShiftedEnv final : public Environment {
 public:
  ShiftedEnv(const Environment& base, double shift) : base_(base), shift_(shift) {}
  std::size_t agents() const override { return base_.agents(); }
  const ActionSet& actions() const override { return base_.actions(); }
  std::size_t state_dim() const override { return base_.state_dim(); }
  std::vector<State> states(std::size_t round, RngStream& rng) const override { return base_.states(round, rng); }
  double expected_reward(std::size_t agent, const State& s, std::size_t a) const override {
    return base_.expected_reward(agent, s, a) + shift_;
  }
  double draw_reward(std::size_t agent, const State& s, std::size_t a, RngStream& noise) const override {
    return base_.draw_reward(agent, s, a, noise) + shift_;
  }

 private:
  const Environment& base_;
  double shift_;
};

LinearToyEnv toy(double state_variance, double noise_variance, std::uint64_t seed = 1) {
  LinearToyEnv::Config cfg;
  cfg.state_variance = state_variance;
  cfg.noise_variance = noise_variance;
  RngStream rng(seed, stream_id("theta"));
  return LinearToyEnv::sample(cfg, rng);
}

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

SyntheticTelemetry small_telemetry(std::size_t cells, std::size_t hours, std::uint64_t seed) {
  SyntheticTelemetryConfig cfg;
  cfg.cells = cells;
  cfg.hours = hours;
  RngStream rng(seed, stream_id("telemetry"));
  return generate_synthetic_telemetry(cfg, rng);
}

}  // namespace

TEST(ThetaStar, UnitStatePartAndUnitActionCoefficient) {
  RngStream rng(1, 0);
  const Vector theta = sample_theta_star(10, rng);
  ASSERT_EQ(theta.size(), 11);
  EXPECT_NEAR(theta.norm(), std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(theta.head(10).norm(), 1.0, 1e-12);
  EXPECT_EQ(theta(10), 1.0);
  RngStream other(2, 0);
  EXPECT_NE(sample_theta_star(10, other), theta);
}

TEST(LinearToy, TinyVarianceGivesNearZeroStates) {
  const auto env = toy(1e-18, 2.5);
  RngStream rng(3, 0);
  for (const auto& s : env.sample_states(50, rng)) EXPECT_LT(s.values().lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(LinearToy, StateVarianceMonteCarlo) {
  const auto env = toy(0.01, 2.5);
  RngStream rng(4, 0);
  const auto states = env.sample_states(100000, rng);
  for (Eigen::Index k = 0; k < 10; ++k) {
    std::vector<double> col;
    col.reserve(states.size());
    for (const auto& s : states) col.push_back(s.values()(k));
    const double v = sample_variance(col);
    EXPECT_GE(v, 0.0095) << "coordinate " << k;
    EXPECT_LE(v, 0.0105) << "coordinate " << k;
  }
}

TEST(LinearToy, StatesReproducibleFromSeed) {
  const auto env = toy(0.5, 2.5);
  RngStream a(5, 1), b(5, 1);
  const auto sa = env.states(0, a);
  const auto sb = env.states(0, b);
  ASSERT_EQ(sa.size(), 20u);
  for (std::size_t i = 0; i < sa.size(); ++i) EXPECT_EQ(sa[i].values(), sb[i].values());
}

TEST(LinearToy, NoiseFreeRewardIsDeterministic) {
  const auto env = toy(1.0, 0.0);
  RngStream rng(6, 0);
  const State s(rng.normal_vector(10));
  const auto x = make_context(s, 2.0);
  EXPECT_EQ(env.reward_draw(x, rng), x.values().dot(env.theta_star()));
}

TEST(LinearToy, ZeroStateActionThreeHasMeanThree) {
  const auto env = toy(1.0, 2.5);
  EXPECT_DOUBLE_EQ(env.mean_reward(make_context(State(Vector::Zero(10)), 3.0)), 3.0);
  EXPECT_DOUBLE_EQ(env.expected_reward(0, State(Vector::Zero(10)), 3), 3.0);
}

TEST(LinearToy, NoiseVarianceMonteCarlo) {
  const auto env = toy(1.0, 2.5);
  RngStream rng(7, 0);
  const auto x = make_context(State(rng.normal_vector(10)), 1.0);
  std::vector<double> draws;
  for (int k = 0; k < 100000; ++k) draws.push_back(env.reward_draw(x, rng));
  EXPECT_NEAR(sample_variance(draws), 2.5, 0.03 * 2.5);
}

TEST(LinearToy, RegretIsFourMinusActionExactly) {
  for (double var : {1e-4, 1.0, 100.0}) {
    const auto env = toy(var, 2.5, 8);
    RngStream rng(9, 0);
    for (const auto& s : env.sample_states(200, rng)) {
      for (std::size_t a = 0; a < 5; ++a) ASSERT_EQ(env.instantaneous_regret(0, s, a), 4.0 - static_cast<double>(a));
      ASSERT_EQ(env.optimal_action(0, s), 4u);
    }
  }
}

TEST(LinearToy, RejectsBadTheta) {
  LinearToyEnv::Config cfg;
  EXPECT_THROW(LinearToyEnv(cfg, Vector::Ones(5)), InvalidInput);
}

TEST(LogisticEnvTest, RegretMatchesExhaustiveEvaluation) {
  LogisticEnv::Config cfg;
  RngStream rng(10, 0);
  const auto env = LogisticEnv::sample(cfg, 6, rng.normal_vector(5), 0.5, rng);
  RngStream srng(11, 0);
  for (int round = 0; round < 20; ++round) {
    const auto states = env.states(static_cast<std::size_t>(round), srng);
    ASSERT_EQ(states.size(), 6u);
    for (std::size_t i = 0; i < 6; ++i) {
      double best = -INFINITY;
      std::vector<double> p;
      for (std::size_t a = 0; a < env.actions().size(); ++a) {
        const auto x = make_context(states[i], env.actions(), a);
        p.push_back(sigmoid(x.values().dot(env.agent_theta(i))));
        best = std::max(best, p.back());
      }
      for (std::size_t a = 0; a < p.size(); ++a) {
        ASSERT_NEAR(env.instantaneous_regret(i, states[i], a), best - p[a], 1e-15);
        ASSERT_GE(env.instantaneous_regret(i, states[i], a), 0.0);
      }
    }
  }
}

TEST(LogisticEnvTest, InterceptLeadsState) {
  LogisticEnv::Config cfg;
  RngStream rng(12, 0);
  const auto env = LogisticEnv::sample(cfg, 2, Vector::Zero(5), 0.1, rng);
  for (const auto& s : env.states(0, rng)) {
    ASSERT_EQ(s.dim(), 4u);
    EXPECT_EQ(s.values()(0), 1.0);
  }
}

TEST(LogisticEnvTest, SaturatedDrawIsOne) {
  LogisticEnv::Config cfg;
  cfg.state_dim = 1;
  cfg.intercept = false;
  cfg.actions = {1.0};
  const LogisticEnv env(cfg, {Eigen::Vector2d(0.0, 50.0)});
  RngStream rng(13, 0);
  const auto x = make_context(State(Vector::Zero(1)), 1.0);
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(env.reward_draw(0, x, rng), 1.0);
}

TEST(LogisticEnvTest, ZeroLogitMeanIsHalf) {
  LogisticEnv::Config cfg;
  cfg.state_dim = 1;
  cfg.intercept = false;
  cfg.actions = {1.0};
  const LogisticEnv env(cfg, {Eigen::Vector2d(0.0, 0.0)});
  RngStream rng(14, 0);
  const auto x = make_context(State(Eigen::VectorXd::Constant(1, 0.7)), 1.0);
  double mean = 0.0;
  for (int k = 0; k < 100000; ++k) {
    const double r = env.reward_draw(0, x, rng);
    ASSERT_TRUE(r == 0.0 || r == 1.0);
    mean += r / 100000.0;
  }
  EXPECT_GE(mean, 0.497);
  EXPECT_LE(mean, 0.503);
}

TEST(LogisticEnvTest, FractionalRewardsOnTrialGrid) {
  RewardModel model{20};
  RngStream rng(15, 0);
  for (int k = 0; k < 1000; ++k) {
    const double r = model.draw(0.3, rng);
    ASSERT_GE(r, 0.0);
    ASSERT_LE(r, 1.0);
    ASSERT_EQ(r * 20.0, std::round(r * 20.0));
  }
}

TEST(Environments, IdenticalSeedsGiveIdenticalRewards) {
  const auto e1 = toy(0.3, 2.5, 16);
  const auto e2 = toy(0.3, 2.5, 16);
  RngStream s1(17, 0), s2(17, 0), n1(18, 0), n2(18, 0);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto a = e1.states(t, s1);
    const auto b = e2.states(t, s2);
    for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(e1.draw_reward(i, a[i], i % 5, n1), e2.draw_reward(i, b[i], i % 5, n2));
  }
}

TEST(Environments, RegretInvariantToRewardShift) {
  LogisticEnv::Config cfg;
  RngStream rng(19, 0);
  const auto env = LogisticEnv::sample(cfg, 3, rng.normal_vector(5), 0.5, rng);
  const ShiftedEnv shifted(env, 7.25);
  for (const auto& s : env.states(0, rng)) {
    for (std::size_t a = 0; a < env.actions().size(); ++a) {
      EXPECT_NEAR(shifted.instantaneous_regret(1, s, a), env.instantaneous_regret(1, s, a), 1e-12);
    }
  }
}

TEST(Surrogate, RecoversGeneratorParameters) {
  const auto data = small_telemetry(3, 3000, 20);
  SurrogateOptions opts;
  const auto env = build_surrogate_env(data.table, opts);
  ASSERT_EQ(env.agents(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const Vector truth = data.encoding.reparameterize(data.cell_theta[i], env.encoding());
    EXPECT_LT((env.surrogate_theta(i) - truth).lpNorm<Eigen::Infinity>(), 0.1) << "cell " << i;
  }
}

TEST(Surrogate, SingleCellEqualsPooledFit) {
  const auto data = small_telemetry(1, 200, 21);
  SurrogateOptions opts;
  opts.penalty = PenaltyConfig{0.0, 1.0, 0.0, 1.0};
  const auto env = build_surrogate_env(data.table, opts);
  LogisticDataset pooled(ContextEncoding::kContextDim);
  for (const auto& rec : data.table.records(0)) {
    if (rec.hour <= env.train_hours().back()) pooled.add(env.encoding().context(rec.features, rec.a2_threshold), rec.reward);
  }
  ASSERT_EQ(pooled.size(), env.train_hours().size());
  // Two ridge terms on theta + local combine to one with weight l2 l2' / (l2 + l2').
  const auto fit = fit_penalized_logistic(pooled, PenaltyConfig{0.0, 0.5, 0.0, 1.0});
  EXPECT_LT((env.surrogate_theta(0) - fit.theta).lpNorm<Eigen::Infinity>(), 1e-6);

  opts.penalty = PenaltyConfig{0.0, 1.0, 0.0, 1e9};
  const auto stiff = build_surrogate_env(data.table, opts);
  const auto ref = fit_penalized_logistic(pooled, PenaltyConfig{0.0, 1.0, 0.0, 1.0});
  EXPECT_LT((stiff.surrogate_theta(0) - ref.theta).lpNorm<Eigen::Infinity>(), 1e-4);
}

TEST(Surrogate, FullSizeSyntheticGivesOneParameterPerCell) {
  const auto data = small_telemetry(105, 120, 22);
  const auto env = build_surrogate_env(data.table);
  EXPECT_EQ(env.agents(), 105u);
  EXPECT_EQ(env.train_hours().size(), 84u);
  EXPECT_EQ(env.eval_hours().size(), 36u);
  EXPECT_EQ(env.rounds(), 36u);
  EXPECT_EQ(env.horizon(), std::optional<std::size_t>(36));
  EXPECT_EQ(env.actions().size(), 7u);
  EXPECT_EQ(env.threshold_grid().front(), -110.0);
  for (std::size_t i = 0; i < 105; ++i) {
    EXPECT_EQ(env.surrogate_theta(i).size(), 7);
    EXPECT_LT((env.surrogate_theta(i) - env.fit().agent_theta(i)).norm(), 1e-15);
  }
  RngStream rng(0, 0);
  const auto first = env.states(0, rng);
  const auto* rec = data.table.find(0, env.eval_hours().front());
  ASSERT_NE(rec, nullptr);
  EXPECT_EQ(first[0].values(), env.encoding().state(rec->features).values());
  const auto logged = env.logged_actions(0);
  EXPECT_EQ(env.threshold_grid()[logged[0]], rec->a2_threshold);
}

TEST(Surrogate, RegretIsNoiseFree) {
  const auto data = small_telemetry(4, 100, 23);
  const auto env = build_surrogate_env(data.table);
  RngStream rng(0, 0);
  const auto states = env.states(0, rng);
  for (std::size_t a = 0; a < env.actions().size(); ++a) {
    const auto x = make_context(states[2], env.actions(), a);
    EXPECT_DOUBLE_EQ(env.expected_reward(2, states[2], a), sigmoid(x.values().dot(env.surrogate_theta(2))));
  }
}

TEST(Surrogate, DegenerateGridIsRejected) {
  auto data = small_telemetry(3, 50, 24);
  std::vector<TelemetryRecord> recs = data.table.all_records();
  for (auto& r : recs) r.a2_threshold = -95.0;
  EXPECT_THROW(build_surrogate_env(TelemetryTable::from_records(recs)), DataError);
}

TEST(Surrogate, EmptySplitIsRejected) {
  const auto data = small_telemetry(2, 3, 25);
  SurrogateOptions opts;
  opts.train_fraction = 0.2;
  EXPECT_THROW(build_surrogate_env(data.table, opts), DataError);
}
