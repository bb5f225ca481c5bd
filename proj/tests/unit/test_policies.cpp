#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

#include "oracles.hpp"
#include "parbandit/baseline_policies.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/telemetry.hpp"
#include "parbandit/thompson_policy.hpp"
#include "parbandit/ucb_policies.hpp"

using namespace parbandit;

namespace {

std::vector<State> random_states(std::size_t n, std::size_t dim, RngStream& rng, double sd = 1.0) {
  std::vector<State> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(sd * rng.normal_vector(dim));
  return out;
}

std::vector<State> identical_states(std::size_t n, const Vector& s) { return std::vector<State>(n, State(s)); }

RoundInput round_input(std::size_t t, const std::vector<State>& states, const ActionSet& actions) {
  RoundInput in;
  in.round = t;
  in.states = states;
  in.actions = &actions;
  return in;
}

std::vector<BatchObservation> observations(std::size_t t, const std::vector<State>& states, const ActionSet& actions,
                                           const std::vector<std::size_t>& chosen, RngStream& rng) {
  std::vector<BatchObservation> out;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    out.push_back({t, i, chosen[i], make_context(states[i], actions, chosen[i]), rng.uniform()});
  }
  return out;
}

// Drives a few select/observe rounds so models hold non-trivial history.
void warm_up(Policy& policy, std::size_t rounds, std::size_t agents, std::size_t dim, const ActionSet& actions,
             RngStream& rng) {
  for (std::size_t t = 0; t < rounds; ++t) {
    const auto states = random_states(agents, dim, rng);
    const auto chosen = policy.select_batch(round_input(t, states, actions), rng);
    policy.observe_batch(observations(t, states, actions, chosen, rng));
  }
}

std::unique_ptr<ThompsonPolicy> linear_thompson(ThompsonMode mode, std::size_t dim, double lambda, double scale) {
  return std::make_unique<ThompsonPolicy>(mode, std::make_unique<LinearThompsonModel>(dim, lambda, scale));
}

}  // namespace

TEST(UcbParallel, IdenticalStatesGiveIdenticalActions) {
  const auto actions = ActionSet::integer_range(5);
  UcbParallelPolicy policy(4, {});
  RngStream rng(1, 0);
  warm_up(policy, 5, 6, 3, actions, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto states = identical_states(8, rng.normal_vector(3));
    const auto chosen = policy.select_batch(round_input(5, states, actions), rng);
    EXPECT_EQ(std::set<std::size_t>(chosen.begin(), chosen.end()).size(), 1u);
  }
}

TEST(UcbParallel, BetaZeroIsGreedy) {
  const auto actions = ActionSet::integer_range(5);
  UcbParallelPolicy policy(3, {1.0, {}, 0.0});
  policy.posterior().update(ContextVector(Eigen::Vector3d(0, 0, 1)), 2.0);
  RngStream rng(2, 0);
  const auto states = random_states(7, 2, rng);
  const auto chosen = policy.select_batch(round_input(0, states, actions), rng);
  for (auto a : chosen) EXPECT_EQ(a, 4u);
}

TEST(UcbParallel, MatchesBruteForceOracle) {
  const auto actions = ActionSet::integer_range(5);
  RngStream rng(3, 0);
  for (int inst = 0; inst < 10; ++inst) {
    UcbParallelPolicy::Config cfg;
    cfg.lambda = 0.5;
    cfg.oful = {0.1, 0.8, 1.2};
    UcbParallelPolicy policy(4, cfg);
    warm_up(policy, 4, 3, 3, actions, rng);
    const Matrix a = policy.posterior().design();
    const Matrix a_inv = a.fullPivLu().inverse();
    const Vector theta = a_inv * policy.posterior().response();
    const double beta = oracle::oful_radius_eigen(a, 0.5, 0.1, 0.8, 1.2);
    const auto states = random_states(3, 3, rng);
    const auto chosen = policy.select_batch(round_input(4, states, actions), rng);
    for (std::size_t i = 0; i < 3; ++i) {
      std::size_t best = 0;
      double best_score = -INFINITY;
      for (std::size_t k = 0; k < 5; ++k) {
        Vector x(4);
        x << states[i].values(), static_cast<double>(k);
        const double score = x.dot(theta) + beta * std::sqrt(x.dot(a_inv * x));
        if (score > best_score) {
          best_score = score;
          best = k;
        }
      }
      EXPECT_EQ(chosen[i], best);
    }
  }
}

TEST(UcbParallel, ObserveAddsOnePerAgentAndIsOrderFree) {
  const auto actions = ActionSet::integer_range(5);
  UcbParallelPolicy p(3, {}), q(3, {});
  RngStream rng(4, 0);
  const auto states = random_states(6, 2, rng);
  const auto chosen = p.select_batch(round_input(0, states, actions), rng);
  q.select_batch(round_input(0, states, actions), rng);
  auto obs = observations(0, states, actions, chosen, rng);
  p.observe_batch(obs);
  std::reverse(obs.begin(), obs.end());
  q.observe_batch(obs);
  EXPECT_EQ(p.posterior().count(), 6u);
  EXPECT_LT((p.posterior().design() - q.posterior().design()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((p.posterior().response() - q.posterior().response()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PolicyProtocol, ObserveMustMatchSelection) {
  const auto actions = ActionSet::integer_range(3);
  UcbParallelPolicy policy(3, {});
  RngStream rng(5, 0);
  const auto states = random_states(3, 2, rng);
  EXPECT_THROW(policy.observe_batch({}), DataError);
  const auto chosen = policy.select_batch(round_input(7, states, actions), rng);
  auto obs = observations(7, states, actions, chosen, rng);
  EXPECT_THROW(policy.observe_batch(std::span(obs).first(2)), DataError);
  auto dup = obs;
  dup[1].agent = 0;
  EXPECT_THROW(policy.observe_batch(dup), DataError);
  auto wrong_round = obs;
  wrong_round[0].round = 6;
  EXPECT_THROW(policy.observe_batch(wrong_round), DataError);
  auto wrong_context = obs;
  wrong_context[2].context = make_context(states[2], actions, (chosen[2] + 1) % 3);
  EXPECT_THROW(policy.observe_batch(wrong_context), DataError);
  EXPECT_NO_THROW(policy.observe_batch(obs));
}

TEST(LinUcbPr, SingleAgentMatchesPlainLinUcb) {
  const auto actions = ActionSet::integer_range(4);
  LinUcbPrPolicy policy(3, 4, {1.3});
  RngStream rng(6, 0);
  warm_up(policy, 8, 2, 3, actions, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto states = random_states(1, 3, rng);
    const Vector& s = states[0].values();
    std::size_t best = 0;
    double best_score = -INFINITY;
    for (std::size_t a = 0; a < 4; ++a) {
      const Matrix inv = policy.design(a).fullPivLu().inverse();
      const double score = policy.weights(a).dot(s) + 1.3 * std::sqrt(s.dot(inv * s));
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    const auto chosen = policy.select_batch(round_input(8 + trial, states, actions), rng);
    EXPECT_EQ(chosen[0], best);
    policy.observe_batch(observations(8 + trial, states, actions, chosen, rng));
  }
}

TEST(LinUcbPr, StagedDesignMatchesSummation) {
  const auto actions = ActionSet::integer_range(3);
  LinUcbPrPolicy policy(2, 3, {1.0});
  RngStream rng(7, 0);
  warm_up(policy, 3, 4, 2, actions, rng);
  std::vector<Matrix> before;
  for (std::size_t a = 0; a < 3; ++a) before.push_back(policy.design(a));
  const auto states = random_states(6, 2, rng);
  const auto chosen = policy.select_batch(round_input(3, states, actions), rng);
  for (std::size_t a = 0; a < 3; ++a) {
    Matrix expect = before[a];
    for (std::size_t i = 0; i < 6; ++i) {
      if (chosen[i] == a) expect += states[i].values() * states[i].values().transpose();
    }
    EXPECT_LT((policy.design(a) - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LinUcbPr, IdenticalStatesShrinkSecondAgentsWidth) {
  const auto actions = ActionSet::integer_range(3);
  LinUcbPrPolicy policy(2, 3, {1.0});
  RngStream rng(8, 0);
  const Vector s = Eigen::Vector2d(0.6, -0.8);
  const auto states = identical_states(2, s);
  auto width = [&](std::size_t a) { return std::sqrt(s.dot(policy.design(a).fullPivLu().inverse() * s)); };
  const double before = width(0);
  const auto chosen = policy.select_batch(round_input(0, states, actions), rng);
  EXPECT_EQ(chosen[0], 0u);
  // One staged update from agent 1 and, if agent 2 chose the same arm, a second.
  const double staged_once = std::sqrt(s.dot((Matrix::Identity(2, 2) + s * s.transpose()).inverse() * s));
  EXPECT_LT(staged_once, before);
  EXPECT_NE(chosen[1], chosen[0]);
  EXPECT_LE(width(0), staged_once + 1e-12);
}

TEST(LinUcbPr, StagingNeverWidensAnyAction) {
  const auto actions = ActionSet::integer_range(4);
  LinUcbPrPolicy policy(3, 4, {});
  RngStream rng(9, 0);
  warm_up(policy, 3, 3, 3, actions, rng);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix> inv_before;
    for (std::size_t a = 0; a < 4; ++a) inv_before.push_back(policy.design(a).inverse());
    const auto states = random_states(5, 3, rng);
    const auto chosen = policy.select_batch(round_input(3 + trial, states, actions), rng);
    for (int probe = 0; probe < 20; ++probe) {
      const Vector s = rng.normal_vector(3);
      for (std::size_t a = 0; a < 4; ++a) {
        ASSERT_LE(s.dot(policy.design(a).inverse() * s), s.dot(inv_before[a] * s) * (1 + 1e-12));
      }
    }
    policy.observe_batch(observations(3 + trial, states, actions, chosen, rng));
  }
}

TEST(LinUcbPr, DefaultAlpha) { EXPECT_NEAR(LinUcbPrPolicy::default_alpha(0.05), 1 + std::sqrt(std::log(40.0) / 2), 1e-15); }

TEST(LogitTransformPolicy, InnerSeesTransformedRewards) {
  const auto actions = ActionSet::integer_range(3);
  auto inner = std::make_unique<UcbParallelPolicy>(2, UcbParallelPolicy::Config{});
  const auto* raw = inner.get();
  LogitTransformPolicy policy(std::move(inner), 1e-3);
  EXPECT_EQ(policy.name(), "ucb_logit");
  RngStream rng(10, 0);
  const auto states = random_states(1, 1, rng);
  const auto chosen = policy.select_batch(round_input(0, states, actions), rng);
  std::vector<BatchObservation> obs{{0, 0, chosen[0], make_context(states[0], actions, chosen[0]), 0.0}};
  policy.observe_batch(obs);
  const Vector x = obs[0].context.values();
  EXPECT_LT((raw->posterior().response() - std::log(1e-3 / 0.999) * x).norm(), 1e-12);
}

TEST(ThompsonNaive, ZeroScaleIsGreedy) {
  const auto actions = ActionSet::integer_range(5);
  auto policy = linear_thompson(ThompsonMode::kNaive, 3, 1.0, 0.0);
  RngStream rng(11, 0);
  warm_up(*policy, 5, 4, 2, actions, rng);
  const auto& model = dynamic_cast<const LinearThompsonModel&>(policy->model());
  const Vector theta = ridge_theta(model.posterior());
  const auto states = random_states(6, 2, rng);
  const auto chosen = policy->select_batch(round_input(5, states, actions), rng);
  for (std::size_t i = 0; i < 6; ++i) {
    std::vector<double> scores;
    for (std::size_t a = 0; a < 5; ++a) scores.push_back(make_context(states[i], actions, a).values().dot(theta));
    EXPECT_EQ(chosen[i], argmax_lowest(scores));
  }
}

TEST(ThompsonMulti, ZeroScaleEqualsNaive) {
  const auto actions = ActionSet::integer_range(5);
  auto naive = linear_thompson(ThompsonMode::kNaive, 3, 1.0, 0.0);
  auto multi = linear_thompson(ThompsonMode::kMultisampling, 3, 1.0, 0.0);
  RngStream r1(12, 0), r2(12, 0);
  warm_up(*naive, 4, 3, 2, actions, r1);
  warm_up(*multi, 4, 3, 2, actions, r2);
  RngStream rng(13, 0);
  const auto states = random_states(5, 2, rng);
  EXPECT_EQ(naive->select_batch(round_input(4, states, actions), rng),
            multi->select_batch(round_input(4, states, actions), rng));
}

TEST(ThompsonNaive, IdenticalStatesCollapse) {
  const auto actions = ActionSet::integer_range(5);
  auto policy = linear_thompson(ThompsonMode::kNaive, 3, 0.01, 1.0);
  RngStream rng(14, 0);
  for (std::size_t t = 0; t < 100; ++t) {
    const auto states = identical_states(10, rng.normal_vector(2));
    const auto chosen = policy->select_batch(round_input(t, states, actions), rng);
    ASSERT_EQ(std::set<std::size_t>(chosen.begin(), chosen.end()).size(), 1u);
  }
}

TEST(Thompson, FixedStreamIsReproducible) {
  const auto actions = ActionSet::integer_range(5);
  auto a = linear_thompson(ThompsonMode::kMultisampling, 3, 0.5, 1.0);
  auto b = linear_thompson(ThompsonMode::kMultisampling, 3, 0.5, 1.0);
  RngStream ra(15, 1), rb(15, 1);
  for (std::size_t t = 0; t < 10; ++t) {
    const auto states = identical_states(4, Eigen::Vector2d(0.1 * t, -0.2));
    const auto ca = a->select_batch(round_input(t, states, actions), ra);
    const auto cb = b->select_batch(round_input(t, states, actions), rb);
    ASSERT_EQ(ca, cb);
    a->observe_batch(observations(t, states, actions, ca, ra));
    b->observe_batch(observations(t, states, actions, cb, rb));
  }
}

TEST(ThompsonMulti, WidePosteriorDiversifiesBatch) {
  const auto actions = ActionSet::integer_range(5);
  auto policy = linear_thompson(ThompsonMode::kMultisampling, 3, 0.01, 1.0);
  RngStream rng(16, 0);
  const auto states = identical_states(20, Eigen::Vector2d(0.3, -0.1));
  int diverse = 0;
  for (std::size_t t = 0; t < 1000; ++t) {
    const auto chosen = policy->select_batch(round_input(t, states, actions), rng);
    diverse += std::set<std::size_t>(chosen.begin(), chosen.end()).size() >= 2;
  }
  EXPECT_GE(diverse, 990);
}

TEST(ThompsonMulti, MarginalMatchesNaive) {
  const auto actions = ActionSet::integer_range(5);
  auto naive = linear_thompson(ThompsonMode::kNaive, 3, 1.0, 1.0);
  auto multi = linear_thompson(ThompsonMode::kMultisampling, 3, 1.0, 1.0);
  RngStream seed_rng(17, 0);
  for (auto* p : {naive.get(), multi.get()}) {
    auto& model = dynamic_cast<LinearThompsonModel&>(p->model());
    model.posterior().update(ContextVector(Eigen::Vector3d(0.2, 0.1, 1.0)), 0.5);
    model.posterior().update(ContextVector(Eigen::Vector3d(-0.3, 0.4, 2.0)), 0.7);
    model.posterior().update(ContextVector(Eigen::Vector3d(0.5, -0.2, 3.0)), 0.2);
  }
  const auto states = identical_states(4, Eigen::Vector2d(0.4, 0.9));
  std::vector<double> naive_counts(5, 0.0), multi_counts(5, 0.0);
  RngStream rn(18, 0), rm(19, 0);
  for (std::size_t t = 0; t < 10000; ++t) {
    naive_counts[naive->select_batch(round_input(t, states, actions), rn)[0]] += 1;
    multi_counts[multi->select_batch(round_input(t, states, actions), rm)[3]] += 1;
  }
  EXPECT_GT(*std::max_element(naive_counts.begin(), naive_counts.end()), 0.0);
  EXPECT_GT(std::count_if(naive_counts.begin(), naive_counts.end(), [](double c) { return c > 0; }), 1);
  EXPECT_GT(oracle::chi_square_two_sample_p(naive_counts, multi_counts), 0.01);
}

TEST(ThompsonLogistic, RefitMatchesFitFromScratch) {
  const ActionSet actions(std::vector<double>{-1.0, 0.0, 1.0});
  PenaltyConfig pen{0.0, 1.0, 0.0, 1.0};
  ThompsonPolicy policy(ThompsonMode::kMultisampling, std::make_unique<LogisticThompsonModel>(3, pen));
  RngStream rng(20, 0);
  LogisticDataset history(3);
  for (std::size_t t = 0; t < 6; ++t) {
    const auto states = random_states(4, 2, rng);
    const auto chosen = policy.select_batch(round_input(t, states, actions), rng);
    const auto obs = observations(t, states, actions, chosen, rng);
    for (const auto& o : obs) history.add(o.context, o.reward);
    policy.observe_batch(obs);
  }
  const auto& model = dynamic_cast<const LogisticThompsonModel&>(policy.model());
  EXPECT_EQ(model.history().size(), 24u);
  const auto scratch = fit_penalized_logistic(history, pen);
  EXPECT_LT((model.fit().theta - scratch.theta).lpNorm<Eigen::Infinity>(), 1e-7);
}

TEST(ThompsonHierarchical, TracksPerAgentHistory) {
  const ActionSet actions(std::vector<double>{-1.0, 1.0});
  const PenaltyConfig pen{0.0, 1.0, 0.0, 2.0};
  ThompsonPolicy policy(ThompsonMode::kMultisampling, std::make_unique<HierarchicalThompsonModel>(2, 3, pen));
  RngStream rng(21, 0);
  std::vector<LogisticDataset> per(3, LogisticDataset(2));
  for (std::size_t t = 0; t < 5; ++t) {
    const auto states = random_states(3, 1, rng);
    const auto chosen = policy.select_batch(round_input(t, states, actions), rng);
    auto obs = observations(t, states, actions, chosen, rng);
    for (const auto& o : obs) per[o.agent].add(o.context, o.reward);
    std::reverse(obs.begin(), obs.end());
    policy.observe_batch(obs);
  }
  const auto& model = dynamic_cast<const HierarchicalThompsonModel&>(policy.model());
  const auto scratch = fit_hierarchical(per, pen);
  EXPECT_LT((model.fit().theta - scratch.theta).lpNorm<Eigen::Infinity>(), 1e-7);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT((model.mean_parameter(i) - scratch.agent_theta(i)).lpNorm<Eigen::Infinity>(), 1e-7);
  }
}

TEST(LoggingReplay, ReturnsLoggedActionsVerbatim) {
  SyntheticTelemetryConfig cfg;
  RngStream gen(22, 0);
  const auto data = generate_synthetic_telemetry(cfg, gen);
  const auto& grid = cfg.threshold_grid;
  const ActionSet actions(grid);
  LoggingReplayPolicy policy;
  const auto hours = data.table.hours();
  ASSERT_EQ(hours.size(), 120u);
  ASSERT_EQ(data.table.cell_count(), 105u);
  const std::vector<State> states(105, State(Vector::Zero(1)));
  RngStream rng(23, 0);
  for (std::size_t t = 0; t < hours.size(); ++t) {
    std::vector<std::size_t> logged;
    for (std::size_t c = 0; c < 105; ++c) {
      const auto* rec = data.table.find(c, hours[t]);
      ASSERT_NE(rec, nullptr);
      logged.push_back(static_cast<std::size_t>(std::find(grid.begin(), grid.end(), rec->a2_threshold) - grid.begin()));
    }
    RoundInput in = round_input(t, states, actions);
    in.logged_actions = logged;
    ASSERT_EQ(policy.select_batch(in, rng), logged);
  }
}

TEST(LoggingReplay, ConstantLogGivesConstantOutput) {
  const auto actions = ActionSet::integer_range(4);
  LoggingReplayPolicy policy;
  const std::vector<State> states(3, State(Vector::Zero(1)));
  const std::vector<std::size_t> logged(3, 2);
  RngStream rng(24, 0);
  for (std::size_t t = 0; t < 5; ++t) {
    RoundInput in = round_input(t, states, actions);
    in.logged_actions = logged;
    EXPECT_EQ(policy.select_batch(in, rng), logged);
  }
}

TEST(LoggingReplay, MissingLogIsDataError) {
  const auto actions = ActionSet::integer_range(4);
  LoggingReplayPolicy policy;
  const std::vector<State> states(3, State(Vector::Zero(1)));
  RngStream rng(25, 0);
  EXPECT_THROW(policy.select_batch(round_input(0, states, actions), rng), DataError);
}

TEST(Baselines, FixedAndRandomStayInActionSet) {
  const auto actions = ActionSet::integer_range(5);
  FixedActionPolicy fixed(3);
  UniformRandomPolicy random;
  RngStream rng(26, 0);
  const auto states = random_states(50, 2, rng);
  EXPECT_EQ(fixed.select_batch(round_input(0, states, actions), rng), std::vector<std::size_t>(50, 3));
  for (auto a : random.select_batch(round_input(0, states, actions), rng)) EXPECT_LT(a, 5u);
  FixedActionPolicy bad(7);
  EXPECT_THROW(bad.select_batch(round_input(0, states, actions), rng), InvalidInput);
}

TEST(AllPolicies, ActionsStayInActionSet) {
  const auto actions = ActionSet::integer_range(5);
  std::vector<std::unique_ptr<Policy>> policies;
  policies.push_back(std::make_unique<UcbParallelPolicy>(3, UcbParallelPolicy::Config{}));
  policies.push_back(std::make_unique<LinUcbPrPolicy>(2, 5, LinUcbPrPolicy::Config{}));
  policies.push_back(linear_thompson(ThompsonMode::kNaive, 3, 1.0, 1.0));
  policies.push_back(linear_thompson(ThompsonMode::kMultisampling, 3, 1.0, 1.0));
  policies.push_back(std::make_unique<UniformRandomPolicy>());
  RngStream rng(27, 0);
  for (auto& p : policies) {
    for (std::size_t t = 0; t < 10; ++t) {
      const auto states = random_states(7, 2, rng);
      const auto chosen = p->select_batch(round_input(t, states, actions), rng);
      for (auto a : chosen) ASSERT_LT(a, 5u) << p->name();
      p->observe_batch(observations(t, states, actions, chosen, rng));
    }
  }
}
