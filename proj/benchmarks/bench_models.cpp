#include <benchmark/benchmark.h>

#include <vector>

#include "parbandit/linear_model.hpp"
#include "parbandit/logistic_model.hpp"
#include "parbandit/rng.hpp"
#include "parbandit/ucb_policies.hpp"

using namespace parbandit;

namespace {

std::vector<LogisticDataset> logistic_data(std::size_t agents, std::size_t per_agent, std::size_t dim) {
  RngStream rng(11, 0);
  const Vector theta = rng.normal_vector(static_cast<Eigen::Index>(dim));
  std::vector<LogisticDataset> out;
  for (std::size_t i = 0; i < agents; ++i) {
    LogisticDataset ds(dim);
    for (std::size_t k = 0; k < per_agent; ++k) {
      const Vector x = rng.normal_vector(static_cast<Eigen::Index>(dim));
      ds.add(x, sigmoid(x.dot(theta)));
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace

static void BM_RidgeUpdate(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  RngStream rng(1, 0);
  const ContextVector x(rng.normal_vector(static_cast<Eigen::Index>(dim)));
  LinearPosterior p(dim, 0.01);
  for (auto _ : state) {
    p.update(x, 0.5);
    benchmark::DoNotOptimize(p.design().data());
  }
}
BENCHMARK(BM_RidgeUpdate)->Arg(11)->Arg(50);

static void BM_UcbSelect(benchmark::State& state) {
  const auto agents = static_cast<std::size_t>(state.range(0));
  RngStream rng(2, 0);
  const auto actions = ActionSet::integer_range(5);
  UcbParallelPolicy policy(11, {});
  std::vector<State> states;
  for (std::size_t i = 0; i < agents; ++i) states.emplace_back(rng.normal_vector(10));
  std::size_t t = 0;
  for (auto _ : state) {
    RoundInput in;
    in.round = t;
    in.states = states;
    in.actions = &actions;
    const auto chosen = policy.select_batch(in, rng);
    std::vector<BatchObservation> obs;
    for (std::size_t i = 0; i < agents; ++i) {
      obs.push_back({t, i, chosen[i], make_context(states[i], actions, chosen[i]), 0.0});
    }
    policy.observe_batch(obs);
    ++t;
  }
}
BENCHMARK(BM_UcbSelect)->Arg(20)->Arg(100);

static void BM_LogisticFit(benchmark::State& state) {
  const auto data = logistic_data(1, static_cast<std::size_t>(state.range(0)), 7);
  const PenaltyConfig pen{0.01, 0.5, 0.0, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(fit_penalized_logistic(data[0], pen).objective);
}
BENCHMARK(BM_LogisticFit)->Arg(100)->Arg(1000);

static void BM_HierarchicalFit(benchmark::State& state) {
  const auto data = logistic_data(static_cast<std::size_t>(state.range(0)), 20, 7);
  const PenaltyConfig pen{0.01, 0.5, 0.01, 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(fit_hierarchical(data, pen).objective);
}
BENCHMARK(BM_HierarchicalFit)->Arg(10)->Arg(105);
BENCHMARK_MAIN();
