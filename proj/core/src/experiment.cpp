#include "parbandit/experiment.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "parbandit/baseline_policies.hpp"
#include "parbandit/surrogate.hpp"
#include "parbandit/thompson_policy.hpp"
#include "parbandit/ucb_policies.hpp"

namespace parbandit {

EpisodeStreams EpisodeStreams::make(std::uint64_t seed, const std::string& policy_name) {
  return EpisodeStreams{RngStream(seed, stream_id("states")), RngStream(seed, stream_id("noise")),
                        RngStream(seed, stream_id("policy:" + policy_name))};
}

EpisodeResult run_episode(Policy& policy, const Environment& env, std::size_t horizon, EpisodeStreams& streams,
                          bool keep_details) {
  if (const auto cap = env.horizon()) horizon = std::min(horizon, *cap);
  const std::size_t n = env.agents();
  EpisodeResult out;
  out.agents = n;
  out.rounds = horizon;
  out.cumulative.reserve(horizon);
  if (keep_details) {
    out.actions.reserve(n * horizon);
    out.rewards.reserve(n * horizon);
    out.regret.reserve(n * horizon);
  }
  double total = 0.0;
  std::vector<BatchObservation> batch;
  for (std::size_t t = 0; t < horizon; ++t) {
    try {
      const auto states = env.states(t, streams.states);
      const auto logged = env.logged_actions(t);
      const RoundInput in{t, states, &env.actions(), logged};
      const auto chosen = policy.select_batch(in, streams.policy);
      batch.clear();
      double round_regret = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = env.draw_reward(i, states[i], chosen[i], streams.noise);
        const double g = env.instantaneous_regret(i, states[i], chosen[i]);
        round_regret += g;
        batch.push_back(BatchObservation{t, i, chosen[i], make_context(states[i], env.actions(), chosen[i]), r});
        if (keep_details) {
          out.actions.push_back(chosen[i]);
          out.rewards.push_back(r);
          out.regret.push_back(g);
        }
      }
      total += round_regret;
      out.cumulative.push_back(total);
      policy.observe_batch(batch);
    } catch (const EpisodeFailure&) {
      throw;
    } catch (const std::exception& e) {
      throw EpisodeFailure(t, policy.name() + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::unique_ptr<UcbParallelPolicy> make_ucb(const PolicySpec& s, const Environment& env) {
  const auto* lin = dynamic_cast<const LinearToyEnv*>(&env);
  UcbParallelPolicy::Config c;
  c.lambda = s.lambda.value_or(lin ? 0.01 : 1.0);
  c.oful.delta = s.delta.value_or(0.05);
  c.oful.noise_scale = s.noise_scale.value_or(lin ? std::sqrt(lin->config().noise_variance) : 1.0);
  c.oful.norm_bound = s.norm_bound.value_or(lin ? std::sqrt(2.0) : 1.0);
  c.fixed_beta = s.beta;
  return std::make_unique<UcbParallelPolicy>(env.context_dim(), c);
}

std::unique_ptr<ThompsonModel> make_thompson_model(const PolicySpec& s, const Environment& env) {
  const auto* lin = dynamic_cast<const LinearToyEnv*>(&env);
  const std::string model = s.model.value_or(lin ? "linear" : "hierarchical");
  const std::size_t d = env.context_dim();
  if (model == "linear") {
    const double r = s.noise_scale.value_or(lin ? std::sqrt(lin->config().noise_variance) : 1.0);
    return std::make_unique<LinearThompsonModel>(d, s.lambda.value_or(lin ? 0.01 : 1.0), s.scale.value_or(r));
  }
  if (model == "logistic") return std::make_unique<LogisticThompsonModel>(d, s.penalty, s.fit);
  if (model == "hierarchical") return std::make_unique<HierarchicalThompsonModel>(d, env.agents(), s.penalty, s.fit);
  throw InvalidInput("policy " + s.name() + ": unknown Thompson model '" + model + "'");
}

}  // namespace

std::unique_ptr<Policy> make_policy(const PolicySpec& spec, const Environment& env) {
  const auto& k = spec.kind;
  if (k == "ucb") return make_ucb(spec, env);
  if (k == "ucb_logit") return std::make_unique<LogitTransformPolicy>(make_ucb(spec, env), spec.logit_eps);
  if (k == "linucb_pr") {
    const double alpha = spec.alpha.value_or(LinUcbPrPolicy::default_alpha(spec.delta.value_or(0.05)));
    return std::make_unique<LinUcbPrPolicy>(env.state_dim(), env.actions().size(), LinUcbPrPolicy::Config{alpha});
  }
  if (k == "thompson_naive") return std::make_unique<ThompsonPolicy>(ThompsonMode::kNaive, make_thompson_model(spec, env));
  if (k == "thompson_multi") {
    return std::make_unique<ThompsonPolicy>(ThompsonMode::kMultisampling, make_thompson_model(spec, env));
  }
  if (k == "logging") return std::make_unique<LoggingReplayPolicy>();
  if (k == "random") return std::make_unique<UniformRandomPolicy>();
  if (k == "fixed") {
    if (spec.action >= env.actions().size()) throw InvalidInput("policy " + spec.name() + ": action out of range");
    return std::make_unique<FixedActionPolicy>(spec.action);
  }
  if (k == "oracle") {
    return std::make_unique<OraclePolicy>(
        [&env](std::size_t agent, const State& s, std::size_t a) { return env.expected_reward(agent, s, a); });
  }
  throw InvalidInput("unknown policy kind '" + k + "'");
}

std::unique_ptr<Environment> make_environment(const EnvironmentSpec& spec, std::size_t agents, std::uint64_t seed) {
  RngStream truth(seed, stream_id("theta"));
  switch (spec.kind) {
    case EnvironmentKind::kLinearToy: {
      auto c = spec.linear;
      c.agents = agents;
      return std::make_unique<LinearToyEnv>(LinearToyEnv::sample(c, truth));
    }
    case EnvironmentKind::kLogistic: {
      const auto& l = spec.logistic;
      const auto dim = static_cast<Eigen::Index>(l.config.state_dim + 1);
      Vector global = l.global_theta.empty()
                          ? truth.normal_vector(static_cast<std::size_t>(dim))
                          : Eigen::Map<const Vector>(l.global_theta.data(), static_cast<Eigen::Index>(l.global_theta.size()));
      if (global.size() != dim) throw InvalidInput("logistic global_theta must have state_dim + 1 entries");
      return std::make_unique<LogisticEnv>(LogisticEnv::sample(l.config, agents, global, l.local_scale, truth));
    }
    case EnvironmentKind::kReplay: {
      const auto& r = spec.replay;
      if (r.telemetry) return std::make_unique<SurrogateReplayEnv>(build_surrogate_env(load_telemetry_csv(*r.telemetry), r.surrogate));
      RngStream gen(seed, stream_id("telemetry"));
      const auto data = generate_synthetic_telemetry(r.synthetic, gen);
      return std::make_unique<SurrogateReplayEnv>(build_surrogate_env(data.table, r.surrogate));
    }
  }
  throw InvalidInput("unknown environment kind");
}

void RepetitionSummary::summarize() {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : finals) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  mean = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
  double ss = 0.0;
  for (double v : finals) {
    if (std::isfinite(v)) ss += (v - mean) * (v - mean);
  }
  stddev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  stderr_mean = n > 0 ? stddev / std::sqrt(static_cast<double>(n)) : 0.0;
}

const RepetitionSummary& SweepPoint::policy(const std::string& name) const {
  for (const auto& p : policies) {
    if (p.policy == name) return p;
  }
  throw InvalidInput("no results for policy '" + name + "'");
}

PairedDifference paired_difference(const RepetitionSummary& a, const RepetitionSummary& b) {
  std::vector<double> diff;
  for (std::size_t k = 0; k < std::min(a.finals.size(), b.finals.size()); ++k) {
    if (std::isfinite(a.finals[k]) && std::isfinite(b.finals[k])) diff.push_back(a.finals[k] - b.finals[k]);
  }
  PairedDifference out;
  out.count = diff.size();
  if (diff.empty()) return out;
  for (double d : diff) out.mean += d;
  out.mean /= static_cast<double>(diff.size());
  if (diff.size() > 1) {
    double ss = 0.0;
    for (double d : diff) ss += (d - out.mean) * (d - out.mean);
    out.stderr_mean = std::sqrt(ss / static_cast<double>(diff.size() - 1)) / std::sqrt(static_cast<double>(diff.size()));
  }
  return out;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

/// Runs every (point, repetition) pair; within a pair all policies share one
/// environment. Results land in slots keyed by (point, policy, repetition),
/// so the worker count cannot change them.
std::vector<std::vector<RepetitionSummary>> run_points(const std::vector<ExperimentConfig>& points,
                                                       std::size_t workers) {
  std::vector<std::vector<RepetitionSummary>> out(points.size());
  std::vector<std::shared_ptr<const Environment>> fixed_env(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto& cfg = points[p];
    cfg.validate();
    for (const auto& spec : cfg.policies) {
      RepetitionSummary s;
      s.policy = spec.name();
      s.finals.assign(cfg.repetitions, std::numeric_limits<double>::quiet_NaN());
      s.curves.resize(cfg.repetitions);
      s.errors.resize(cfg.repetitions);
      out[p].push_back(std::move(s));
    }
    // Replay from a file has no per-repetition randomness in the ground truth.
    if (cfg.environment.kind == EnvironmentKind::kReplay && cfg.environment.replay.telemetry) {
      fixed_env[p] = make_environment(cfg.environment, cfg.agents, cfg.seed);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t k = 0; k < points[p].repetitions; ++k) tasks.emplace_back(p, k);
  }
  parallel_for(tasks.size(), workers, [&](std::size_t task) {
    const auto [p, k] = tasks[task];
    const auto& cfg = points[p];
    const std::uint64_t seed = repetition_seed(cfg.seed, k);
    std::shared_ptr<const Environment> env = fixed_env[p];
    try {
      if (!env) env = make_environment(cfg.environment, cfg.agents, seed);
    } catch (const std::exception& e) {
      for (auto& s : out[p]) s.errors[k] = std::string("environment: ") + e.what();
      return;
    }
    for (std::size_t q = 0; q < cfg.policies.size(); ++q) {
      auto& slot = out[p][q];
      try {
        auto policy = make_policy(cfg.policies[q], *env);
        auto streams = EpisodeStreams::make(seed, cfg.policies[q].name());
        auto result = run_episode(*policy, *env, cfg.horizon, streams, false);
        slot.finals[k] = result.final_regret();
        slot.curves[k] = std::move(result.cumulative);
      } catch (const std::exception& e) {
        slot.errors[k] = e.what();
      }
    }
  });
  for (auto& point : out) {
    for (auto& s : point) {
      s.failures = 0;
      for (const auto& e : s.errors) s.failures += e.empty() ? 0 : 1;
      s.summarize();
    }
  }
  return out;
}

}  // namespace

std::vector<RepetitionSummary> run_repetitions(const ExperimentConfig& cfg) {
  return std::move(run_points({cfg}, cfg.workers).front());
}

SweepResult simulate(const ExperimentConfig& cfg) {
  if (cfg.environment.kind == EnvironmentKind::kReplay) return replay_benchmark(cfg);
  SweepResult out;
  out.points.push_back(SweepPoint{0.0, run_repetitions(cfg)});
  return out;
}

SweepResult sweep_variance(const ExperimentConfig& cfg, const std::vector<double>& variances) {
  if (cfg.environment.kind == EnvironmentKind::kReplay) throw InvalidInput("state variance sweep needs a synthetic environment");
  std::vector<ExperimentConfig> points;
  for (double v : variances) {
    if (!(v > 0.0)) throw InvalidInput("state variances must be > 0");
    auto c = cfg;
    c.environment.linear.state_variance = v;
    c.environment.logistic.config.state_variance = v;
    points.push_back(std::move(c));
  }
  auto runs = run_points(points, cfg.workers);
  SweepResult out;
  out.variable = "state_variance";
  for (std::size_t i = 0; i < variances.size(); ++i) out.points.push_back(SweepPoint{variances[i], std::move(runs[i])});
  return out;
}

SweepResult sweep_agents(const ExperimentConfig& cfg, const std::vector<std::size_t>& agents) {
  if (cfg.environment.kind == EnvironmentKind::kReplay) throw InvalidInput("agent sweep needs a synthetic environment");
  std::vector<ExperimentConfig> points;
  for (auto n : agents) {
    if (n == 0) throw InvalidInput("agent counts must be >= 1");
    auto c = cfg;
    c.agents = n;
    points.push_back(std::move(c));
  }
  auto runs = run_points(points, cfg.workers);
  SweepResult out;
  out.variable = "agents";
  for (std::size_t i = 0; i < agents.size(); ++i) {
    out.points.push_back(SweepPoint{static_cast<double>(agents[i]), std::move(runs[i])});
  }
  return out;
}

SweepResult replay_benchmark(const ExperimentConfig& cfg) {
  if (cfg.environment.kind != EnvironmentKind::kReplay) throw InvalidInput("replay needs a replay environment");
  SweepResult out;
  out.variable = "replay";
  out.points.push_back(SweepPoint{0.0, std::move(run_points({cfg}, cfg.workers).front())});
  return out;
}

}  // namespace parbandit
