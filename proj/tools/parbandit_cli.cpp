// Command-line front end: runs simulations, sweeps and replay benchmarks and
// writes long-format CSV results plus a metadata file.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "parbandit/config.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/experiment.hpp"
#include "parbandit/results_io.hpp"
#include "parbandit/telemetry.hpp"

using namespace parbandit;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> repetitions;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> agents;
};

void add_common(CLI::App* sub, CommonOptions& o, bool run_options = true) {
  sub->add_option("--config", o.config, "JSON experiment config")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Base seed (repetition k uses seed xor k)");
  sub->add_option("--out", o.out, "Output path");
  if (!run_options) return;
  sub->add_option("--workers", o.workers, "Worker threads, 0 for one per core");
  sub->add_option("--stride", o.stride, "Keep every k-th round in the CSV (plus the last)")->check(CLI::PositiveNumber);
  sub->add_option("--repetitions", o.repetitions, "Override the repetition count")->check(CLI::PositiveNumber);
  sub->add_option("--horizon", o.horizon, "Override the number of rounds")->check(CLI::PositiveNumber);
  sub->add_option("--agents", o.agents, "Override the number of parallel agents")->check(CLI::PositiveNumber);
}

ExperimentConfig resolve(const CommonOptions& o, EnvironmentKind fallback) {
  ExperimentConfig cfg = o.config.empty() ? default_config(fallback) : load_experiment_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  if (o.workers) cfg.workers = *o.workers;
  if (o.stride) cfg.stride = *o.stride;
  if (o.repetitions) cfg.repetitions = *o.repetitions;
  if (o.horizon) cfg.horizon = *o.horizon;
  if (o.agents) cfg.agents = *o.agents;
  cfg.validate();
  return cfg;
}

void print_summary(const SweepResult& result) {
  std::printf("%-18s %-14s %14s %12s %10s\n", "policy", result.variable.c_str(), "mean_regret", "stderr", "failures");
  for (const auto& point : result.points) {
    for (const auto& s : point.policies) {
      std::printf("%-18s %-14g %14.4f %12.4f %10zu\n", s.policy.c_str(), point.value, s.mean, s.stderr_mean,
                  s.failures);
      for (std::size_t k = 0; k < s.errors.size(); ++k) {
        if (!s.errors[k].empty()) std::fprintf(stderr, "  %s repetition %zu: %s\n", s.policy.c_str(), k, s.errors[k].c_str());
      }
    }
  }
}

int finish(const SweepResult& result, const ExperimentConfig& cfg, const std::string& command) {
  write_results_csv(result, cfg.output, cfg.stride);
  write_metadata(cfg.output, cfg, command, &result);
  print_summary(result);
  std::printf("wrote %s\n", cfg.output.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel contextual bandit simulator"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  CommonOptions simulate_opts, variance_opts, agents_opts, replay_opts, generate_opts;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run one configuration for all policies");
  add_common(simulate_cmd, simulate_opts);
  auto* variance_cmd = app.add_subcommand("sweep-variance", "Sweep the state variance");
  add_common(variance_cmd, variance_opts);
  auto* agents_cmd = app.add_subcommand("sweep-agents", "Sweep the number of parallel agents");
  add_common(agents_cmd, agents_opts);
  auto* replay_cmd = app.add_subcommand("replay", "Surrogate replay benchmark on telemetry");
  add_common(replay_cmd, replay_opts);
  std::string telemetry;
  replay_cmd->add_option("--telemetry", telemetry, "Telemetry CSV (default: synthetic per seed)")
      ->check(CLI::ExistingFile);
  auto* generate_cmd = app.add_subcommand("generate-data", "Write synthetic telemetry CSV");
  add_common(generate_cmd, generate_opts, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate_cmd) {
      const auto cfg = resolve(simulate_opts, EnvironmentKind::kLinearToy);
      return finish(simulate(cfg), cfg, "simulate");
    }
    if (*variance_cmd) {
      const auto cfg = resolve(variance_opts, EnvironmentKind::kLinearToy);
      return finish(sweep_variance(cfg, cfg.variance_grid), cfg, "sweep-variance");
    }
    if (*agents_cmd) {
      const auto cfg = resolve(agents_opts, EnvironmentKind::kLinearToy);
      return finish(sweep_agents(cfg, cfg.agent_grid), cfg, "sweep-agents");
    }
    if (*replay_cmd) {
      auto cfg = resolve(replay_opts, EnvironmentKind::kReplay);
      if (!telemetry.empty()) cfg.environment.replay.telemetry = telemetry;
      return finish(replay_benchmark(cfg), cfg, "replay");
    }
    if (*generate_cmd) {
      auto cfg = resolve(generate_opts, EnvironmentKind::kReplay);
      if (generate_opts.out.empty()) cfg.output = "telemetry.csv";
      RngStream rng(cfg.seed, stream_id("telemetry"));
      const auto data = generate_synthetic_telemetry(cfg.environment.replay.synthetic, rng);
      save_telemetry_csv(data.table, cfg.output);
      std::printf("wrote %zu records for %zu cells to %s\n", data.table.record_count(), data.table.cell_count(),
                  cfg.output.string().c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 3;
  }
  return 0;
}
