#include "parbandit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "parbandit/errors.hpp"

namespace parbandit {

using nlohmann::json;

namespace {

/// Typed access to one JSON object that remembers which keys were read, so
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
      if (!j_.at(key).is_number_unsigned()) throw InvalidInput(where(key) + ": expected a non-negative integer");
    }
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidInput(where(key) + ": " + e.what());
    }
  }

  template <typename T>
  void read(const std::string& key, std::optional<T>& out) {
    if (!j_.contains(key) || j_.at(key).is_null()) {
      if (j_.contains(key)) used_.insert(key);
      return;
    }
    T v{};
    read(key, v);
    out = v;
  }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(j_.at(key), where(key));
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw InvalidInput(where(key) + ": unknown key");
    }
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidInput("config " + (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

template <std::size_t N>
void read_array(Section& s, const std::string& key, std::array<double, N>& out) {
  std::vector<double> v;
  s.read(key, v);
  if (!s.has(key)) return;
  if (v.size() != N) throw InvalidInput(s.where(key) + ": expected " + std::to_string(N) + " numbers");
  std::copy(v.begin(), v.end(), out.begin());
}

void read_penalty(Section& s, PenaltyConfig& pen) {
  if (!s.has("penalty")) return;
  auto p = s.child("penalty");
  p.read("l1", pen.l1);
  p.read("l2", pen.l2);
  p.read("l1_local", pen.l1_local);
  p.read("l2_local", pen.l2_local);
  p.finish();
}

void read_fit(Section& s, FitOptions& fit) {
  s.read("tol", fit.tol);
  s.read("max_iter", fit.max_iter);
}

PolicySpec read_policy(Section s) {
  PolicySpec p;
  if (!s.has("kind")) s.fail("policy needs a 'kind'");
  s.read("kind", p.kind);
  s.read("label", p.label);
  s.read("lambda", p.lambda);
  s.read("delta", p.delta);
  s.read("noise_scale", p.noise_scale);
  s.read("norm_bound", p.norm_bound);
  s.read("beta", p.beta);
  s.read("alpha", p.alpha);
  s.read("scale", p.scale);
  s.read("model", p.model);
  read_penalty(s, p.penalty);
  read_fit(s, p.fit);
  s.read("logit_eps", p.logit_eps);
  s.read("action", p.action);
  s.finish();
  return p;
}

void read_synthetic(Section s, SyntheticTelemetryConfig& g) {
  s.read("cells", g.cells);
  s.read("hours", g.hours);
  read_array(s, "feature_mean", g.feature_mean);
  read_array(s, "feature_sd", g.feature_sd);
  read_array(s, "diurnal_amplitude", g.diurnal_amplitude);
  s.read("threshold_grid", g.threshold_grid);
  s.read("default_threshold", g.default_threshold);
  s.read("exploration", g.exploration);
  s.read("threshold_mean", g.threshold_mean);
  s.read("threshold_scale", g.threshold_scale);
  s.read("global_theta", g.global_theta);
  s.read("local_scale", g.local_scale);
  s.read("reward_trials", g.reward_trials);
  s.finish();
}

void read_environment(Section s, EnvironmentSpec& env, const std::filesystem::path& base_dir) {
  std::string kind = "linear_toy";
  s.read("kind", kind);
  if (kind == "linear_toy") {
    env.kind = EnvironmentKind::kLinearToy;
    s.read("state_dim", env.linear.state_dim);
    s.read("state_variance", env.linear.state_variance);
    s.read("noise_variance", env.linear.noise_variance);
    s.read("action_count", env.linear.action_count);
  } else if (kind == "logistic") {
    env.kind = EnvironmentKind::kLogistic;
    auto& c = env.logistic.config;
    s.read("state_dim", c.state_dim);
    s.read("state_variance", c.state_variance);
    s.read("intercept", c.intercept);
    s.read("actions", c.actions);
    s.read("reward_trials", c.reward.trials);
    s.read("global_theta", env.logistic.global_theta);
    s.read("local_scale", env.logistic.local_scale);
  } else if (kind == "replay") {
    env.kind = EnvironmentKind::kReplay;
    std::optional<std::string> path;
    s.read("telemetry", path);
    if (path) {
      std::filesystem::path p(*path);
      env.replay.telemetry = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    if (s.has("synthetic")) read_synthetic(s.child("synthetic"), env.replay.synthetic);
    auto& sur = env.replay.surrogate;
    s.read("train_fraction", sur.train_fraction);
    s.read("reward_trials", sur.reward.trials);
    read_penalty(s, sur.penalty);
    read_fit(s, sur.fit);
  } else {
    throw InvalidInput("config environment.kind: unknown environment '" + kind + "'");
  }
  s.finish();
}

json penalty_json(const PenaltyConfig& p) {
  return {{"l1", p.l1}, {"l2", p.l2}, {"l1_local", p.l1_local}, {"l2_local", p.l2_local}};
}

template <typename T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

}  // namespace

std::string to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::kLinearToy: return "linear_toy";
    case EnvironmentKind::kLogistic: return "logistic";
    case EnvironmentKind::kReplay: return "replay";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  if (agents == 0) throw InvalidInput("config: agents must be >= 1");
  if (horizon == 0) throw InvalidInput("config: horizon must be >= 1");
  if (repetitions == 0) throw InvalidInput("config: repetitions must be >= 1");
  if (stride == 0) throw InvalidInput("config: stride must be >= 1");
  if (policies.empty()) throw InvalidInput("config: at least one policy is required");
  static const std::set<std::string> kinds{"ucb",    "ucb_logit", "linucb_pr", "thompson_naive", "thompson_multi",
                                           "logging", "random",   "fixed",     "oracle"};
  std::set<std::string> names;
  for (const auto& p : policies) {
    if (!kinds.count(p.kind)) throw InvalidInput("config: unknown policy kind '" + p.kind + "'");
    if (!names.insert(p.name()).second) throw InvalidInput("config: duplicate policy name '" + p.name() + "'");
  }
  for (double v : variance_grid) {
    if (!(v > 0.0)) throw InvalidInput("config: variance grid entries must be > 0");
  }
  for (auto n : agent_grid) {
    if (n == 0) throw InvalidInput("config: agent grid entries must be >= 1");
  }
  if (environment.kind == EnvironmentKind::kReplay) {
    environment.replay.surrogate.validate();
    if (!environment.replay.telemetry) environment.replay.synthetic.validate();
  }
}

std::vector<PolicySpec> default_policies(EnvironmentKind kind) {
  std::vector<std::string> kinds = kind == EnvironmentKind::kReplay
                                       ? std::vector<std::string>{"thompson_multi", "ucb_logit", "logging"}
                                       : std::vector<std::string>{"ucb", "thompson_naive", "thompson_multi"};
  std::vector<PolicySpec> out;
  for (auto& k : kinds) {
    PolicySpec p;
    p.kind = k;
    out.push_back(std::move(p));
  }
  return out;
}

ExperimentConfig default_config(EnvironmentKind kind) {
  ExperimentConfig cfg;
  cfg.environment.kind = kind;
  cfg.policies = default_policies(kind);
  if (kind == EnvironmentKind::kReplay) cfg.repetitions = 20;
  return cfg;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("config: expected a JSON object");
  EnvironmentKind kind = EnvironmentKind::kLinearToy;
  if (j.contains("environment") && j["environment"].is_object() && j["environment"].contains("kind")) {
    const auto& k = j["environment"]["kind"];
    if (k == "logistic") kind = EnvironmentKind::kLogistic;
    if (k == "replay") kind = EnvironmentKind::kReplay;
  }
  ExperimentConfig cfg = default_config(kind);
  Section root(j, "");
  if (root.has("environment")) read_environment(root.child("environment"), cfg.environment, base_dir);
  if (root.has("policies")) {
    cfg.policies.clear();
    const auto& arr = root.raw("policies");
    if (!arr.is_array()) throw InvalidInput("config policies: expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      cfg.policies.push_back(read_policy(Section(arr[i], "policies[" + std::to_string(i) + "]")));
    }
  }
  root.read("agents", cfg.agents);
  root.read("horizon", cfg.horizon);
  root.read("repetitions", cfg.repetitions);
  root.read("seed", cfg.seed);
  std::string out = cfg.output.string();
  root.read("output", out);
  cfg.output = out;
  root.read("workers", cfg.workers);
  root.read("stride", cfg.stride);
  if (root.has("sweep")) {
    auto s = root.child("sweep");
    s.read("state_variance", cfg.variance_grid);
    s.read("agents", cfg.agent_grid);
    s.finish();
  }
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_experiment_config(ss.str(), path.parent_path());
  } catch (const Error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json env;
  const auto& e = cfg.environment;
  env["kind"] = to_string(e.kind);
  switch (e.kind) {
    case EnvironmentKind::kLinearToy:
      env["state_dim"] = e.linear.state_dim;
      env["state_variance"] = e.linear.state_variance;
      env["noise_variance"] = e.linear.noise_variance;
      env["action_count"] = e.linear.action_count;
      break;
    case EnvironmentKind::kLogistic:
      env["state_dim"] = e.logistic.config.state_dim;
      env["state_variance"] = e.logistic.config.state_variance;
      env["intercept"] = e.logistic.config.intercept;
      env["actions"] = e.logistic.config.actions;
      env["reward_trials"] = e.logistic.config.reward.trials;
      env["global_theta"] = e.logistic.global_theta;
      env["local_scale"] = e.logistic.local_scale;
      break;
    case EnvironmentKind::kReplay: {
      const auto& r = e.replay;
      if (r.telemetry) env["telemetry"] = r.telemetry->string();
      const auto& g = r.synthetic;
      env["synthetic"] = {{"cells", g.cells},
                          {"hours", g.hours},
                          {"feature_mean", g.feature_mean},
                          {"feature_sd", g.feature_sd},
                          {"diurnal_amplitude", g.diurnal_amplitude},
                          {"threshold_grid", g.threshold_grid},
                          {"default_threshold", g.default_threshold},
                          {"exploration", g.exploration},
                          {"threshold_mean", g.threshold_mean},
                          {"threshold_scale", g.threshold_scale},
                          {"global_theta", g.global_theta},
                          {"local_scale", g.local_scale},
                          {"reward_trials", g.reward_trials}};
      env["train_fraction"] = r.surrogate.train_fraction;
      env["reward_trials"] = r.surrogate.reward.trials;
      env["penalty"] = penalty_json(r.surrogate.penalty);
      env["tol"] = r.surrogate.fit.tol;
      env["max_iter"] = r.surrogate.fit.max_iter;
      break;
    }
  }
  json policies = json::array();
  for (const auto& p : cfg.policies) {
    json pj{{"kind", p.kind},           {"label", p.name()},     {"penalty", penalty_json(p.penalty)},
            {"tol", p.fit.tol},         {"max_iter", p.fit.max_iter}, {"logit_eps", p.logit_eps},
            {"action", p.action}};
    put(pj, "lambda", p.lambda);
    put(pj, "delta", p.delta);
    put(pj, "noise_scale", p.noise_scale);
    put(pj, "norm_bound", p.norm_bound);
    put(pj, "beta", p.beta);
    put(pj, "alpha", p.alpha);
    put(pj, "scale", p.scale);
    put(pj, "model", p.model);
    policies.push_back(std::move(pj));
  }
  json j{{"environment", env},
         {"policies", policies},
         {"agents", cfg.agents},
         {"horizon", cfg.horizon},
         {"repetitions", cfg.repetitions},
         {"seed", cfg.seed},
         {"output", cfg.output.string()},
         {"workers", cfg.workers},
         {"stride", cfg.stride},
         {"sweep", {{"state_variance", cfg.variance_grid}, {"agents", cfg.agent_grid}}}};
  return j.dump(2);
}

}  // namespace parbandit
