#include "parbandit/results_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parbandit/errors.hpp"

#ifndef PARBANDIT_VERSION
#define PARBANDIT_VERSION "unknown"
#endif

namespace parbandit {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

/// Whole-field parse; from_chars also accepts subnormals, which stod rejects.
template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<ResultRow> result_rows(const SweepResult& result, std::size_t stride) {
  if (stride == 0) throw InvalidInput("stride must be >= 1");
  std::vector<ResultRow> rows;
  for (const auto& point : result.points) {
    for (const auto& s : point.policies) {
      for (std::size_t k = 0; k < s.curves.size(); ++k) {
        const auto& curve = s.curves[k];
        for (std::size_t t = 1; t <= curve.size(); ++t) {
          if (t % stride != 0 && t != curve.size()) continue;
          rows.push_back(ResultRow{s.policy, result.variable, point.value, k, t, curve[t - 1]});
        }
      }
    }
  }
  return rows;
}

void write_results_csv(const SweepResult& result, std::ostream& out, std::size_t stride) {
  out << kResultsHeader << '\n';
  for (const auto& r : result_rows(result, stride)) {
    out << r.policy << ',' << r.sweep_var << ',' << fmt17(r.sweep_value) << ',' << r.repetition << ',' << r.round
        << ',' << fmt17(r.cum_regret) << '\n';
  }
}

void write_results_csv(const SweepResult& result, const std::filesystem::path& path, std::size_t stride) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_results_csv(result, out, stride);
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) throw ParseError("results: line 1: unexpected header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw ParseError("results: line " + std::to_string(line_no) + ": expected 6 fields");
    ResultRow r;
    r.policy = f[0];
    r.sweep_var = f[1];
    if (!parse_number(f[2], r.sweep_value) || !parse_number(f[3], r.repetition) || !parse_number(f[4], r.round) ||
        !parse_number(f[5], r.cum_regret)) {
      throw ParseError("results: line " + std::to_string(line_no) + ": malformed number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_results_csv(in);
}

std::filesystem::path metadata_path(const std::filesystem::path& results) {
  auto p = results;
  p += ".meta.json";
  return p;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  // Worker count and output location do not affect results.
  auto c = cfg;
  c.workers = 1;
  c.output.clear();
  return fnv1a64(experiment_config_to_json(c));
}

void write_metadata(const std::filesystem::path& results, const ExperimentConfig& cfg, const std::string& command,
                    const SweepResult* result) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
  nlohmann::json j{{"version", version()},
                   {"command", command},
                   {"seed", cfg.seed},
                   {"config_hash", hash},
                   {"config", nlohmann::json::parse(experiment_config_to_json(cfg))}};
  if (result) {
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& point : result->points) {
      for (const auto& s : point.policies) {
        nlohmann::json entry{{"policy", s.policy},
                             {"sweep_var", result->variable},
                             {"sweep_value", point.value},
                             {"failures", s.failures}};
        if (std::isfinite(s.mean)) {
          entry["mean_final_regret"] = s.mean;
          entry["stderr"] = s.stderr_mean;
        }
        summary.push_back(std::move(entry));
      }
    }
    j["summary"] = std::move(summary);
  }
  const auto path = metadata_path(results);
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

std::string version() { return PARBANDIT_VERSION; }

}  // namespace parbandit
