#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "parbandit/config.hpp"
#include "parbandit/experiment.hpp"

namespace parbandit {

inline constexpr std::string_view kResultsHeader = "policy,sweep_var,sweep_value,repetition,round,cum_regret";

/// One row of the long-format results file. Rounds count from 1.
struct ResultRow {
  std::string policy;
  std::string sweep_var;
  double sweep_value = 0.0;
  std::size_t repetition = 0;
  std::size_t round = 0;
  double cum_regret = 0.0;

  bool operator==(const ResultRow&) const = default;
};

/// Rows for every successful repetition, keeping rounds t with t % stride == 0
/// plus the final round. Ordered by (point, policy, repetition, round).
std::vector<ResultRow> result_rows(const SweepResult& result, std::size_t stride = 1);

/// Numbers use 17 significant digits.
void write_results_csv(const SweepResult& result, std::ostream& out, std::size_t stride = 1);
void write_results_csv(const SweepResult& result, const std::filesystem::path& path, std::size_t stride = 1);
std::vector<ResultRow> read_results_csv(std::istream& in);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

/// Companion `<output>.meta.json`: config hash, seed, code version, command.
std::filesystem::path metadata_path(const std::filesystem::path& results);
std::uint64_t config_hash(const ExperimentConfig& cfg);
void write_metadata(const std::filesystem::path& results, const ExperimentConfig& cfg, const std::string& command,
                    const SweepResult* result = nullptr);

/// Library version string.
std::string version();

}  // namespace parbandit
