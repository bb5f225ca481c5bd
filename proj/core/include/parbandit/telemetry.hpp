#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "parbandit/rng.hpp"
#include "parbandit/types.hpp"

namespace parbandit {

inline constexpr std::size_t kTelemetryFeatures = 5;
inline constexpr std::string_view kTelemetryHeader = "cell_id,hour,a2_threshold,f1,f2,f3,f4,f5,reward";

using FeatureRow = std::array<double, kTelemetryFeatures>;

/// One cell-hour. Features, in order: downlink average active users, average
/// users, cell-edge channel quality index, two small-packet traffic covariates.
/// reward = 1 - (share of users below the throughput floor), so higher is better.
struct TelemetryRecord {
  std::string cell_id;
  std::int64_t hour = 0;
  double a2_threshold = 0.0;
  FeatureRow features{};
  double reward = 0.0;

  bool operator==(const TelemetryRecord&) const = default;
};

/// Records grouped by cell (cells sorted by id, records sorted by hour).
class TelemetryTable {
 public:
  TelemetryTable() = default;

  /// Validates rewards in [0, 1], finite values and unique (cell, hour).
  /// Throws DataError otherwise.
  static TelemetryTable from_records(std::vector<TelemetryRecord> records);

  std::size_t cell_count() const { return cells_.size(); }
  std::size_t record_count() const;
  const std::vector<std::string>& cells() const { return cells_; }
  const std::vector<TelemetryRecord>& records(std::size_t cell) const { return by_cell_.at(cell); }
  std::vector<TelemetryRecord> all_records() const;

  /// Sorted union of hours across cells.
  std::vector<std::int64_t> hours() const;
  /// (cell index, hour) pairs absent from a cell but present elsewhere.
  std::vector<std::pair<std::size_t, std::int64_t>> missing_hours() const;
  const TelemetryRecord* find(std::size_t cell, std::int64_t hour) const;

  bool operator==(const TelemetryTable&) const = default;

 private:
  std::vector<std::string> cells_;
  std::vector<std::vector<TelemetryRecord>> by_cell_;
};

TelemetryTable load_telemetry_csv(const std::filesystem::path& path);
/// `source` names the input in diagnostics.
TelemetryTable parse_telemetry_csv(std::istream& in, std::string_view source = "<stream>");
void save_telemetry_csv(const TelemetryTable& table, const std::filesystem::path& path);
void write_telemetry_csv(const TelemetryTable& table, std::ostream& out);

/// Per-feature affine map (x - mean) / scale. Zero-variance columns are
/// flagged and left unchanged (mean 0, scale 1).
struct FeatureScaling {
  FeatureRow mean{};
  FeatureRow scale{1.0, 1.0, 1.0, 1.0, 1.0};
  std::array<bool, kTelemetryFeatures> flagged{};

  FeatureRow apply(const FeatureRow& row) const;
};

/// Mean and population standard deviation of each feature. Needs >= 2 records.
FeatureScaling fit_feature_scaling(std::span<const TelemetryRecord> records);
TelemetryTable apply_feature_scaling(const TelemetryTable& table, const FeatureScaling& scaling);
std::pair<TelemetryTable, FeatureScaling> standardize_features(const TelemetryTable& table);

/// Maps raw telemetry to model contexts x = (1, scaled features, scaled threshold).
struct ContextEncoding {
  FeatureRow feature_mean{};
  FeatureRow feature_scale{1.0, 1.0, 1.0, 1.0, 1.0};
  double action_mean = 0.0;
  double action_scale = 1.0;

  static constexpr std::size_t kStateDim = kTelemetryFeatures + 1;
  static constexpr std::size_t kContextDim = kStateDim + 1;

  State state(const FeatureRow& features) const;
  double action(double threshold) const { return (threshold - action_mean) / action_scale; }
  ContextVector context(const FeatureRow& features, double threshold) const;
  /// Parameter under `target` that yields the same logits as `theta` under this encoding.
  Vector reparameterize(const Vector& theta, const ContextEncoding& target) const;
};

/// Stand-in for proprietary network telemetry: hierarchical logistic ground
/// truth, diurnal traffic features and a noisy fixed-threshold logging policy.
struct SyntheticTelemetryConfig {
  std::size_t cells = 105;
  std::size_t hours = 120;
  FeatureRow feature_mean{12.0, 40.0, 8.0, 150.0, 60.0};
  FeatureRow feature_sd{4.0, 12.0, 2.0, 50.0, 20.0};
  /// Amplitude of the 24 h sinusoid, in units of feature_sd.
  FeatureRow diurnal_amplitude{0.8, 0.8, -0.3, 0.6, 0.6};
  std::vector<double> threshold_grid{-110.0, -105.0, -100.0, -95.0, -90.0, -85.0, -80.0};
  double default_threshold = -95.0;
  /// Probability that the logging policy deviates to a uniformly drawn grid value.
  double exploration = 0.2;
  /// Nominal encoding in which global_theta is expressed.
  double threshold_mean = -95.0;
  double threshold_scale = 10.0;
  /// (intercept, f1..f5, threshold) in the nominal encoding.
  std::vector<double> global_theta{1.0, -0.4, -0.2, 0.5, -0.1, 0.1, 0.2};
  /// Std of per-cell offsets added to every coordinate of global_theta.
  double local_scale = 0.5;
  /// Users per cell-hour; 0 gives Bernoulli rewards.
  int reward_trials = 20;

  void validate() const;
};

struct SyntheticTelemetry {
  TelemetryTable table;
  /// Encoding built from the nominal feature/threshold statistics.
  ContextEncoding encoding;
  /// Per-cell truth under `encoding`, in table cell order.
  std::vector<Vector> cell_theta;
};

SyntheticTelemetry generate_synthetic_telemetry(const SyntheticTelemetryConfig& cfg, RngStream& rng);

}  // namespace parbandit
