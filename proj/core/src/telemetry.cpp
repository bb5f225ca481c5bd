#include "parbandit/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "parbandit/environments.hpp"
#include "parbandit/errors.hpp"
#include "parbandit/logistic_model.hpp"

namespace parbandit {

namespace {

constexpr std::array<std::string_view, 9> kColumns{"cell_id", "hour", "a2_threshold", "f1", "f2",
                                                   "f3",      "f4",   "f5",           "reward"};

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string location(std::string_view source, std::size_t row, std::size_t line) {
  std::ostringstream os;
  os << source << ": row " << row << " (line " << line << ")";
  return os.str();
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

bool valid_cell_id(std::string_view id) {
  return !id.empty() && id.find_first_of(",\"\r\n") == std::string_view::npos;
}

}  // namespace

TelemetryTable TelemetryTable::from_records(std::vector<TelemetryRecord> records) {
  std::map<std::string, std::vector<TelemetryRecord>> grouped;
  for (auto& r : records) {
    if (!valid_cell_id(r.cell_id)) throw DataError("invalid cell id '" + r.cell_id + "'");
    if (!std::isfinite(r.a2_threshold)) throw DataError("non-finite threshold in cell " + r.cell_id);
    for (double f : r.features) {
      if (!std::isfinite(f)) throw DataError("non-finite feature in cell " + r.cell_id);
    }
    if (!(r.reward >= 0.0 && r.reward <= 1.0)) {
      throw DataError("reward outside [0, 1] in cell " + r.cell_id + " hour " + std::to_string(r.hour));
    }
    grouped[r.cell_id].push_back(std::move(r));
  }
  TelemetryTable t;
  for (auto& [id, rows] : grouped) {
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.hour < b.hour; });
    for (std::size_t k = 1; k < rows.size(); ++k) {
      if (rows[k].hour == rows[k - 1].hour) {
        throw DataError("duplicate (cell, hour) = (" + id + ", " + std::to_string(rows[k].hour) + ")");
      }
    }
    t.cells_.push_back(id);
    t.by_cell_.push_back(std::move(rows));
  }
  return t;
}

std::size_t TelemetryTable::record_count() const {
  std::size_t n = 0;
  for (const auto& rows : by_cell_) n += rows.size();
  return n;
}

std::vector<TelemetryRecord> TelemetryTable::all_records() const {
  std::vector<TelemetryRecord> out;
  out.reserve(record_count());
  for (const auto& rows : by_cell_) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

std::vector<std::int64_t> TelemetryTable::hours() const {
  std::set<std::int64_t> all;
  for (const auto& rows : by_cell_) {
    for (const auto& r : rows) all.insert(r.hour);
  }
  return {all.begin(), all.end()};
}

std::vector<std::pair<std::size_t, std::int64_t>> TelemetryTable::missing_hours() const {
  const auto all = hours();
  std::vector<std::pair<std::size_t, std::int64_t>> out;
  for (std::size_t c = 0; c < by_cell_.size(); ++c) {
    for (auto h : all) {
      if (find(c, h) == nullptr) out.emplace_back(c, h);
    }
  }
  return out;
}

const TelemetryRecord* TelemetryTable::find(std::size_t cell, std::int64_t hour) const {
  const auto& rows = by_cell_.at(cell);
  auto it = std::lower_bound(rows.begin(), rows.end(), hour, [](const auto& r, std::int64_t h) { return r.hour < h; });
  return it != rows.end() && it->hour == hour ? &*it : nullptr;
}

TelemetryTable parse_telemetry_csv(std::istream& in, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(std::string(source) + ": empty file, expected a header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  if (line != kTelemetryHeader) {
    const auto got = split_commas(line);
    for (auto col : kColumns) {
      if (std::find(got.begin(), got.end(), col) == got.end()) {
        throw ParseError(std::string(source) + ": line 1: missing column '" + std::string(col) + "'");
      }
    }
    throw ParseError(std::string(source) + ": line 1: header must be exactly '" + std::string(kTelemetryHeader) + "'");
  }

  std::vector<TelemetryRecord> records;
  std::map<std::pair<std::string, std::int64_t>, std::size_t> seen;
  std::size_t line_no = 1;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto where = [&] { return location(source, row, line_no); };
    const auto fields = split_commas(line);
    if (fields.size() != kColumns.size()) {
      throw ParseError(where() + ": expected " + std::to_string(kColumns.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    TelemetryRecord r;
    r.cell_id = std::string(fields[0]);
    if (!valid_cell_id(r.cell_id)) throw ParseError(where() + ": empty or invalid cell_id");
    if (!parse_number(fields[1], r.hour)) {
      throw ParseError(where() + ": field 'hour' is not an integer: '" + std::string(fields[1]) + "'");
    }
    auto real = [&](std::size_t k, double& out) {
      if (!parse_number(fields[k], out) || !std::isfinite(out)) {
        throw ParseError(where() + ": field '" + std::string(kColumns[k]) + "' is not a finite number: '" +
                         std::string(fields[k]) + "'");
      }
    };
    real(2, r.a2_threshold);
    for (std::size_t f = 0; f < kTelemetryFeatures; ++f) real(3 + f, r.features[f]);
    real(8, r.reward);
    if (r.reward < 0.0 || r.reward > 1.0) {
      throw ParseError(where() + ": reward " + std::string(fields[8]) + " outside [0, 1]");
    }
    auto [it, fresh] = seen.emplace(std::make_pair(r.cell_id, r.hour), row);
    if (!fresh) {
      throw ParseError(where() + ": duplicate (cell_id, hour) = (" + r.cell_id + ", " + std::to_string(r.hour) +
                       "), first seen at row " + std::to_string(it->second));
    }
    records.push_back(std::move(r));
  }
  return TelemetryTable::from_records(std::move(records));
}

TelemetryTable load_telemetry_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open telemetry file " + path.string());
  return parse_telemetry_csv(in, path.string());
}

void write_telemetry_csv(const TelemetryTable& table, std::ostream& out) {
  std::string buf(kTelemetryHeader);
  buf += '\n';
  for (std::size_t c = 0; c < table.cell_count(); ++c) {
    for (const auto& r : table.records(c)) {
      buf += r.cell_id;
      buf += ',';
      buf += std::to_string(r.hour);
      buf += ',';
      append_double(buf, r.a2_threshold);
      for (double f : r.features) {
        buf += ',';
        append_double(buf, f);
      }
      buf += ',';
      append_double(buf, r.reward);
      buf += '\n';
    }
    out << buf;
    buf.clear();
  }
  out << buf;
}

void save_telemetry_csv(const TelemetryTable& table, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_telemetry_csv(table, out);
  out.flush();
  if (!out) throw DataError("write failed: " + path.string());
}

FeatureRow FeatureScaling::apply(const FeatureRow& row) const {
  FeatureRow out{};
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) out[k] = (row[k] - mean[k]) / scale[k];
  return out;
}

FeatureScaling fit_feature_scaling(std::span<const TelemetryRecord> records) {
  if (records.size() < 2) throw InvalidInput("standardisation needs at least 2 records");
  const double n = static_cast<double>(records.size());
  FeatureScaling s;
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    double mean = 0.0;
    for (const auto& r : records) mean += r.features[k];
    mean /= n;
    double ss = 0.0;
    for (const auto& r : records) ss += (r.features[k] - mean) * (r.features[k] - mean);
    const double sd = std::sqrt(ss / n);
    // A column is treated as constant when its spread is at rounding level.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      s.flagged[k] = true;
      s.mean[k] = 0.0;
      s.scale[k] = 1.0;
    } else {
      s.mean[k] = mean;
      s.scale[k] = sd;
    }
  }
  return s;
}

TelemetryTable apply_feature_scaling(const TelemetryTable& table, const FeatureScaling& scaling) {
  auto records = table.all_records();
  for (auto& r : records) r.features = scaling.apply(r.features);
  return TelemetryTable::from_records(std::move(records));
}

std::pair<TelemetryTable, FeatureScaling> standardize_features(const TelemetryTable& table) {
  const auto records = table.all_records();
  auto scaling = fit_feature_scaling(records);
  return {apply_feature_scaling(table, scaling), scaling};
}

State ContextEncoding::state(const FeatureRow& features) const {
  Vector s(static_cast<Eigen::Index>(kStateDim));
  s(0) = 1.0;
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    s(static_cast<Eigen::Index>(k) + 1) = (features[k] - feature_mean[k]) / feature_scale[k];
  }
  return State(std::move(s));
}

ContextVector ContextEncoding::context(const FeatureRow& features, double threshold) const {
  return make_context(state(features), action(threshold));
}

Vector ContextEncoding::reparameterize(const Vector& theta, const ContextEncoding& target) const {
  if (static_cast<std::size_t>(theta.size()) != kContextDim) throw InvalidInput("theta has wrong length");
  Vector out(theta.size());
  double intercept = theta(0);
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    const auto i = static_cast<Eigen::Index>(k) + 1;
    out(i) = theta(i) * target.feature_scale[k] / feature_scale[k];
    intercept += theta(i) * (target.feature_mean[k] - feature_mean[k]) / feature_scale[k];
  }
  const auto ia = static_cast<Eigen::Index>(kContextDim) - 1;
  out(ia) = theta(ia) * target.action_scale / action_scale;
  intercept += theta(ia) * (target.action_mean - action_mean) / action_scale;
  out(0) = intercept;
  return out;
}

void SyntheticTelemetryConfig::validate() const {
  if (cells == 0) throw InvalidInput("synthetic telemetry needs at least one cell");
  if (hours == 0) throw InvalidInput("synthetic telemetry needs at least one hour");
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    if (!std::isfinite(feature_mean[k]) || !(feature_sd[k] >= 0.0) || !std::isfinite(diurnal_amplitude[k])) {
      throw InvalidInput("feature distribution parameters must be finite, sd >= 0");
    }
  }
  if (threshold_grid.empty()) throw InvalidInput("threshold grid must not be empty");
  for (double t : threshold_grid) {
    if (!std::isfinite(t)) throw InvalidInput("threshold grid must be finite");
  }
  if (!std::isfinite(default_threshold)) throw InvalidInput("default threshold must be finite");
  if (!(exploration >= 0.0 && exploration <= 1.0)) throw InvalidInput("exploration must lie in [0, 1]");
  if (!std::isfinite(threshold_mean) || !(threshold_scale > 0.0)) throw InvalidInput("threshold scale must be > 0");
  if (global_theta.size() != ContextEncoding::kContextDim) {
    throw InvalidInput("global_theta must have " + std::to_string(ContextEncoding::kContextDim) + " entries");
  }
  for (double v : global_theta) {
    if (!std::isfinite(v)) throw InvalidInput("global_theta must be finite");
  }
  if (!(local_scale >= 0.0)) throw InvalidInput("local_scale must be >= 0");
  if (reward_trials < 0) throw InvalidInput("reward_trials must be >= 0");
}

SyntheticTelemetry generate_synthetic_telemetry(const SyntheticTelemetryConfig& cfg, RngStream& rng) {
  cfg.validate();
  SyntheticTelemetry out;
  out.encoding.action_mean = cfg.threshold_mean;
  out.encoding.action_scale = cfg.threshold_scale;
  for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
    out.encoding.feature_mean[k] = cfg.feature_mean[k];
    out.encoding.feature_scale[k] = cfg.feature_sd[k] > 0.0 ? cfg.feature_sd[k] : 1.0;
  }
  const Vector global = Eigen::Map<const Vector>(cfg.global_theta.data(), static_cast<Eigen::Index>(cfg.global_theta.size()));
  const RewardModel reward{cfg.reward_trials};
  const int width = std::max<int>(3, static_cast<int>(std::to_string(cfg.cells - 1).size()));

  std::vector<TelemetryRecord> records;
  records.reserve(cfg.cells * cfg.hours);
  std::vector<std::pair<std::string, Vector>> truth;
  for (std::size_t c = 0; c < cfg.cells; ++c) {
    std::string id = std::to_string(c);
    id = "cell_" + std::string(static_cast<std::size_t>(width) - std::min(id.size(), static_cast<std::size_t>(width)), '0') + id;
    const Vector theta = global + cfg.local_scale * rng.normal_vector(global.size());
    const double phase = 24.0 * rng.uniform();
    for (std::size_t h = 0; h < cfg.hours; ++h) {
      TelemetryRecord r;
      r.cell_id = id;
      r.hour = static_cast<std::int64_t>(h);
      const double wave = std::sin(2.0 * std::numbers::pi * (static_cast<double>(h) + phase) / 24.0);
      for (std::size_t k = 0; k < kTelemetryFeatures; ++k) {
        const double z = cfg.diurnal_amplitude[k] * wave + rng.normal();
        r.features[k] = std::max(0.0, cfg.feature_mean[k] + cfg.feature_sd[k] * z);
      }
      const double u = rng.uniform();
      const std::size_t pick = rng.uniform_index(cfg.threshold_grid.size());
      r.a2_threshold = u < cfg.exploration ? cfg.threshold_grid[pick] : cfg.default_threshold;
      const double p = expected_reward_logistic(out.encoding.context(r.features, r.a2_threshold), theta);
      r.reward = reward.draw(p, rng);
      records.push_back(std::move(r));
    }
    truth.emplace_back(id, theta);
  }
  out.table = TelemetryTable::from_records(std::move(records));
  std::sort(truth.begin(), truth.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [id, theta] : truth) out.cell_theta.push_back(std::move(theta));
  return out;
}

}  // namespace parbandit
