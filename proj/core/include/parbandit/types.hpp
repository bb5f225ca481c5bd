#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace parbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point x = (s, a) in R^d presented to a reward model. Never empty, always finite.
class ContextVector {
 public:
  explicit ContextVector(Vector values);

  std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const { return values_; }
  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

  friend bool operator==(const ContextVector& a, const ContextVector& b) {
    return a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Vector values_;
};

/// Per-agent side information observed at the start of a round.
class State {
 public:
  State() = default;
  explicit State(Vector values);

  std::size_t dim() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const { return values_; }

 private:
  Vector values_;
};

/// Finite ordered list of actions. Each action carries a feature vector that
/// is appended to the state to form a context; scalar actions use a length-1
/// feature vector.
class ActionSet {
 public:
  explicit ActionSet(std::vector<double> scalar_actions);
  explicit ActionSet(std::vector<Vector> action_features);

  /// {0, 1, ..., count - 1}
  static ActionSet integer_range(std::size_t count);

  std::size_t size() const { return features_.size(); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(features_.front().size()); }
  const Vector& features(std::size_t index) const { return features_.at(index); }
  /// First feature of the action, i.e. the action value for scalar sets.
  double value(std::size_t index) const { return features_.at(index)(0); }

 private:
  std::vector<Vector> features_;
};

/// Agent i's outcome for one round: what it played and what it saw.
struct BatchObservation {
  std::size_t round = 0;
  std::size_t agent = 0;
  std::size_t action = 0;
  ContextVector context;
  double reward = 0.0;
};

/// Concatenates (s_1, ..., s_k, a). Throws InvalidInput on non-finite entries.
ContextVector make_context(const State& state, double action);
ContextVector make_context(const State& state, const Vector& action_features);
ContextVector make_context(const State& state, const ActionSet& actions, std::size_t action);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax_lowest(std::span<const double> scores);

}  // namespace parbandit
