#include "parbandit/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "parbandit/errors.hpp"

namespace parbandit {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

std::vector<Vector> as_features(const std::vector<double>& scalars) {
  std::vector<Vector> out;
  out.reserve(scalars.size());
  for (double a : scalars) out.push_back(Vector::Constant(1, a));
  return out;
}

}  // namespace

ContextVector::ContextVector(Vector values) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidInput("context vector must have dimension > 0");
  if (!all_finite(values_)) throw InvalidInput("context vector has a non-finite entry");
}

State::State(Vector values) : values_(std::move(values)) {
  if (!all_finite(values_)) throw InvalidInput("state has a non-finite entry");
}

ActionSet::ActionSet(std::vector<double> scalar_actions) : ActionSet(as_features(scalar_actions)) {}

ActionSet::ActionSet(std::vector<Vector> action_features) : features_(std::move(action_features)) {
  if (features_.empty()) throw InvalidInput("action set must not be empty");
  const auto dim = features_.front().size();
  if (dim == 0) throw InvalidInput("action features must have dimension > 0");
  for (std::size_t i = 0; i < features_.size(); ++i) {
    if (features_[i].size() != dim) throw InvalidInput("action features have inconsistent dimensions");
    if (!all_finite(features_[i])) throw InvalidInput("action " + std::to_string(i) + " is not finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (features_[j] == features_[i]) {
        throw InvalidInput("duplicate action at positions " + std::to_string(j) + " and " +
                           std::to_string(i));
      }
    }
  }
}

ActionSet ActionSet::integer_range(std::size_t count) {
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = static_cast<double>(i);
  return ActionSet(std::move(values));
}

ContextVector make_context(const State& state, const Vector& action_features) {
  Vector x(state.values().size() + action_features.size());
  x << state.values(), action_features;
  return ContextVector(std::move(x));
}

ContextVector make_context(const State& state, double action) {
  return make_context(state, Vector::Constant(1, action));
}

ContextVector make_context(const State& state, const ActionSet& actions, std::size_t action) {
  return make_context(state, actions.features(action));
}

std::size_t argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw InvalidInput("argmax over an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace parbandit
