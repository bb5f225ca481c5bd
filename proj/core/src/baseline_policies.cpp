#include "parbandit/baseline_policies.hpp"

#include <string>

#include "parbandit/errors.hpp"

namespace parbandit {

std::vector<std::size_t> LoggingReplayPolicy::do_select(const RoundInput& in, RngStream&) {
  if (in.logged_actions.size() != in.states.size()) {
    throw DataError("no logged actions for round " + std::to_string(in.round));
  }
  return {in.logged_actions.begin(), in.logged_actions.end()};
}

std::vector<std::size_t> FixedActionPolicy::do_select(const RoundInput& in, RngStream&) {
  return std::vector<std::size_t>(in.states.size(), action_);
}

std::vector<std::size_t> UniformRandomPolicy::do_select(const RoundInput& in, RngStream& rng) {
  std::vector<std::size_t> chosen(in.states.size());
  for (auto& a : chosen) a = rng.uniform_index(in.actions->size());
  return chosen;
}

std::vector<std::size_t> OraclePolicy::do_select(const RoundInput& in, RngStream&) {
  std::vector<std::size_t> chosen(in.states.size());
  std::vector<double> values(in.actions->size());
  for (std::size_t i = 0; i < in.states.size(); ++i) {
    for (std::size_t a = 0; a < values.size(); ++a) values[a] = expected_(i, in.states[i], a);
    chosen[i] = argmax_lowest(values);
  }
  return chosen;
}

}  // namespace parbandit
