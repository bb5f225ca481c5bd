#include "parbandit/policy.hpp"

#include <string>

#include "parbandit/errors.hpp"

namespace parbandit {

std::vector<std::size_t> Policy::select_batch(const RoundInput& in, RngStream& rng) {
  if (in.actions == nullptr) throw InvalidInput("round input has no action set");
  if (in.states.empty()) throw InvalidInput("round input has no agents");
  std::vector<std::size_t> chosen = do_select(in, rng);
  if (chosen.size() != in.states.size()) {
    throw InvalidInput(name() + " returned " + std::to_string(chosen.size()) + " actions for " +
                       std::to_string(in.states.size()) + " agents");
  }
  pending_.clear();
  pending_.reserve(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    if (chosen[i] >= in.actions->size()) {
      throw InvalidInput(name() + " selected action " + std::to_string(chosen[i]) + " outside the action set");
    }
    pending_.push_back(make_context(in.states[i], *in.actions, chosen[i]));
  }
  pending_round_ = in.round;
  has_pending_ = true;
  return chosen;
}

void Policy::observe_batch(std::span<const BatchObservation> batch) {
  if (!has_pending_) throw DataError(name() + ": observe_batch without a preceding select_batch");
  if (batch.size() != pending_.size()) {
    throw DataError(name() + ": expected " + std::to_string(pending_.size()) + " observations, got " +
                    std::to_string(batch.size()));
  }
  std::vector<bool> seen(pending_.size(), false);
  for (const auto& obs : batch) {
    if (obs.agent >= pending_.size()) throw DataError("observation for unknown agent " + std::to_string(obs.agent));
    if (seen[obs.agent]) throw DataError("duplicate observation for agent " + std::to_string(obs.agent));
    seen[obs.agent] = true;
    if (obs.round != pending_round_) throw DataError("observation round does not match the selected round");
    if (!(obs.context == pending_[obs.agent])) {
      throw DataError("observation context for agent " + std::to_string(obs.agent) +
                      " differs from the selected context");
    }
  }
  do_observe(batch);
  has_pending_ = false;
}

}  // namespace parbandit
