#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "parbandit/rng.hpp"
#include "parbandit/types.hpp"

namespace parbandit {

/// What every agent sees at the start of a round.
struct RoundInput {
  std::size_t round = 0;
  std::span<const State> states;
  const ActionSet* actions = nullptr;
  /// Actions recorded by the data-collection strategy, when replaying a log.
  std::span<const std::size_t> logged_actions;
};

/// Batch policy: choose one action per agent, then absorb all n rewards at once.
///
/// The base class enforces the round protocol: observe_batch must receive
/// exactly one observation per agent, carrying the context selected for that
/// agent in the preceding select_batch.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;

  std::vector<std::size_t> select_batch(const RoundInput& in, RngStream& rng);
  void observe_batch(std::span<const BatchObservation> batch);

 protected:
  virtual std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) = 0;
  virtual void do_observe(std::span<const BatchObservation> batch) = 0;

 private:
  std::vector<ContextVector> pending_;
  std::size_t pending_round_ = 0;
  bool has_pending_ = false;
};

}  // namespace parbandit
