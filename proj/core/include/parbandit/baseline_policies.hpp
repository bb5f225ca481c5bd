#pragma once

#include <functional>
#include <string>
#include <vector>

#include "parbandit/policy.hpp"

namespace parbandit {

/// Replays the actions of the strategy that collected a log.
class LoggingReplayPolicy final : public Policy {
 public:
  std::string name() const override { return "logging"; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation>) override {}
};

class FixedActionPolicy final : public Policy {
 public:
  explicit FixedActionPolicy(std::size_t action) : action_(action) {}
  std::string name() const override { return "fixed"; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation>) override {}

 private:
  std::size_t action_;
};

class UniformRandomPolicy final : public Policy {
 public:
  std::string name() const override { return "random"; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation>) override {}
};

/// Picks the action with the highest true expected reward; zero regret.
class OraclePolicy final : public Policy {
 public:
  using ExpectedReward = std::function<double(std::size_t agent, const State& state, std::size_t action)>;

  explicit OraclePolicy(ExpectedReward expected) : expected_(std::move(expected)) {}
  std::string name() const override { return "oracle"; }

 protected:
  std::vector<std::size_t> do_select(const RoundInput& in, RngStream& rng) override;
  void do_observe(std::span<const BatchObservation>) override {}

 private:
  ExpectedReward expected_;
};

}  // namespace parbandit
