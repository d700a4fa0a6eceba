#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "belman/bandit_env.hpp"

namespace belman {

// A sequential decision rule. select() is called with the 1-based step
// number, then observe() with the reward of the chosen arm.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::size_t select(std::uint64_t t) = 0;
  virtual void observe(std::size_t arm, double reward) = 0;
  virtual std::string name() const = 0;
};

inline RunTrace run_policy(Policy& policy, BanditEnvironment& env, std::uint64_t horizon) {
  RunTrace trace;
  trace.steps.reserve(horizon);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const std::size_t arm = policy.select(t);
    const double reward = env.pull(arm);
    policy.observe(arm, reward);
    trace.steps.push_back({t, arm, reward});
  }
  return trace;
}

}  // namespace belman
