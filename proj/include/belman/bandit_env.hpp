#pragma once

// Stochastic bandit instances, reward sampling and regret accounting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/rng.hpp"

namespace belman {

// How exponential rewards are confined to [0, 1] ("bounded exponential").
enum class Bounding {
  None,      // raw exponential draws
  Resample,  // redraw until the reward is <= 1
  Truncate,  // min(reward, 1)
};

struct BanditInstance {
  RewardFamily family;
  // Bernoulli success probabilities, or exponential rates.
  std::vector<double> theta;
  std::uint64_t horizon = 0;
  Bounding bounding = Bounding::None;

  std::size_t arms() const noexcept { return theta.size(); }

  // Throws ValidationError listing every violated invariant.
  void validate() const {
    std::vector<std::string> errors;
    if (theta.size() < 2) errors.push_back("a bandit needs at least 2 arms");
    for (std::size_t a = 0; a < theta.size(); ++a) {
      const double v = theta[a];
      if (family.kind == FamilyKind::Bernoulli && !(v > 0.0 && v < 1.0)) {
        errors.push_back("Bernoulli mean of arm " + std::to_string(a) + " must lie in (0,1)");
      }
      if (family.kind == FamilyKind::Exponential && !(v > 0.0 && std::isfinite(v))) {
        errors.push_back("exponential rate of arm " + std::to_string(a) + " must be > 0");
      }
    }
    if (family.kind == FamilyKind::Bernoulli && bounding != Bounding::None) {
      errors.push_back("bounding applies to exponential rewards only");
    }
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }

  // Expected reward of each arm under the sampling distribution actually used.
  std::vector<double> true_means() const {
    std::vector<double> out;
    out.reserve(theta.size());
    for (double v : theta) {
      if (family.kind == FamilyKind::Bernoulli) {
        out.push_back(v);
        continue;
      }
      switch (bounding) {
        case Bounding::None:
          out.push_back(1.0 / v);
          break;
        case Bounding::Resample:  // E[X | X <= 1]
          out.push_back(1.0 / v - 1.0 / std::expm1(v));
          break;
        case Bounding::Truncate:  // E[min(X, 1)]
          out.push_back(-std::expm1(-v) / v);
          break;
      }
    }
    return out;
  }
};

inline double sample_reward(const BanditInstance& instance, std::size_t arm, Rng& rng) {
  if (arm >= instance.arms()) throw DomainError("sample_reward: arm index out of range");
  const double v = instance.theta[arm];
  if (instance.family.kind == FamilyKind::Bernoulli) return rng.bernoulli(v) ? 1.0 : 0.0;
  switch (instance.bounding) {
    case Bounding::None:
      return rng.exponential(v);
    case Bounding::Resample:
      for (;;) {
        const double x = rng.exponential(v);
        if (x <= 1.0) return x;
      }
    case Bounding::Truncate:
      return std::min(rng.exponential(v), 1.0);
  }
  return 0.0;
}

// One independent reward stream per arm, so the k-th pull of arm a returns the
// same reward whatever policy is running (common random numbers).
class BanditEnvironment {
 public:
  BanditEnvironment(BanditInstance instance, std::uint64_t seed) : instance_(std::move(instance)) {
    streams_.reserve(instance_.arms());
    for (std::size_t a = 0; a < instance_.arms(); ++a) streams_.emplace_back(mix_seed(seed, a, 0));
  }

  const BanditInstance& instance() const noexcept { return instance_; }

  double pull(std::size_t arm) { return sample_reward(instance_, arm, streams_.at(arm)); }

 private:
  BanditInstance instance_;
  std::vector<Rng> streams_;
};

struct StepRecord {
  std::uint64_t t = 0;  // 1-based
  std::size_t arm = 0;
  double reward = 0.0;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct RunTrace {
  std::vector<StepRecord> steps;

  std::size_t size() const noexcept { return steps.size(); }
  friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

// Pseudo-regret R_t = sum_a (mu* - mu_a) n_a(t), one entry per step.
inline std::vector<double> cumulative_regret(const RunTrace& trace,
                                             const BanditInstance& instance) {
  const auto means = instance.true_means();
  const double best = *std::max_element(means.begin(), means.end());
  std::vector<double> gaps(means.size());
  for (std::size_t a = 0; a < means.size(); ++a) gaps[a] = best - means[a];
  std::vector<std::uint64_t> counts(means.size(), 0);
  std::vector<double> out;
  out.reserve(trace.size());
  for (const auto& s : trace.steps) {
    ++counts.at(s.arm);
    double r = 0.0;
    for (std::size_t a = 0; a < gaps.size(); ++a) r += gaps[a] * static_cast<double>(counts[a]);
    out.push_back(r);
  }
  return out;
}

// Number of pulls, up to each step, of arms whose true mean is below the best.
inline std::vector<std::uint64_t> suboptimal_draws(const RunTrace& trace,
                                                   const BanditInstance& instance) {
  const auto means = instance.true_means();
  const double best = *std::max_element(means.begin(), means.end());
  std::vector<std::uint64_t> out;
  out.reserve(trace.size());
  std::uint64_t n = 0;
  for (const auto& s : trace.steps) {
    if (means.at(s.arm) < best) ++n;
    out.push_back(n);
  }
  return out;
}

}  // namespace belman
