#pragma once

// The BelMan decision loop: pick the arm whose belief-reward is closest (in
// KL) to the pseudobelief-focal-reward, update that arm's belief with the
// observed reward, then re-project all beliefs onto a new pseudobelief.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "belman/bandit_env.hpp"
#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/manifold.hpp"
#include "belman/policy.hpp"
#include "belman/rng.hpp"

namespace belman {

inline constexpr double kScoreTieTolerance = 1e-12;

struct BelManState {
  std::vector<BeliefState> arms;
  PseudobeliefFocal pseudo;
  std::uint64_t t = 0;
  ExposureSchedule schedule = ExposureSchedule::log_schedule();
  std::uint64_t rng_seed = 0;
  Rng rng;
  // Re-project every `ri_every` steps (1 = every step).
  std::uint64_t ri_every = 1;
  // Steps at which the gamma exposure clamp was active.
  std::uint64_t clamped_steps = 0;
};

// Fresh state: every arm at `prior`, and Qbar_0 obtained by projecting the
// priors at tau(1).
inline BelManState make_belman_state(std::size_t arms, const BeliefState& prior,
                                     ExposureSchedule schedule, std::uint64_t seed,
                                     std::uint64_t ri_every = 1) {
  if (arms < 2) throw DomainError("BelMan needs at least 2 arms");
  if (ri_every < 1) throw DomainError("ri_every must be >= 1");
  std::vector<BeliefState> beliefs(arms, prior);
  auto pseudo = ri_projection(beliefs, exposure(schedule, 1));
  return BelManState{std::move(beliefs), pseudo, 0, schedule, seed, Rng(seed), ri_every, 0};
}

inline BelManState make_belman_state(RewardFamily family, std::size_t arms,
                                     ExposureSchedule schedule, std::uint64_t seed,
                                     std::uint64_t ri_every = 1) {
  return make_belman_state(arms, BeliefState::default_prior(family), schedule, seed, ri_every);
}

inline std::vector<double> arm_scores(const BelManState& state) {
  std::vector<double> scores;
  scores.reserve(state.arms.size());
  for (const auto& a : state.arms) scores.push_back(i_projection_score(a, state.pseudo));
  return scores;
}

// I-projection: argmin of the arm scores, ties within 1e-12 broken uniformly
// with the state's own RNG stream.
inline std::size_t select_arm(BelManState& state) {
  const auto scores = arm_scores(state);
  double best = kInf;
  for (double s : scores) best = std::min(best, s);
  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    const bool tied = std::isinf(best) ? scores[a] == best : scores[a] <= best + kScoreTieTolerance;
    if (tied) ties.push_back(a);
  }
  if (ties.size() == 1) return ties.front();
  return ties[state.rng.below(ties.size())];
}

// Bayesian update of the played arm, then the rI-projection at tau(t+1).
inline void absorb(BelManState& state, std::size_t arm, double reward) {
  state.arms.at(arm) = posterior_update(state.arms[arm], reward);
  ++state.t;
  if (state.t % state.ri_every == 0) {
    const double tau = exposure(state.schedule, state.t + 1);
    state.pseudo = ri_projection(state.arms, tau, state.pseudo.pseudo_belief);
    if (state.pseudo.tau_clamped()) ++state.clamped_steps;
  }
}

inline std::pair<BelManState, StepRecord> step(BelManState state,
                                               const std::function<double(std::size_t)>& reward_of) {
  const std::size_t arm = select_arm(state);
  const double reward = reward_of(arm);
  absorb(state, arm, reward);
  const StepRecord record{state.t, arm, reward};
  return {std::move(state), record};
}

inline RunTrace run(BelManState state, BanditEnvironment& env, std::uint64_t horizon) {
  RunTrace trace;
  trace.steps.reserve(horizon);
  for (std::uint64_t i = 0; i < horizon; ++i) {
    auto [next, record] = step(std::move(state), [&](std::size_t a) { return env.pull(a); });
    state = std::move(next);
    trace.steps.push_back(record);
  }
  return trace;
}

class BelManPolicy final : public Policy {
 public:
  BelManPolicy(RewardFamily family, std::size_t arms, ExposureSchedule schedule,
               std::uint64_t seed, std::uint64_t ri_every = 1)
      : state_(make_belman_state(family, arms, schedule, seed, ri_every)) {}

  std::size_t select(std::uint64_t) override { return select_arm(state_); }
  void observe(std::size_t arm, double reward) override { absorb(state_, arm, reward); }
  std::string name() const override { return "belman"; }

  const BelManState& state() const noexcept { return state_; }

 private:
  BelManState state_;
};

}  // namespace belman
