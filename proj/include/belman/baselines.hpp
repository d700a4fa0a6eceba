#pragma once

// Reference bandit algorithms: UCB, UCB-tuned, KL-UCB (Bernoulli and
// exponential divergences), Thompson sampling, Bayes-UCB and uniform random.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/policy.hpp"
#include "belman/rng.hpp"

namespace belman {

struct ArmStats {
  std::uint64_t pulls = 0;
  double reward_sum = 0.0;
  double reward_sq_sum = 0.0;
  BeliefState posterior = BeliefState::default_prior(RewardFamily::bernoulli());

  explicit ArmStats(RewardFamily family = RewardFamily::bernoulli())
      : posterior(BeliefState::default_prior(family)) {}

  double mean() const noexcept {
    return pulls == 0 ? 0.0 : reward_sum / static_cast<double>(pulls);
  }

  void record(double reward) {
    posterior = posterior_update(posterior, reward);
    ++pulls;
    reward_sum += reward;
    reward_sq_sum += reward * reward;
  }
};

// mean + sqrt(2 log t / n); +inf for an unpulled arm.
inline double ucb_index(const ArmStats& s, std::uint64_t t) {
  if (s.pulls == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(s.pulls);
  return s.mean() + std::sqrt(2.0 * std::log(static_cast<double>(t)) / n);
}

// mean + sqrt(log t / n * min(1/4, V)), V = empirical variance + sqrt(2 log t / n).
inline double ucb_tuned_index(const ArmStats& s, std::uint64_t t) {
  if (s.pulls == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(s.pulls);
  const double lt = std::log(static_cast<double>(t));
  const double mean = s.mean();
  const double var = std::max(0.0, s.reward_sq_sum / n - mean * mean);
  const double v = var + std::sqrt(2.0 * lt / n);
  return mean + std::sqrt(lt / n * std::min(0.25, v));
}

// Bernoulli divergence d(p, q) with 0 log 0 = 0.
inline double kl_bernoulli(double p, double q) {
  auto term = [](double x, double y) {
    if (x == 0.0) return 0.0;
    if (y == 0.0) return std::numeric_limits<double>::infinity();
    return x * std::log(x / y);
  };
  return term(p, q) + term(1.0 - p, 1.0 - q);
}

// Divergence between exponential distributions with means p and q.
inline double kl_exponential(double p, double q) {
  const double r = p / q;
  return r - 1.0 - std::log(r);
}

// f(t) = log t + c log log t, and log t where log log t is undefined or negative.
inline double klucb_exploration(std::uint64_t t, double c = 3.0) {
  const double lt = std::log(static_cast<double>(t));
  return t < 3 ? lt : lt + c * std::log(lt);
}

inline constexpr double kKlUcbTol = 1e-8;

// max{ q >= p : n d(p, q) <= f }, by bisection.
inline double klucb_index(const ArmStats& s, double exploration, RewardFamily family) {
  if (s.pulls == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(s.pulls);
  const double bound = exploration / n;
  if (family.kind == FamilyKind::Bernoulli) {
    const double p = std::clamp(s.mean(), 0.0, 1.0);
    double lo = p, hi = 1.0;
    while (hi - lo > kKlUcbTol) {
      const double mid = 0.5 * (lo + hi);
      (kl_bernoulli(p, mid) <= bound ? lo : hi) = mid;
    }
    return lo;
  }
  const double p = std::max(s.mean(), 1e-12);
  double lo = p, hi = 2.0 * p;
  while (kl_exponential(p, hi) <= bound) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > kKlUcbTol * std::max(1.0, lo)) {
    const double mid = 0.5 * (lo + hi);
    (kl_exponential(p, mid) <= bound ? lo : hi) = mid;
  }
  return lo;
}

// Quantile of the posterior mean reward: theta for Bernoulli, 1/theta for
// exponential rewards.
inline double posterior_reward_quantile(const BeliefState& b, double level) {
  if (b.family().kind == FamilyKind::Bernoulli) {
    if (level <= 0.0) return 0.0;
    if (level >= 1.0) return 1.0;
    return boost::math::ibeta_inv(b.alpha(), b.beta(), level);
  }
  if (level <= 0.0) return 0.0;
  if (level >= 1.0) return std::numeric_limits<double>::infinity();
  const double theta = boost::math::gamma_p_inv(b.alpha(), 1.0 - level) / b.beta();
  return theta > 0.0 ? 1.0 / theta : std::numeric_limits<double>::infinity();
}

namespace detail {

template <class Score>
std::size_t argmax_random_ties(std::size_t n, Score&& score, Rng& rng) {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t a = 0; a < n; ++a) {
    const double v = score(a);
    if (v > best) {
      best = v;
      ties.assign(1, a);
    } else if (v == best) {
      ties.push_back(a);
    }
  }
  if (ties.empty()) return rng.below(n);
  return ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];
}

inline std::vector<std::size_t> unpulled(std::span<const ArmStats> stats) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < stats.size(); ++a) {
    if (stats[a].pulls == 0) out.push_back(a);
  }
  return out;
}

}  // namespace detail

// Sample theta from every posterior and play the best sampled mean reward
// (argmax theta for Bernoulli, argmin rate for exponential).
inline std::size_t thompson_select(std::span<const ArmStats> stats, Rng& rng) {
  std::vector<double> draws;
  draws.reserve(stats.size());
  for (const auto& s : stats) {
    const auto& b = s.posterior;
    draws.push_back(b.family().kind == FamilyKind::Bernoulli ? rng.beta(b.alpha(), b.beta())
                                                             : -rng.gamma(b.alpha(), b.beta()));
  }
  return detail::argmax_random_ties(draws.size(), [&](std::size_t a) { return draws[a]; }, rng);
}

// argmax of the posterior mean-reward quantile at level 1 - 1/t.
inline std::size_t bayes_ucb_select(std::span<const ArmStats> stats, std::uint64_t t, Rng& rng) {
  if (t < 1) throw DomainError("bayes_ucb_select: t must be >= 1");
  const double level = 1.0 - 1.0 / static_cast<double>(t);
  return detail::argmax_random_ties(
      stats.size(), [&](std::size_t a) { return posterior_reward_quantile(stats[a].posterior, level); },
      rng);
}

inline std::size_t random_select(std::size_t arms, Rng& rng) {
  if (arms < 1) throw DomainError("random_select: need at least one arm");
  return rng.below(arms);
}

// Index and sampling policies share per-arm statistics. Every policy except
// Random first plays each unpulled arm once, in random order.
class StatsPolicy : public Policy {
 public:
  StatsPolicy(RewardFamily family, std::size_t arms, std::uint64_t seed)
      : family_(family), stats_(arms, ArmStats(family)), rng_(seed) {}

  std::size_t select(std::uint64_t t) final {
    const auto fresh = detail::unpulled(stats_);
    if (!fresh.empty() && forces_initial_pulls()) return fresh[rng_.below(fresh.size())];
    return choose(t);
  }
  void observe(std::size_t arm, double reward) final { stats_.at(arm).record(reward); }

  std::span<const ArmStats> stats() const noexcept { return stats_; }

 protected:
  virtual std::size_t choose(std::uint64_t t) = 0;
  virtual bool forces_initial_pulls() const { return true; }

  RewardFamily family_;
  std::vector<ArmStats> stats_;
  Rng rng_;
};

class UcbPolicy final : public StatsPolicy {
 public:
  using StatsPolicy::StatsPolicy;
  std::string name() const override { return "ucb"; }

 protected:
  std::size_t choose(std::uint64_t t) override {
    return detail::argmax_random_ties(
        stats_.size(), [&](std::size_t a) { return ucb_index(stats_[a], t); }, rng_);
  }
};

class UcbTunedPolicy final : public StatsPolicy {
 public:
  using StatsPolicy::StatsPolicy;
  std::string name() const override { return "ucb-tuned"; }

 protected:
  std::size_t choose(std::uint64_t t) override {
    return detail::argmax_random_ties(
        stats_.size(), [&](std::size_t a) { return ucb_tuned_index(stats_[a], t); }, rng_);
  }
};

// Divergence defaults to the reward family's; an exponential divergence on
// Bernoulli-coded rewards is rejected.
class KlUcbPolicy final : public StatsPolicy {
 public:
  KlUcbPolicy(RewardFamily family, std::size_t arms, std::uint64_t seed, double c = 3.0)
      : KlUcbPolicy(family, family, arms, seed, c) {}
  KlUcbPolicy(RewardFamily family, RewardFamily divergence, std::size_t arms, std::uint64_t seed,
              double c = 3.0)
      : StatsPolicy(family, arms, seed), divergence_(divergence), c_(c) {
    if (family.kind == FamilyKind::Bernoulli && divergence.kind == FamilyKind::Exponential) {
      throw DomainError("KL-UCB: exponential divergence needs exponential rewards");
    }
  }
  std::string name() const override {
    return divergence_.kind == FamilyKind::Exponential ? "kl-ucb-exp" : "kl-ucb";
  }

 protected:
  std::size_t choose(std::uint64_t t) override {
    const double f = klucb_exploration(t, c_);
    return detail::argmax_random_ties(
        stats_.size(), [&](std::size_t a) { return klucb_index(stats_[a], f, divergence_); }, rng_);
  }

 private:
  RewardFamily divergence_;
  double c_;
};

class ThompsonPolicy final : public StatsPolicy {
 public:
  using StatsPolicy::StatsPolicy;
  std::string name() const override { return "thompson"; }

 protected:
  std::size_t choose(std::uint64_t) override { return thompson_select(stats_, rng_); }
};

class BayesUcbPolicy final : public StatsPolicy {
 public:
  using StatsPolicy::StatsPolicy;
  std::string name() const override { return "bayes-ucb"; }

 protected:
  std::size_t choose(std::uint64_t t) override { return bayes_ucb_select(stats_, t, rng_); }
};

class RandomPolicy final : public StatsPolicy {
 public:
  using StatsPolicy::StatsPolicy;
  std::string name() const override { return "random"; }

 protected:
  std::size_t choose(std::uint64_t) override { return random_select(stats_.size(), rng_); }
  bool forces_initial_pulls() const override { return false; }
};

}  // namespace belman
