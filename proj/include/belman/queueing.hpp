#pragma once

// Discrete-time single queue served by one of K Bernoulli servers per slot.
//
// Slot t: A(t) ~ Poisson(lambda) jobs arrive; if a job is waiting the
// scheduler picks server a and S(t) ~ Bernoulli(mu_a); Q(t) = Q(t-1) + A(t) - S(t).
// Arrivals and service outcomes come from streams that do not depend on the
// scheduler: one Poisson draw and one uniform u(t) per slot, with S(t) = [u(t) < mu_a].
// Two schedulers simulated with the same seeds therefore see identical
// arrivals and coupled service.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "belman/baselines.hpp"
#include "belman/belman.hpp"
#include "belman/errors.hpp"
#include "belman/policy.hpp"
#include "belman/rng.hpp"

namespace belman {

struct QueueConfig {
  double lambda = 0.35;
  std::vector<double> mu;
  std::uint64_t horizon = 10'000;
  std::uint64_t n_runs = 50;

  void validate() const {
    std::vector<std::string> errors;
    if (!(lambda > 0.0)) errors.push_back("arrival rate lambda must be > 0");
    if (mu.empty()) errors.push_back("at least one server is required");
    for (std::size_t a = 0; a < mu.size(); ++a) {
      if (!(mu[a] > 0.0 && mu[a] < 1.0)) {
        errors.push_back("service rate of server " + std::to_string(a) + " must lie in (0,1)");
      }
    }
    if (!mu.empty() && !(lambda < *std::max_element(mu.begin(), mu.end()))) {
      errors.push_back("queue is unstable: lambda must be below the best service rate");
    }
    if (horizon < 1) errors.push_back("horizon must be >= 1");
    if (n_runs < 1) errors.push_back("n_runs must be >= 1");
    if (!errors.empty()) throw ValidationError(std::move(errors));
  }
};

struct QueueRecord {
  std::uint64_t t = 0;
  std::uint64_t queue_len = 0;
  std::optional<std::size_t> server;  // empty when no job was waiting
  std::uint64_t arrivals = 0;
  std::uint64_t service = 0;  // 0 or 1

  friend bool operator==(const QueueRecord&, const QueueRecord&) = default;
};

struct QueueTrace {
  std::vector<QueueRecord> slots;

  std::size_t size() const noexcept { return slots.size(); }
  friend bool operator==(const QueueTrace&, const QueueTrace&) = default;
};

struct QueueSeeds {
  std::uint64_t arrivals = 0;
  std::uint64_t service = 0;
  std::uint64_t scheduler = 0;
};

struct QueueState {
  std::uint64_t queue_len = 0;  // Q(0) = 0
  std::uint64_t t = 0;
  std::uint64_t decisions = 0;
};

// Scheduler-independent randomness of one simulation.
struct QueueStreams {
  double lambda;
  Rng arrivals;
  Rng service;

  QueueStreams(double arrival_rate, const QueueSeeds& s)
      : lambda(arrival_rate), arrivals(s.arrivals), service(s.service) {}
};

// One slot with the arrival count and service uniform given explicitly. The
// scheduler is consulted (and observes the outcome) only when a job waits.
inline QueueRecord queue_step(QueueState& state, Policy& scheduler, std::span<const double> mu,
                              std::uint64_t arrivals, double service_uniform) {
  ++state.t;
  QueueRecord rec{state.t, 0, std::nullopt, arrivals, 0};
  const std::uint64_t waiting = state.queue_len + arrivals;
  if (waiting > 0) {
    const std::size_t a = scheduler.select(++state.decisions);
    if (a >= mu.size()) throw DomainError("queue_step: scheduler chose an unknown server");
    rec.server = a;
    rec.service = service_uniform < mu[a] ? 1 : 0;
    scheduler.observe(a, static_cast<double>(rec.service));
  }
  state.queue_len = waiting - rec.service;
  rec.queue_len = state.queue_len;
  return rec;
}

inline QueueRecord queue_step(QueueState& state, Policy& scheduler, std::span<const double> mu,
                              QueueStreams& streams) {
  // Both draws happen every slot so the streams stay aligned across schedulers.
  const std::uint64_t arrivals = streams.arrivals.poisson(streams.lambda);
  const double u = streams.service.uniform();
  return queue_step(state, scheduler, mu, arrivals, u);
}

enum class SchedulerKind { BelManQ, Thompson, QUcb, QThs, Opt, Random };

inline std::string_view scheduler_name(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::BelManQ: return "belman-q";
    case SchedulerKind::Thompson: return "thompson";
    case SchedulerKind::QUcb: return "q-ucb";
    case SchedulerKind::QThs: return "q-ths";
    case SchedulerKind::Opt: return "opt";
    case SchedulerKind::Random: return "random";
  }
  return "?";
}

inline std::optional<SchedulerKind> parse_scheduler(std::string_view name) {
  for (auto k : {SchedulerKind::BelManQ, SchedulerKind::Thompson, SchedulerKind::QUcb,
                 SchedulerKind::QThs, SchedulerKind::Opt, SchedulerKind::Random}) {
    if (scheduler_name(k) == name) return k;
  }
  return std::nullopt;
}

// Full-information scheduler: always the best service rate.
class OptScheduler final : public Policy {
 public:
  explicit OptScheduler(std::span<const double> mu)
      : best_(static_cast<std::size_t>(std::max_element(mu.begin(), mu.end()) - mu.begin())) {}
  std::size_t select(std::uint64_t) override { return best_; }
  void observe(std::size_t, double) override {}
  std::string name() const override { return "opt"; }

 private:
  std::size_t best_;
};

// Index mu_hat + sqrt(log^2 t / (2 n)); unserved servers first.
class QUcbScheduler final : public StatsPolicy {
 public:
  QUcbScheduler(std::size_t servers, std::uint64_t seed)
      : StatsPolicy(RewardFamily::bernoulli(), servers, seed) {}
  std::string name() const override { return "q-ucb"; }

  static double index(const ArmStats& s, std::uint64_t t) {
    if (s.pulls == 0) return std::numeric_limits<double>::infinity();
    const double lt = std::log(static_cast<double>(t));
    return s.mean() + std::sqrt(lt * lt / (2.0 * static_cast<double>(s.pulls)));
  }

 protected:
  std::size_t choose(std::uint64_t t) override {
    return detail::argmax_random_ties(stats_.size(), [&](std::size_t a) { return index(stats_[a], t); },
                                      rng_);
  }
};

// Thompson sampling mixed with uniform exploration at rate
// min(1, explore_scale * K * log^2 t / t).
class QThsScheduler final : public StatsPolicy {
 public:
  QThsScheduler(std::size_t servers, std::uint64_t seed, double explore_scale = 3.0)
      : StatsPolicy(RewardFamily::bernoulli(), servers, seed), explore_scale_(explore_scale) {}
  std::string name() const override { return "q-ths"; }

  static double exploration_rate(std::uint64_t t, std::size_t servers, double scale) {
    const double lt = std::log(static_cast<double>(t));
    return std::min(1.0, scale * static_cast<double>(servers) * lt * lt / static_cast<double>(t));
  }

 protected:
  std::size_t choose(std::uint64_t t) override {
    if (rng_.uniform() < exploration_rate(t, stats_.size(), explore_scale_)) {
      return rng_.below(stats_.size());
    }
    return thompson_select(stats_, rng_);
  }

 private:
  double explore_scale_;
};

inline std::unique_ptr<Policy> make_scheduler(SchedulerKind kind, std::span<const double> mu,
                                              std::uint64_t seed,
                                              ExposureSchedule schedule = ExposureSchedule::log_schedule()) {
  const auto bern = RewardFamily::bernoulli();
  switch (kind) {
    case SchedulerKind::BelManQ: return std::make_unique<BelManPolicy>(bern, mu.size(), schedule, seed);
    case SchedulerKind::Thompson: return std::make_unique<ThompsonPolicy>(bern, mu.size(), seed);
    case SchedulerKind::QUcb: return std::make_unique<QUcbScheduler>(mu.size(), seed);
    case SchedulerKind::QThs: return std::make_unique<QThsScheduler>(mu.size(), seed);
    case SchedulerKind::Opt: return std::make_unique<OptScheduler>(mu);
    case SchedulerKind::Random: return std::make_unique<RandomPolicy>(bern, mu.size(), seed);
  }
  throw DomainError("make_scheduler: unknown scheduler");
}

inline QueueTrace simulate(const QueueConfig& config, Policy& scheduler, const QueueSeeds& seeds) {
  QueueStreams streams(config.lambda, seeds);
  QueueState state;
  QueueTrace trace;
  trace.slots.reserve(config.horizon);
  for (std::uint64_t i = 0; i < config.horizon; ++i) {
    trace.slots.push_back(queue_step(state, scheduler, config.mu, streams));
  }
  return trace;
}

inline QueueTrace simulate(const QueueConfig& config, SchedulerKind kind, const QueueSeeds& seeds,
                           ExposureSchedule schedule = ExposureSchedule::log_schedule()) {
  config.validate();
  auto scheduler = make_scheduler(kind, config.mu, seeds.scheduler, schedule);
  return simulate(config, *scheduler, seeds);
}

// Per-slot Q(t) - Q_OPT(t).
inline std::vector<double> queue_regret(const QueueTrace& alg, const QueueTrace& opt) {
  if (alg.size() != opt.size()) {
    throw DomainError("queue_regret: horizon mismatch (" + std::to_string(alg.size()) + " vs " +
                      std::to_string(opt.size()) + ")");
  }
  std::vector<double> out(alg.size());
  for (std::size_t i = 0; i < alg.size(); ++i) {
    out[i] = static_cast<double>(alg.slots[i].queue_len) -
             static_cast<double>(opt.slots[i].queue_len);
  }
  return out;
}

}  // namespace belman
