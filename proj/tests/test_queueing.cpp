#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "belman/errors.hpp"
#include "belman/queueing.hpp"

using namespace belman;

namespace {

const std::vector<double> kFig8{0.5, 0.33, 0.33, 0.33, 0.25};

// Records every call so tests can see when the scheduler was consulted.
class Recorder final : public Policy {
 public:
  std::size_t selects = 0, observes = 0;
  std::size_t select(std::uint64_t) override {
    ++selects;
    return 0;
  }
  void observe(std::size_t, double) override { ++observes; }
  std::string name() const override { return "recorder"; }
};

QueueConfig fig8() { return QueueConfig{0.35, kFig8, 10000, 50}; }

}  // namespace

TEST(QueueStep, EmptyQueueIdles) {
  QueueState st;
  Recorder r;
  const auto rec = queue_step(st, r, kFig8, 0, 0.0);
  EXPECT_EQ(rec.queue_len, 0u);
  EXPECT_FALSE(rec.server.has_value());
  EXPECT_EQ(rec.service, 0u);
  EXPECT_EQ(r.selects, 0u);
  EXPECT_EQ(r.observes, 0u);
}

TEST(QueueStep, ArrivalsAndServiceUpdateLength) {
  QueueState st{3, 0, 0};
  Recorder r;
  EXPECT_EQ(queue_step(st, r, kFig8, 2, 0.1).queue_len, 4u);
  QueueState one;
  EXPECT_EQ(queue_step(one, r, kFig8, 1, 0.1).queue_len, 0u);
  QueueState fail{0, 0, 0};
  EXPECT_EQ(queue_step(fail, r, kFig8, 1, 0.9).queue_len, 1u);
  EXPECT_EQ(r.observes, 3u);
}

TEST(QueueConfig, Validation) {
  EXPECT_NO_THROW(fig8().validate());
  EXPECT_THROW((QueueConfig{0.6, kFig8, 10, 1}.validate()), ValidationError);
  EXPECT_THROW((QueueConfig{0.35, {1.2, 0.3}, 10, 1}.validate()), ValidationError);
  EXPECT_THROW((QueueConfig{0.0, kFig8, 0, 0}.validate()), ValidationError);
}

TEST(Simulate, OptAlwaysPicksBestServer) {
  auto cfg = fig8();
  cfg.horizon = 2000;
  const auto tr = simulate(cfg, SchedulerKind::Opt, {1, 2, 3});
  std::size_t served = 0;
  for (const auto& s : tr.slots) {
    if (s.server) {
      EXPECT_EQ(*s.server, 0u);
      ++served;
    }
  }
  EXPECT_GT(served, 0u);
}

TEST(Simulate, TraceInvariants) {
  auto cfg = fig8();
  cfg.horizon = 3000;
  for (auto kind : {SchedulerKind::BelManQ, SchedulerKind::Thompson, SchedulerKind::QUcb, SchedulerKind::QThs,
                    SchedulerKind::Random}) {
    const auto tr = simulate(cfg, kind, {4, 5, 6});
    ASSERT_EQ(tr.size(), 3000u);
    std::uint64_t prev = 0;
    for (const auto& s : tr.slots) {
      EXPECT_LE(s.service, 1u);
      EXPECT_LE(s.service, prev + s.arrivals);
      if (!s.server) EXPECT_EQ(s.service, 0u);
      EXPECT_EQ(s.server.has_value(), prev + s.arrivals > 0);
      EXPECT_EQ(s.queue_len, prev + s.arrivals - s.service);
      prev = s.queue_len;
    }
  }
}

TEST(Simulate, BeliefsUpdateOnlyOnServiceAttempts) {
  auto cfg = fig8();
  cfg.horizon = 2000;
  Recorder r;
  const auto tr = simulate(cfg, r, {7, 8, 9});
  std::size_t attempts = 0;
  for (const auto& s : tr.slots) attempts += s.server.has_value();
  EXPECT_EQ(r.observes, attempts);
  EXPECT_EQ(r.selects, attempts);
}

TEST(Simulate, SharedArrivalStreams) {
  auto cfg = fig8();
  cfg.horizon = 500;
  const auto a = simulate(cfg, SchedulerKind::Random, {1, 2, 3});
  const auto b = simulate(cfg, SchedulerKind::QUcb, {1, 2, 99});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.slots[i].arrivals, b.slots[i].arrivals);
}

TEST(Simulate, Deterministic) {
  auto cfg = fig8();
  cfg.horizon = 2000;
  EXPECT_EQ(simulate(cfg, SchedulerKind::BelManQ, {1, 2, 3}), simulate(cfg, SchedulerKind::BelManQ, {1, 2, 3}));
}

TEST(Simulate, OptQueueIsStable) {
  const auto cfg = fig8();
  double total = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto tr = simulate(cfg, SchedulerKind::Opt, {mix_seed(1, 100, r), mix_seed(1, 101, r), 0});
    double s = 0;
    for (const auto& slot : tr.slots) s += static_cast<double>(slot.queue_len);
    total += s / static_cast<double>(tr.size());
  }
  EXPECT_LT(total / 50, 10.0);
}

TEST(Simulate, DepartureConservation) {
  auto cfg = fig8();
  const QueueSeeds seeds{11, 12, 13};
  const auto alg = simulate(cfg, SchedulerKind::Random, seeds);
  const auto opt = simulate(cfg, SchedulerKind::Opt, seeds);
  std::uint64_t arrivals = 0, served = 0, served_opt = 0;
  for (std::size_t i = 0; i < alg.size(); ++i) {
    arrivals += alg.slots[i].arrivals;
    served += alg.slots[i].service;
    served_opt += opt.slots[i].service;
  }
  EXPECT_EQ(arrivals, served + alg.slots.back().queue_len);
  EXPECT_EQ(arrivals, served_opt + opt.slots.back().queue_len);
}

TEST(QueueRegret, IdenticalTracesGiveZero) {
  auto cfg = fig8();
  cfg.horizon = 300;
  const auto tr = simulate(cfg, SchedulerKind::Thompson, {1, 2, 3});
  for (double v : queue_regret(tr, tr)) EXPECT_EQ(v, 0.0);
}

TEST(QueueRegret, HorizonMismatchThrows) {
  auto cfg = fig8();
  cfg.horizon = 30;
  const auto a = simulate(cfg, SchedulerKind::Opt, {1, 2, 3});
  cfg.horizon = 31;
  const auto b = simulate(cfg, SchedulerKind::Opt, {1, 2, 3});
  EXPECT_THROW(queue_regret(a, b), DomainError);
}

TEST(QueueRegret, OptAgainstOptIsUnbiased) {
  const auto cfg = fig8();
  double total = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto a = simulate(cfg, SchedulerKind::Opt, {mix_seed(2, 100, r), mix_seed(2, 101, r), 0});
    const auto b = simulate(cfg, SchedulerKind::Opt, {mix_seed(2, 100, r), mix_seed(3, 101, r), 0});
    total += queue_regret(a, b).back();
  }
  EXPECT_NEAR(total / 50, 0.0, 1.0);
}

TEST(QueueRegret, RandomWorseThanBelManQ) {
  const auto cfg = fig8();
  double random = 0, belman = 0;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const QueueSeeds seeds{mix_seed(4, 100, r), mix_seed(4, 101, r), mix_seed(4, 31, r)};
    const auto opt = simulate(cfg, SchedulerKind::Opt, seeds);
    random += queue_regret(simulate(cfg, SchedulerKind::Random, seeds), opt).back();
    belman += queue_regret(simulate(cfg, SchedulerKind::BelManQ, seeds), opt).back();
  }
  EXPECT_GT(random / 50, belman / 50);
}

TEST(Schedulers, Names) {
  for (auto k : {SchedulerKind::BelManQ, SchedulerKind::Thompson, SchedulerKind::QUcb, SchedulerKind::QThs,
                 SchedulerKind::Opt, SchedulerKind::Random}) {
    EXPECT_EQ(parse_scheduler(scheduler_name(k)), k);
  }
  EXPECT_FALSE(parse_scheduler("nope").has_value());
}

TEST(Schedulers, QThsExplorationRate) {
  EXPECT_DOUBLE_EQ(QThsScheduler::exploration_rate(1, 5, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(QThsScheduler::exploration_rate(10, 5, 3.0), 1.0);
  const double l = std::log(1e6);
  EXPECT_DOUBLE_EQ(QThsScheduler::exploration_rate(1000000, 5, 3.0), 15 * l * l / 1e6);
}
