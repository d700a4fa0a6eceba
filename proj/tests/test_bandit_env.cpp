#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "belman/bandit_env.hpp"
#include "belman/errors.hpp"

using namespace belman;

namespace {
const auto kBer = RewardFamily::bernoulli();
const auto kExp = RewardFamily::exponential();

RunTrace trace_of(const std::vector<std::size_t>& arms) {
  RunTrace t;
  for (std::size_t i = 0; i < arms.size(); ++i) t.steps.push_back({i + 1, arms[i], 0.0});
  return t;
}
}  // namespace

TEST(SampleReward, BernoulliMean) {
  const BanditInstance inst{kBer, {0.999, 0.5}, 1};
  Rng rng(1);
  double s = 0;
  for (int i = 0; i < 10000; ++i) s += sample_reward(inst, 0, rng);
  EXPECT_NEAR(s / 10000, 0.999, 0.01);
}

TEST(SampleReward, ExponentialMean) {
  const BanditInstance inst{kExp, {5.0, 1.0}, 1};
  Rng rng(2);
  double s = 0;
  for (int i = 0; i < 100000; ++i) s += sample_reward(inst, 0, rng);
  EXPECT_NEAR(s / 100000, 0.2, 0.01);
}

TEST(SampleReward, BoundedModesStayInUnitInterval) {
  for (auto mode : {Bounding::Resample, Bounding::Truncate}) {
    const BanditInstance inst{kExp, {0.5, 1.0}, 1, mode};
    const auto means = inst.true_means();
    Rng rng(3);
    double s = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = sample_reward(inst, 0, rng);
      ASSERT_GE(x, 0.0);
      ASSERT_LE(x, 1.0);
      s += x;
    }
    EXPECT_NEAR(s / n, means[0], 0.005);
  }
}

TEST(SampleReward, SeededDeterminism) {
  const BanditInstance inst{kBer, {0.3, 0.7}, 1};
  BanditEnvironment a(inst, 11), b(inst, 11);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.pull(i % 2), b.pull(i % 2));
}

TEST(SampleReward, ArmStreamsAreIndependentOfPullOrder) {
  const BanditInstance inst{kBer, {0.3, 0.7}, 1};
  BanditEnvironment a(inst, 11), b(inst, 11);
  std::vector<double> first;
  for (int i = 0; i < 20; ++i) first.push_back(a.pull(1));
  for (int i = 0; i < 20; ++i) (void)b.pull(0);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(b.pull(1), first[i]);
}

TEST(SampleReward, BadArmThrows) {
  const BanditInstance inst{kBer, {0.3, 0.7}, 1};
  Rng rng(1);
  EXPECT_THROW(sample_reward(inst, 2, rng), DomainError);
}

TEST(BanditInstance, ValidationListsEveryViolation) {
  const BanditInstance inst{kBer, {1.0}, 1, Bounding::Resample};
  try {
    inst.validate();
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.violations().size(), 3u);
  }
  EXPECT_THROW((BanditInstance{kExp, {1.0, -2.0}, 1}.validate()), ValidationError);
  EXPECT_NO_THROW((BanditInstance{kBer, {0.1, 0.2}, 1}.validate()));
}

TEST(Regret, AllOptimalIsZero) {
  const BanditInstance inst{kBer, {0.8, 0.9}, 50};
  const auto r = cumulative_regret(trace_of(std::vector<std::size_t>(50, 1)), inst);
  for (double v : r) EXPECT_EQ(v, 0.0);
  const auto d = suboptimal_draws(trace_of(std::vector<std::size_t>(50, 1)), inst);
  for (auto v : d) EXPECT_EQ(v, 0u);
}

TEST(Regret, TwoArmExample) {
  const BanditInstance inst{kBer, {0.8, 0.9}, 100};
  std::vector<std::size_t> arms(10, 0);
  arms.resize(100, 1);
  EXPECT_NEAR(cumulative_regret(trace_of(arms), inst).back(), 1.0, 1e-12);
}

TEST(Regret, AllSuboptimalDrawsCountEveryStep) {
  const BanditInstance inst{kBer, {0.8, 0.9}, 30};
  const auto d = suboptimal_draws(trace_of(std::vector<std::size_t>(30, 0)), inst);
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(d[i], i + 1);
}

TEST(Regret, TiedBestArmsAreOptimal) {
  const BanditInstance inst{kBer, {0.5, 0.9, 0.9}, 4};
  EXPECT_EQ(suboptimal_draws(trace_of({1, 2, 2, 1}), inst).back(), 0u);
}

TEST(Regret, EqualsGapTimesCountsOnRandomTraces) {
  Rng rng(5);
  const BanditInstance inst{kBer, {0.25, 0.22, 0.2, 0.17, 0.13, 0.05}, 500};
  const auto means = inst.true_means();
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<std::size_t> arms;
    for (int i = 0; i < 500; ++i) arms.push_back(rng.below(6));
    const auto tr = trace_of(arms);
    const auto r = cumulative_regret(tr, inst);
    const auto d = suboptimal_draws(tr, inst);
    std::vector<double> counts(6, 0);
    double prev = 0.0;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      ++counts[arms[i]];
      double expect = 0;
      for (std::size_t a = 0; a < 6; ++a) expect += (0.25 - means[a]) * counts[a];
      EXPECT_DOUBLE_EQ(r[i], expect);
      EXPECT_GE(r[i], prev);
      const double inc = r[i] - prev;
      EXPECT_TRUE(inc == 0.0 || (inc >= 0.03 - 1e-12 && inc <= 0.2 + 1e-12));
      EXPECT_GE(r[i] + 1e-12, 0.03 * static_cast<double>(d[i]));
      prev = r[i];
    }
  }
}
