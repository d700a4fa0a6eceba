#include <cmath>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "belman/errors.hpp"
#include "belman/manifold.hpp"
#include "belman/oracles.hpp"
#include "belman/rng.hpp"

using namespace belman;

namespace {
const auto kBer = RewardFamily::bernoulli();
const auto kExp = RewardFamily::exponential();

BeliefState B(double a, double b) { return BeliefState::beta_dist(a, b); }
BeliefState G(double a, double b) { return BeliefState::gamma_dist(a, b); }
}  // namespace

TEST(Exposure, Examples) {
  EXPECT_TRUE(std::isinf(exposure(ExposureSchedule::infinite(), 57)));
  const auto log15 = ExposureSchedule::log_schedule(15.0);
  EXPECT_TRUE(std::isinf(exposure(log15, 1)));
  EXPECT_TRUE(std::isinf(exposure(log15, 2)));
  EXPECT_NEAR(exposure(log15, 10), 0.067507942674629535005, 1e-15);
  EXPECT_THROW(exposure(log15, 0), DomainError);
  EXPECT_THROW(ExposureSchedule::log_schedule(0.0), DomainError);
}

TEST(Exposure, LogScheduleNonIncreasingAndPositive) {
  const auto s = ExposureSchedule::log_schedule(15.0);
  double prev = exposure(s, 3);
  EXPECT_GT(prev, 0.0);
  for (std::uint64_t t = 4; t < 200000; t += 1 + t / 50) {
    const double v = exposure(s, t);
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Exposure, TwoPhaseSwitchesAfterExplorationWindow) {
  const auto s = ExposureSchedule::two_phase(500, 15.0);
  EXPECT_TRUE(std::isinf(exposure(s, 1)));
  EXPECT_TRUE(std::isinf(exposure(s, 500)));
  EXPECT_DOUBLE_EQ(exposure(s, 501), exposure(ExposureSchedule::log_schedule(15.0), 501));
}

TEST(LogFocalNormalizer, Examples) {
  EXPECT_EQ(log_focal_normalizer(B(1, 1), kInf), 0.0);
  // log((2e + 2) / 4), confirmed by quadrature of the joint.
  EXPECT_NEAR(log_focal_normalizer(B(2, 2), 1.0), 0.62011450695827752463, 1e-13);
  EXPECT_NEAR(log_focal_normalizer(B(3, 1), 0.5), 1.7564417556472542978, 1e-13);
}

TEST(LogFocalNormalizer, BernoulliMatchesQuadrature) {
  Rng rng(31);
  for (int i = 0; i < 20; ++i) {
    const auto b = B(0.5 + 30 * rng.uniform(), 0.5 + 30 * rng.uniform());
    const double tau = 0.02 + 3.0 * rng.uniform();
    EXPECT_NEAR(log_focal_normalizer(b, tau), oracle::log_normalizer_quadrature(b, tau), 1e-9);
  }
}

TEST(LogFocalNormalizer, LargeTiltDoesNotOverflow) {
  const double v = log_focal_normalizer(B(3, 5), 1e-3);
  EXPECT_NEAR(v, 1000.0 + std::log(3.0 / 8.0), 1e-9);
}

TEST(LogFocalNormalizer, CappedGammaMatchesQuadrature) {
  Rng rng(32);
  for (int i = 0; i < 6; ++i) {
    const auto b = G(2.0 + 30 * rng.uniform(), 0.5 + 10 * rng.uniform());
    const double q01 = boost::math::gamma_p_inv(b.alpha(), 0.01) / b.beta();
    const double c = (0.1 + 0.4 * rng.uniform()) * q01;
    EXPECT_NEAR(log_focal_normalizer(b, 1.0 / c), oracle::log_normalizer_quadrature(b, 1.0 / c), 1e-7) << b;
  }
}

TEST(LogFocalNormalizer, GammaDivergenceIsReported) {
  // Gamma(2, 1) puts far more than 1% of its mass below theta = 2.
  EXPECT_THROW(log_focal_normalizer(G(2, 1), 1.0), DivergentNormalizerError);
}

TEST(LogFocalNormalizer, TiltedJointIsNormalized) {
  for (const auto& b : {B(2, 2), B(7.5, 1.3), B(0.6, 4.0)}) {
    const double tau = 0.4;
    const double z = std::exp(log_focal_normalizer(b, tau));
    boost::math::quadrature::tanh_sinh<double> ts;
    auto f = [&](double th) {
      return std::exp(oracle::log_density(b, th)) * ((1.0 - th) + th * std::exp(1.0 / tau)) / z;
    };
    EXPECT_NEAR(ts.integrate(f, 0.0, 1.0, 1e-12), 1.0, 1e-6);
  }
}

TEST(Barycentre, Examples) {
  const std::vector<BeliefState> same{B(2, 3), B(2, 3)};
  const auto b = pseudobelief_barycentre(same);
  EXPECT_NEAR(b.alpha(), 2.0, 1e-9);
  EXPECT_NEAR(b.beta(), 3.0, 1e-9);
  const std::vector<BeliefState> one{B(5, 2)};
  EXPECT_EQ(pseudobelief_barycentre(one), B(5, 2));
  EXPECT_THROW(pseudobelief_barycentre(std::vector<BeliefState>{}), DomainError);
  EXPECT_THROW(pseudobelief_barycentre(std::vector<BeliefState>{B(1, 1), G(1, 1)}), DomainError);
}

TEST(Barycentre, MatchesGridSearch) {
  const std::vector<BeliefState> arms{B(1, 1), B(3, 1)};
  const auto b = pseudobelief_barycentre(arms);
  const auto g = oracle::barycentre_grid_argmin(arms, 400, 10.0);
  EXPECT_LE(std::abs(b.alpha() - g.alpha), 0.025);
  EXPECT_LE(std::abs(b.beta() - g.beta), 0.025);
}

TEST(Barycentre, ExpectationParamsAreAveraged) {
  const std::vector<BeliefState> arms{G(3, 2), G(10, 1), G(1.5, 0.2)};
  const auto m = expectation_params(pseudobelief_barycentre(arms));
  double m0 = 0, m1 = 0;
  for (const auto& a : arms) {
    m0 += expectation_params(a).mu[0] / 3;
    m1 += expectation_params(a).mu[1] / 3;
  }
  EXPECT_NEAR(m.mu[0], m0, 1e-10);
  EXPECT_NEAR(m.mu[1], m1, 1e-10);
}

TEST(Barycentre, MixtureCrossEntropyMinimizedOnGrid) {
  // KL(Phat || P) with Phat the uniform mixture of the arms depends on P only
  // through -mean_a E_a[log p].
  const std::vector<BeliefState> arms{B(2, 5), B(6, 3), B(1.5, 1.5)};
  double e1 = 0, e2 = 0;
  for (const auto& a : arms) {
    e1 += expectation_params(a).mu[0] / 3;
    e2 += expectation_params(a).mu[1] / 3;
  }
  auto cross = [&](double a, double b) { return oracle::log_beta_fn(a, b) - (a - 1) * e1 - (b - 1) * e2; };
  const auto g = oracle::grid_minimum(cross, 0.01, 10.0, 0.01, 10.0, 0.01);
  const auto b = pseudobelief_barycentre(arms);
  EXPECT_LE(std::abs(b.alpha() - g.alpha), 0.01);
  EXPECT_LE(std::abs(b.beta() - g.beta), 0.01);
}

TEST(RiProjection, InfiniteExposureIsBarycentre) {
  Rng rng(33);
  for (int i = 0; i < 20; ++i) {
    std::vector<BeliefState> arms;
    for (int a = 0; a < 2 + i % 3; ++a) arms.push_back(B(0.5 + 20 * rng.uniform(), 0.5 + 20 * rng.uniform()));
    const auto q = ri_projection(arms, kInf);
    const auto b = pseudobelief_barycentre(arms);
    EXPECT_NEAR(q.pseudo_belief.alpha(), b.alpha(), 1e-8);
    EXPECT_NEAR(q.pseudo_belief.beta(), b.beta(), 1e-8);
    EXPECT_EQ(q.log_z, 0.0);
    EXPECT_TRUE(std::isinf(q.tau));
  }
}

TEST(RiProjection, MatchesGridSearchOfObjective) {
  const std::vector<BeliefState> arms{B(9, 3), B(2, 10)};
  const double tau = 0.5;
  const auto q = ri_projection(arms, tau);
  const auto g = oracle::ri_grid_argmin(arms, tau, 0.01);
  const double v = oracle::ri_objective_reference(arms, q.pseudo_belief.alpha(), q.pseudo_belief.beta(), tau);
  EXPECT_LE(v, g.value + 1e-4);
  EXPECT_NEAR(q.pseudo_belief.alpha(), g.alpha, 0.02);
  EXPECT_NEAR(q.pseudo_belief.beta(), g.beta, 0.02);
}

TEST(RiProjection, NoWorseThanBarycentre) {
  Rng rng(34);
  for (int i = 0; i < 30; ++i) {
    std::vector<BeliefState> arms;
    for (int a = 0; a < 3; ++a) arms.push_back(B(1 + 40 * rng.uniform(), 1 + 40 * rng.uniform()));
    const double tau = 0.02 + rng.uniform();
    const auto q = ri_projection(arms, tau);
    const auto bary = pseudobelief_barycentre(arms);
    EXPECT_LE(ri_objective(arms, q.pseudo_belief, tau), ri_objective(arms, bary, tau) + 1e-12);
  }
}

TEST(RiProjection, FiniteExposureMovesIdenticalArmsTowardLowerMean) {
  // Qbar tilts the belief toward high rewards by itself, so the pseudobelief
  // that best explains three Beta(4,4) arms sits below mean 1/2.
  const std::vector<BeliefState> arms(3, B(4, 4));
  const auto inf = ri_projection(arms, kInf);
  EXPECT_NEAR(inf.pseudo_belief.alpha(), 4.0, 1e-9);
  EXPECT_NEAR(inf.pseudo_belief.beta(), 4.0, 1e-9);
  const auto q = ri_projection(arms, 1.0);
  EXPECT_LT(mean_reward(q.pseudo_belief), 0.5 - 1e-3);
  // Finite-difference slope of the reference objective at (4,4) agrees.
  const double h = 1e-5;
  const double da = (oracle::ri_objective_reference(arms, 4 + h, 4, 1.0) -
                     oracle::ri_objective_reference(arms, 4 - h, 4, 1.0)) / (2 * h);
  const double db = (oracle::ri_objective_reference(arms, 4, 4 + h, 1.0) -
                     oracle::ri_objective_reference(arms, 4, 4 - h, 1.0)) / (2 * h);
  EXPECT_GT(da, 0.0);
  EXPECT_LT(db, 0.0);
}

TEST(RiProjection, WarmStartGivesSameMinimizer) {
  const std::vector<BeliefState> arms{B(30, 4), B(3, 9), B(12, 12)};
  const auto cold = ri_projection(arms, 0.1);
  const auto warm = ri_projection(arms, 0.1, B(50, 50));
  EXPECT_NEAR(cold.pseudo_belief.alpha(), warm.pseudo_belief.alpha(), 1e-7);
  EXPECT_NEAR(cold.pseudo_belief.beta(), warm.pseudo_belief.beta(), 1e-7);
}

TEST(RiProjection, GammaExposureIsClampedToKeepTailSmall) {
  const std::vector<BeliefState> arms{G(5, 1), G(8, 4), G(20, 6)};
  const auto q = ri_projection(arms, 0.05);
  EXPECT_TRUE(q.tau_clamped());
  EXPECT_GT(q.tau, 0.05);
  const auto& pb = q.pseudo_belief;
  EXPECT_LE(boost::math::gamma_p(pb.alpha(), 2.0 / q.tau * pb.beta()), 0.01 * (1 + 1e-6));
  EXPECT_TRUE(std::isfinite(q.log_z));
}

TEST(RiProjection, GammaUnclampedWhenExposureIsLarge) {
  const std::vector<BeliefState> arms{G(50, 10), G(60, 20)};
  const auto q = ri_projection(arms, 10.0);
  EXPECT_FALSE(q.tau_clamped());
  EXPECT_DOUBLE_EQ(q.tau, 10.0);
}

TEST(IProjectionScore, PseudobeliefItselfScoresZero) {
  const std::vector<BeliefState> arms{B(3, 4), B(8, 2)};
  const auto q = ri_projection(arms, kInf);
  EXPECT_EQ(i_projection_score(q.pseudo_belief, q), 0.0);
}

TEST(IProjectionScore, IdenticalArmsScoreIdentically) {
  const std::vector<BeliefState> arms{B(3, 4), B(3, 4), B(1, 9)};
  const auto q = ri_projection(arms, 0.3);
  EXPECT_EQ(i_projection_score(arms[0], q), i_projection_score(arms[1], q));
}

TEST(IProjectionScore, MatchesQuadratureOfFullDivergence) {
  const std::vector<BeliefState> arms{B(5, 5), B(2, 8)};
  const auto q = ri_projection(arms, 1.0);
  const double quad = oracle::divergence_quadrature(B(5, 5), q.pseudo_belief, 1.0);
  EXPECT_NEAR(i_projection_divergence(B(5, 5), q), quad, 1e-5);
}

TEST(IProjectionScore, FamilyMismatchThrows) {
  const std::vector<BeliefState> arms{B(5, 5), B(2, 8)};
  const auto q = ri_projection(arms, 1.0);
  EXPECT_THROW(i_projection_score(G(2, 2), q), DomainError);
}

TEST(IProjectionScore, GammaShapeAtMostOneScoresMinusInfinity) {
  const std::vector<BeliefState> arms{G(1, 1), G(30, 10)};
  const auto q = ri_projection(arms, 2.0);
  EXPECT_EQ(i_projection_score(arms[0], q), -kInf);
}
