#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "belman/errors.hpp"
#include "belman/special_functions.hpp"

using namespace belman;

namespace {

struct Reference {
  double x, digamma, trigamma, log_gamma;
};

// 40-digit mpmath values.
const std::vector<Reference> kReference = {
    {0.001, -1000.5755719318103005, 1000001.642533195869, 6.9071788853838536825},
    {0.1, -10.423754940411076795, 101.43329915079275882, 2.2527126517342059599},
    {0.5, -1.9635100260214234794, 4.9348022005446793094, 0.57236494292470008707},
    {1.0, -0.57721566490153286061, 1.6449340668482264365, 0.0},
    {1.5, 0.036489973978576520559, 0.93480220054467930942, -0.12078223763524522235},
    {2.5, 0.70315664064524318723, 0.49035775610023486497, 0.28468287047291915963},
    {6.0, 1.7061176684318004727, 0.18132295573711532536, 4.7874917427820459942},
    {7.25, 1.9104535268837360284, 0.14787923315893216965, 7.0521854507385394449},
    {13.7, 2.5804557238996525878, 0.075721415822623891893, 21.774645173034634279},
    {50.0, 3.901989673427892197, 0.020201333226697125806, 144.56574394634488601},
    {123.456, 4.8118293238289853873, 0.0081329458342781980101, 469.60554712992946873},
};

double rel(double got, double want) { return std::abs(got - want) / std::max(1.0, std::abs(want)); }

}  // namespace

TEST(SpecialFunctions, DigammaMatchesReferenceValues) {
  for (const auto& r : kReference) EXPECT_LT(rel(digamma(r.x), r.digamma), 1e-12) << "x=" << r.x;
}

TEST(SpecialFunctions, TrigammaMatchesReferenceValues) {
  for (const auto& r : kReference) EXPECT_LT(rel(trigamma(r.x), r.trigamma), 1e-12) << "x=" << r.x;
}

TEST(SpecialFunctions, LogGammaMatchesReferenceValues) {
  for (const auto& r : kReference) EXPECT_LT(rel(log_gamma(r.x), r.log_gamma), 1e-12) << "x=" << r.x;
}

TEST(SpecialFunctions, DigammaOneIsMinusEulerGamma) {
  EXPECT_NEAR(digamma(1.0), -0.5772156649015329, 1e-15);
}

TEST(SpecialFunctions, Recurrences) {
  EXPECT_NEAR(digamma(2.0) - digamma(1.0), 1.0, 1e-14);
  for (double x = 0.05; x < 40.0; x *= 1.7) {
    EXPECT_NEAR(digamma(x + 1.0) - digamma(x), 1.0 / x, 1e-12 * std::max(1.0, 1.0 / x));
    EXPECT_NEAR(trigamma(x) - trigamma(x + 1.0), 1.0 / (x * x), 1e-12 * std::max(1.0, 1.0 / (x * x)));
    EXPECT_NEAR(log_gamma(x + 1.0) - log_gamma(x), std::log(x), 1e-12);
  }
}

TEST(SpecialFunctions, LogBeta) {
  EXPECT_NEAR(log_beta(2.0, 2.0), std::log(1.0 / 6.0), 1e-14);
  EXPECT_NEAR(log_beta(1.0, 1.0), 0.0, 1e-14);
  EXPECT_NEAR(log_beta(3.5, 0.25), log_beta(0.25, 3.5), 1e-15);
}

TEST(SpecialFunctions, NonPositiveArgumentsThrow) {
  EXPECT_THROW(digamma(0.0), DomainError);
  EXPECT_THROW(trigamma(-1.0), DomainError);
  EXPECT_THROW(log_gamma(0.0), DomainError);
  EXPECT_THROW(log_beta(1.0, -2.0), DomainError);
  EXPECT_THROW(digamma(std::nan("")), DomainError);
}
