#pragma once

// Compact oracle suite behind `bandit oracle-check`.

#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "belman.hpp"

namespace bandit_cli {

struct OracleCase {
  std::string name;
  std::function<double()> worst_error;  // largest deviation found
  double tolerance;
};

inline std::vector<OracleCase> oracle_cases() {
  using namespace belman;
  std::vector<OracleCase> cases;

  cases.push_back({"special functions vs Boost (relative)", [] {
                     double worst = 0.0;
                     for (double x = 0.05; x < 60.0; x *= 1.37) {
                       auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
                       worst = std::max({worst, rel(digamma(x), boost::math::digamma(x)),
                                         rel(trigamma(x), boost::math::trigamma(x)),
                                         rel(log_gamma(x), boost::math::lgamma(x))});
                     }
                     return worst;
                   },
                   1e-12});

  cases.push_back({"kl_belief vs quadrature, 50 beta + 50 gamma pairs", [] {
                     Rng rng(11);
                     double worst = 0.0;
                     for (int i = 0; i < 100; ++i) {
                       const auto fam = i < 50 ? RewardFamily::bernoulli() : RewardFamily::exponential();
                       auto draw = [&] { return 0.5 + 19.5 * rng.uniform(); };
                       const BeliefState p(fam, draw(), draw()), q(fam, draw(), draw());
                       worst = std::max(worst, std::abs(kl_belief(p, q) - oracle::kl_quadrature(p, q)));
                     }
                     return worst;
                   },
                   1e-6});

  cases.push_back({"Bernoulli focal normalizer vs quadrature", [] {
                     Rng rng(12);
                     double worst = 0.0;
                     for (int i = 0; i < 30; ++i) {
                       const BeliefState b(RewardFamily::bernoulli(), 0.5 + 20 * rng.uniform(), 0.5 + 20 * rng.uniform());
                       const double tau = 0.05 + 2.0 * rng.uniform();
                       worst = std::max(worst, std::abs(log_focal_normalizer(b, tau) -
                                                        oracle::log_normalizer_quadrature(b, tau)));
                     }
                     return worst;
                   },
                   1e-9});

  cases.push_back({"capped gamma normalizer vs quadrature", [] {
                     Rng rng(13);
                     double worst = 0.0;
                     for (int i = 0; i < 10; ++i) {
                       const BeliefState b(RewardFamily::exponential(), 2.0 + 30 * rng.uniform(), 0.5 + 10 * rng.uniform());
                       const double c = (0.1 + 0.4 * rng.uniform()) * boost::math::gamma_p_inv(b.alpha(), 0.01) / b.beta();
                       worst = std::max(worst, std::abs(log_focal_normalizer(b, 1.0 / c) -
                                                        oracle::log_normalizer_quadrature(b, 1.0 / c)));
                     }
                     return worst;
                   },
                   1e-7});

  cases.push_back({"I-projection divergence vs quadrature", [] {
                     Rng rng(14);
                     double worst = 0.0;
                     for (int i = 0; i < 20; ++i) {
                       std::vector<BeliefState> arms;
                       for (int a = 0; a < 3; ++a) {
                         arms.emplace_back(RewardFamily::bernoulli(), 1.0 + 15 * rng.uniform(), 1.0 + 15 * rng.uniform());
                       }
                       const double tau = 0.1 + 2.0 * rng.uniform();
                       const auto q = ri_projection(arms, tau);
                       for (const auto& a : arms) {
                         worst = std::max(worst, std::abs(i_projection_divergence(a, q) -
                                                          oracle::divergence_quadrature(a, q.pseudo_belief, q.tau)));
                       }
                     }
                     return worst;
                   },
                   1e-6});

  cases.push_back({"rI-projection vs 0.01 grid (objective excess)", [] {
                     Rng rng(15);
                     double worst = 0.0;
                     for (int i = 0; i < 4; ++i) {
                       std::vector<BeliefState> arms;
                       for (int a = 0; a < 2; ++a) {
                         arms.emplace_back(RewardFamily::bernoulli(), 1.0 + 9 * rng.uniform(), 1.0 + 9 * rng.uniform());
                       }
                       const double tau = 0.2 + 2.0 * rng.uniform();
                       const auto q = ri_projection(arms, tau);
                       const auto g = oracle::ri_grid_argmin(arms, tau);
                       const double v = oracle::ri_objective_reference(arms, q.pseudo_belief.alpha(),
                                                                       q.pseudo_belief.beta(), tau);
                       worst = std::max(worst, v - g.value);
                     }
                     return worst;
                   },
                   1e-4});

  cases.push_back({"rI-projection at tau=inf vs barycentre", [] {
                     Rng rng(16);
                     double worst = 0.0;
                     for (int i = 0; i < 20; ++i) {
                       std::vector<BeliefState> arms;
                       for (int a = 0; a < 3; ++a) {
                         arms.emplace_back(RewardFamily::bernoulli(), 0.5 + 30 * rng.uniform(), 0.5 + 30 * rng.uniform());
                       }
                       const auto q = ri_projection(arms, kInf);
                       const auto b = pseudobelief_barycentre(arms);
                       worst = std::max({worst, std::abs(q.pseudo_belief.alpha() - b.alpha()),
                                         std::abs(q.pseudo_belief.beta() - b.beta())});
                     }
                     return worst;
                   },
                   1e-8});
  return cases;
}

// Prints one line per suite; returns true when all pass.
inline bool run_oracle_check(std::ostream& os) {
  bool ok = true;
  for (const auto& c : oracle_cases()) {
    const double err = c.worst_error();
    const bool pass = err <= c.tolerance;
    ok = ok && pass;
    os << (pass ? "ok    " : "FAIL  ") << c.name << ": max error " << err << " (tol " << c.tolerance << ")\n";
  }
  return ok;
}

}  // namespace bandit_cli
