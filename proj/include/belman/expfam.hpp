#pragma once

// Conjugate reward/belief pairs: beta-Bernoulli and gamma-exponential.
//
// A BeliefState is a point on the belief-reward manifold: the conjugate
// posterior b(theta) of one arm together with the reward family f_theta(X)
// that fixes the joint b(theta) f_theta(X). Parameters are positive reals
// because the pseudobelief produced by projections is fractional.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>

#include "belman/errors.hpp"
#include "belman/special_functions.hpp"

namespace belman {

enum class FamilyKind { Bernoulli, Exponential };

struct RewardFamily {
  FamilyKind kind = FamilyKind::Bernoulli;

  static constexpr RewardFamily bernoulli() noexcept { return {FamilyKind::Bernoulli}; }
  static constexpr RewardFamily exponential() noexcept { return {FamilyKind::Exponential}; }

  // Bernoulli: {0, 1}. Exponential: [0, inf).
  bool in_support(double x) const noexcept {
    if (kind == FamilyKind::Bernoulli) return x == 0.0 || x == 1.0;
    return x >= 0.0 && std::isfinite(x);
  }

  std::string name() const {
    return kind == FamilyKind::Bernoulli ? "bernoulli" : "exponential";
  }

  friend constexpr bool operator==(RewardFamily, RewardFamily) = default;
};

// Beta(alpha, beta) over a Bernoulli success probability, or Gamma(shape
// alpha, rate beta) over an exponential rate.
class BeliefState {
 public:
  BeliefState(RewardFamily family, double alpha, double beta)
      : family_(family), alpha_(alpha), beta_(beta) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
      throw DomainError("BeliefState: parameters must be finite and > 0 (alpha=" +
                        std::to_string(alpha) + ", beta=" + std::to_string(beta) + ")");
    }
  }

  static BeliefState beta_dist(double alpha, double beta) {
    return {RewardFamily::bernoulli(), alpha, beta};
  }
  static BeliefState gamma_dist(double shape, double rate) {
    return {RewardFamily::exponential(), shape, rate};
  }

  // Uniform Beta(1,1) or the weakly informative proper Gamma(1,1).
  static BeliefState default_prior(RewardFamily family) { return {family, 1.0, 1.0}; }

  RewardFamily family() const noexcept { return family_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  // alpha + beta; the pseudo-count N of a beta belief.
  double total() const noexcept { return alpha_ + beta_; }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;

  friend std::ostream& operator<<(std::ostream& os, const BeliefState& b) {
    return os << (b.family_.kind == FamilyKind::Bernoulli ? "Beta(" : "Gamma(") << b.alpha_
              << ", " << b.beta_ << ")";
  }

 private:
  RewardFamily family_;
  double alpha_;
  double beta_;
};

// Dual coordinates E_b[T(theta)] of the belief.
// Beta:  (psi(a) - psi(a+b), psi(b) - psi(a+b)) = (E log theta, E log(1-theta)).
// Gamma: (psi(a) - log b, a/b)                  = (E log theta, E theta).
struct ExpectationParams {
  std::array<double, 2> mu{};

  friend bool operator==(const ExpectationParams&, const ExpectationParams&) = default;
};

struct Observation {
  std::size_t arm = 0;
  double reward = 0.0;
};

// Conjugate update with one reward. Bernoulli: success -> (a+1, b), failure
// -> (a, b+1). Exponential: (a+1, b+x).
inline BeliefState posterior_update(const BeliefState& b, double reward) {
  if (!b.family().in_support(reward)) {
    throw DomainError("posterior_update: reward " + std::to_string(reward) +
                      " outside the support of the " + b.family().name() + " family");
  }
  if (b.family().kind == FamilyKind::Bernoulli) {
    return reward == 1.0 ? BeliefState(b.family(), b.alpha() + 1.0, b.beta())
                         : BeliefState(b.family(), b.alpha(), b.beta() + 1.0);
  }
  return {b.family(), b.alpha() + 1.0, b.beta() + reward};
}

inline BeliefState posterior_update(const BeliefState& b, const Observation& x) {
  return posterior_update(b, x.reward);
}

// Posterior-predictive mean reward. Bernoulli: a/(a+b). Exponential:
// E[1/theta] = b/(a-1), which requires a > 1.
inline double mean_reward(const BeliefState& b) {
  if (b.family().kind == FamilyKind::Bernoulli) return b.alpha() / b.total();
  if (b.alpha() <= 1.0) {
    throw DomainError("mean_reward: gamma belief with shape <= 1 has no finite mean reward");
  }
  return b.beta() / (b.alpha() - 1.0);
}

// Same as mean_reward but +inf where the predictive mean diverges.
inline double mean_reward_or_inf(const BeliefState& b) noexcept {
  if (b.family().kind == FamilyKind::Exponential && b.alpha() <= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  return b.family().kind == FamilyKind::Bernoulli ? b.alpha() / b.total()
                                                  : b.beta() / (b.alpha() - 1.0);
}

// KL(p || q) between two beliefs of the same family, in closed form.
inline double kl_belief(const BeliefState& p, const BeliefState& q) {
  if (p.family() != q.family()) throw DomainError("kl_belief: family mismatch");
  const double a = p.alpha(), b = p.beta();
  const double a2 = q.alpha(), b2 = q.beta();
  if (p == q) return 0.0;
  double kl;
  if (p.family().kind == FamilyKind::Bernoulli) {
    kl = log_beta(a2, b2) - log_beta(a, b) + (a - a2) * digamma(a) + (b - b2) * digamma(b) -
         (a + b - a2 - b2) * digamma(a + b);
  } else {
    kl = (a - a2) * digamma(a) - log_gamma(a) + log_gamma(a2) + a2 * (std::log(b) - std::log(b2)) +
         a * (b2 - b) / b;
  }
  // Rounding can leave tiny negative values for nearly equal arguments.
  return kl < 0.0 ? 0.0 : kl;
}

inline ExpectationParams expectation_params(const BeliefState& b) {
  if (b.family().kind == FamilyKind::Bernoulli) {
    const double psi_n = digamma(b.total());
    return {{digamma(b.alpha()) - psi_n, digamma(b.beta()) - psi_n}};
  }
  return {{digamma(b.alpha()) - std::log(b.beta()), b.alpha() / b.beta()}};
}

namespace detail {

inline constexpr int kInversionMaxIter = 100;
inline constexpr double kInversionTol = 1e-12;

// Inverse of digamma on (0, inf): Newton from the usual two-regime guess.
inline double inverse_digamma(double y) {
  constexpr double kEulerGamma = 0.57721566490153286061;
  double x = y >= -2.22 ? std::exp(y) + 0.5 : -1.0 / (y + kEulerGamma);
  for (int it = 0; it < 60; ++it) {
    const double step = (digamma(x) - y) / trigamma(x);
    double nx = x - step;
    if (!(nx > 0.0)) nx = 0.5 * x;
    const bool done = std::abs(nx - x) <= 1e-15 * x;
    x = nx;
    if (done) break;
  }
  return x;
}

// Fixed points of n -> psi^-1(m1 + psi(n)) + psi^-1(m2 + psi(n)) are the
// solutions of the beta system. The map exceeds n for small n and falls
// below it for large n, so bisection in log n brackets the unique root.
inline std::pair<double, double> beta_guess_by_total(double m1, double m2, double log_n0) {
  auto h = [&](double u) {
    const double psi_n = digamma(std::exp(u));
    return std::log(inverse_digamma(m1 + psi_n) + inverse_digamma(m2 + psi_n)) - u;
  };
  double lo = log_n0, hi = log_n0;
  while (h(lo) <= 0.0 && lo > -600.0) lo -= 2.0;
  while (h(hi) >= 0.0 && hi < 600.0) hi += 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  const double psi_n = digamma(std::exp(0.5 * (lo + hi)));
  return {std::log(inverse_digamma(m1 + psi_n)), std::log(inverse_digamma(m2 + psi_n))};
}

// Newton on (log a, log b) with a residual-decreasing backtracking line
// search. Returns true once the residual norm is below kInversionTol.
inline bool beta_newton(double m1, double m2, double& x, double& y, int max_iter) {
  auto residual = [&](double lx, double ly, double& r1, double& r2) {
    const double a = std::exp(lx), b = std::exp(ly);
    const double psi_n = digamma(a + b);
    r1 = digamma(a) - psi_n - m1;
    r2 = digamma(b) - psi_n - m2;
  };
  double r1, r2;
  residual(x, y, r1, r2);
  for (int it = 0; it < max_iter; ++it) {
    const double norm = std::hypot(r1, r2);
    if (norm < kInversionTol) return true;
    const double a = std::exp(x), b = std::exp(y);
    const double t1 = trigamma(a), t2 = trigamma(b), tn = trigamma(a + b);
    // Jacobian in log coordinates.
    const double j11 = (t1 - tn) * a, j12 = -tn * b;
    const double j21 = -tn * a, j22 = (t2 - tn) * b;
    const double det = j11 * j22 - j12 * j21;
    const double dx = (r1 * j22 - r2 * j12) / det;
    const double dy = (j11 * r2 - j21 * r1) / det;
    bool moved = false;
    double step = 1.0;
    for (int ls = 0; ls < 60 && !moved; ++ls, step *= 0.5) {
      const double nx = x - step * dx, ny = y - step * dy;
      if (std::abs(nx) >= 700.0 || std::abs(ny) >= 700.0) continue;
      double n1, n2;
      residual(nx, ny, n1, n2);
      if (std::hypot(n1, n2) < norm) {
        x = nx, y = ny, r1 = n1, r2 = n2;
        moved = true;
      }
    }
    if (!moved) break;
  }
  return std::hypot(r1, r2) < kInversionTol;
}

// Solves psi(a) - psi(a+b) = m1, psi(b) - psi(a+b) = m2. Newton from an
// asymptotic guess handles the bulk of the domain; when it stalls (skewed
// beliefs with one parameter well below 1) the bracketed 1-D solve on the
// total supplies a start inside Newton's basin.
inline BeliefState invert_beta(double m1, double m2) {
  const double p1 = std::exp(m1), p2 = std::exp(m2);
  // Jensen: exp(E log theta) + exp(E log(1-theta)) < 1 on the realizable set.
  if (!(m1 < 0.0) || !(m2 < 0.0) || !(p1 + p2 < 1.0)) {
    throw DomainError("natural_from_expectation: (" + std::to_string(m1) + ", " +
                      std::to_string(m2) + ") is not the expectation of any beta belief");
  }
  // Initial guess from psi(x) ~ log x - 1/(2x).
  const double p = p1 / (p1 + p2), q = p2 / (p1 + p2);
  const double gap = std::log(p) + std::log(q) - (m1 + m2);
  double n = gap > 0.0 ? (q / p + p / q) / (2.0 * gap) : 1.0;
  n = std::clamp(n, 1e-3, 1e9);
  double x = std::log(p * n), y = std::log(q * n);
  if (beta_newton(m1, m2, x, y, 30)) return BeliefState::beta_dist(std::exp(x), std::exp(y));
  std::tie(x, y) = beta_guess_by_total(m1, m2, std::log(n));
  if (beta_newton(m1, m2, x, y, kInversionMaxIter)) return BeliefState::beta_dist(std::exp(x), std::exp(y));
  double r1 = 0.0, r2 = 0.0;
  {
    const double a = std::exp(x), b = std::exp(y), psi_n = digamma(a + b);
    r1 = digamma(a) - psi_n - m1;
    r2 = digamma(b) - psi_n - m2;
  }
  if (std::hypot(r1, r2) < 1e-10) return BeliefState::beta_dist(std::exp(x), std::exp(y));
  throw ConvergenceError("natural_from_expectation: beta inversion did not converge");
}

// Gamma reduces to log a - psi(a) = log m2 - m1, then b = a / m2.
inline BeliefState invert_gamma(double m1, double m2) {
  if (!(m2 > 0.0) || !std::isfinite(m1)) {
    throw DomainError("natural_from_expectation: gamma expectation needs E theta > 0");
  }
  const double target = std::log(m2) - m1;
  // Jensen: E log theta < log E theta.
  if (!(target > 0.0)) {
    throw DomainError("natural_from_expectation: (" + std::to_string(m1) + ", " +
                      std::to_string(m2) + ") is not the expectation of any gamma belief");
  }
  // log a - psi(a) ~ 1/(2a) for large a and ~ 1/a for small a.
  double x = std::log(target < 0.5 ? 0.5 / target : 1.0 / target);
  for (int it = 0; it < kInversionMaxIter; ++it) {
    const double a = std::exp(x);
    const double r = std::log(a) - digamma(a) - target;
    if (std::abs(r) < kInversionTol * std::max(1.0, target)) {
      return BeliefState::gamma_dist(a, a / m2);
    }
    const double dr = (1.0 / a - trigamma(a)) * a;  // d r / d log a, always < 0
    double step = 1.0;
    for (int ls = 0; ls < 60; ++ls) {
      const double nx = x - step * r / dr;
      if (std::abs(nx) < 700.0) {
        const double na = std::exp(nx);
        if (std::abs(std::log(na) - digamma(na) - target) < std::abs(r) || step < 1e-12) {
          x = nx;
          break;
        }
      }
      step *= 0.5;
    }
  }
  throw ConvergenceError("natural_from_expectation: gamma inversion did not converge");
}

}  // namespace detail

// Inverse of expectation_params.
inline BeliefState natural_from_expectation(const ExpectationParams& mu, RewardFamily family) {
  return family.kind == FamilyKind::Bernoulli ? detail::invert_beta(mu.mu[0], mu.mu[1])
                                              : detail::invert_gamma(mu.mu[0], mu.mu[1]);
}

}  // namespace belman
