#pragma once

// Slow reference computations used to check the closed forms and optimizers:
// quadrature of the defining integrals and exhaustive grid searches. They use
// Boost's special functions, never the library's own.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "belman/errors.hpp"
#include "belman/expfam.hpp"

namespace belman::oracle {

inline double log_beta_fn(double a, double b) {
  return boost::math::lgamma(a) + boost::math::lgamma(b) - boost::math::lgamma(a + b);
}

// Log density of the belief at theta. For beta beliefs `one_minus` is 1 - theta,
// passed separately so mass packed against theta = 1 keeps full precision.
inline double log_density(const BeliefState& b, double theta, double one_minus) {
  const double a = b.alpha(), c = b.beta();
  if (b.family().kind == FamilyKind::Bernoulli) {
    return (a - 1.0) * std::log(theta) + (c - 1.0) * std::log(one_minus) - log_beta_fn(a, c);
  }
  return a * std::log(c) - boost::math::lgamma(a) + (a - 1.0) * std::log(theta) - c * theta;
}

inline double log_density(const BeliefState& b, double theta) { return log_density(b, theta, 1.0 - theta); }

namespace detail {

// Integral of f(theta, 1 - theta) over (0, 1), split at `mid` so both endpoint
// layers resolve. The upper piece is integrated in s = 1 - theta.
template <class F>
double integrate_unit(F&& f, double mid) {
  boost::math::quadrature::tanh_sinh<double> ts(15);
  mid = std::clamp(mid, 1e-6, 1.0 - 1e-6);
  auto lower = [&](double th) { return f(th, 1.0 - th); };
  auto upper = [&](double s) { return f(1.0 - s, s); };
  return ts.integrate(lower, 0.0, mid, 1e-13) + ts.integrate(upper, 0.0, 1.0 - mid, 1e-13);
}

// Integral of f over (0, inf), split at `mid`.
template <class F>
double integrate_half_line(F&& f, double mid) {
  boost::math::quadrature::tanh_sinh<double> ts(15);
  boost::math::quadrature::exp_sinh<double> es(15);
  return ts.integrate(f, 0.0, mid, 1e-13) + es.integrate(f, mid, std::numeric_limits<double>::infinity(), 1e-13);
}

inline double belief_mode_guess(const BeliefState& b) {
  if (b.family().kind == FamilyKind::Bernoulli) return b.alpha() / b.total();
  return b.alpha() / b.beta();
}

}  // namespace detail

// KL(p || q) = integral of p log(p / q) over the parameter space.
inline double kl_quadrature(const BeliefState& p, const BeliefState& q) {
  auto f = [&](double th, double om) {
    const double lp = log_density(p, th, om);
    if (!std::isfinite(lp)) return 0.0;
    const double w = std::exp(lp);
    if (w == 0.0) return 0.0;
    return w * (lp - log_density(q, th, om));
  };
  if (p.family().kind == FamilyKind::Bernoulli) return detail::integrate_unit(f, detail::belief_mode_guess(p));
  return detail::integrate_half_line([&](double th) { return f(th, 1.0 - th); }, detail::belief_mode_guess(p));
}

// Bernoulli: Zbar = sum_x integral b(theta) f_theta(x) e^{x/tau} dtheta.
// Exponential: integral b(theta) g(theta) dtheta with the inner reward integral
// integral theta e^{-theta x} e^{x/tau} dx done numerically for theta > 2/tau and
// the tilt held at 2 below that (the library's capped normalizer).
inline double log_normalizer_quadrature(const BeliefState& pb, double tau) {
  if (std::isinf(tau)) return 0.0;
  const double c = 1.0 / tau;
  if (pb.family().kind == FamilyKind::Bernoulli) {
    auto f = [&](double th, double om) { return std::exp(log_density(pb, th, om)) * (om + th * std::exp(c)); };
    return std::log(detail::integrate_unit(f, detail::belief_mode_guess(pb)));
  }
  boost::math::quadrature::exp_sinh<double> es(12);
  auto tilt = [&](double th) {
    if (th <= 2.0 * c) return 2.0;
    auto g = [&](double x) { return th * std::exp(-(th - c) * x); };
    return es.integrate(g, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
  };
  auto f = [&](double th) { return std::exp(log_density(pb, th)) * tilt(th); };
  boost::math::quadrature::tanh_sinh<double> ts(15);
  const double cut = 2.0 * c;
  const double mode = detail::belief_mode_guess(pb);
  double total = ts.integrate(f, 0.0, cut, 1e-12);
  if (mode > cut) total += ts.integrate(f, cut, mode, 1e-12);
  boost::math::quadrature::exp_sinh<double> tail(12);
  total += tail.integrate(f, std::max(cut, mode), std::numeric_limits<double>::infinity(), 1e-12);
  return std::log(total);
}

// Full KL(P^a || Qbar) for Bernoulli beliefs, Qbar(x, theta) =
// pb(theta) f_theta(x) e^{x/tau} / Zbar, by quadrature over theta and a sum over x.
inline double divergence_quadrature(const BeliefState& arm, const BeliefState& pb, double tau) {
  if (arm.family().kind != FamilyKind::Bernoulli) {
    throw DomainError("divergence_quadrature: Bernoulli beliefs only");
  }
  const double c = std::isinf(tau) ? 0.0 : 1.0 / tau;
  const double log_z = log_normalizer_quadrature(pb, tau);
  auto f = [&](double th, double om) {
    const double la = log_density(arm, th, om);
    const double w = std::exp(la);
    if (w == 0.0) return 0.0;
    const double base = la - log_density(pb, th, om) + log_z;
    // x = 1 with probability theta, x = 0 otherwise; f_theta(x) cancels.
    return w * (th * (base - c) + om * base);
  };
  return detail::integrate_unit(f, detail::belief_mode_guess(arm));
}

// Sum over arms of KL(P^a || Qbar) for Bernoulli beliefs, in closed form with
// Boost special functions, reward term included.
inline double ri_objective_reference(std::span<const BeliefState> arms, double a_bar, double b_bar,
                                     double tau) {
  using boost::math::digamma;
  const double c = std::isinf(tau) ? 0.0 : 1.0 / tau;
  const double log_z = std::isinf(tau) ? 0.0 : std::log((a_bar * std::exp(c) + b_bar) / (a_bar + b_bar));
  double sum = 0.0;
  for (const auto& p : arms) {
    const double a = p.alpha(), b = p.beta(), n = a + b;
    const double kl = log_beta_fn(a_bar, b_bar) - log_beta_fn(a, b) + (a - a_bar) * digamma(a) +
                      (b - b_bar) * digamma(b) - (n - a_bar - b_bar) * digamma(n);
    sum += kl - c * a / n + log_z;
  }
  return sum;
}

// Closed-form KL between two beliefs of the same family, Boost special functions.
inline double kl_reference(const BeliefState& p, const BeliefState& q) {
  using boost::math::digamma;
  const double a1 = p.alpha(), b1 = p.beta(), a2 = q.alpha(), b2 = q.beta();
  if (p.family().kind == FamilyKind::Bernoulli) {
    return log_beta_fn(a2, b2) - log_beta_fn(a1, b1) + (a1 - a2) * digamma(a1) + (b1 - b2) * digamma(b1) -
           (a1 + b1 - a2 - b2) * digamma(a1 + b1);
  }
  return (a1 - a2) * digamma(a1) - boost::math::lgamma(a1) + boost::math::lgamma(a2) +
         a2 * (std::log(b1) - std::log(b2)) + a1 * (b2 - b1) / b1;
}

struct GridMin {
  double alpha = 0.0;
  double beta = 0.0;
  double value = std::numeric_limits<double>::infinity();
};

// Minimum of f over the grid {lo + i h} x {lo + j h} inside [lo, hi]^2.
template <class F>
GridMin grid_minimum(F&& f, double lo_a, double hi_a, double lo_b, double hi_b, double h) {
  GridMin best;
  const auto na = static_cast<long>(std::floor((hi_a - lo_a) / h + 1e-9));
  const auto nb = static_cast<long>(std::floor((hi_b - lo_b) / h + 1e-9));
  for (long i = 0; i <= na; ++i) {
    const double a = lo_a + static_cast<double>(i) * h;
    for (long j = 0; j <= nb; ++j) {
      const double b = lo_b + static_cast<double>(j) * h;
      const double v = f(a, b);
      if (v < best.value) best = {a, b, v};
    }
  }
  return best;
}

// Grid search of the Bernoulli rI objective at resolution h. A coarse 10h pass
// over (0, box] locates the basin (the objective is convex in (alpha, beta));
// the h pass covers +-20h around it, extended whenever the minimum sits on
// the window's edge.
inline GridMin ri_grid_argmin(std::span<const BeliefState> arms, double tau, double h = 0.01) {
  double box = 0.0;
  for (const auto& a : arms) box = std::max(box, 2.0 * a.total());
  auto f = [&](double a, double b) { return ri_objective_reference(arms, a, b, tau); };
  GridMin g = grid_minimum(f, 10.0 * h, box, 10.0 * h, box, 10.0 * h);
  const double half = 20.0 * h;
  for (int round = 0; round < 50; ++round) {
    const double lo_a = std::max(h, g.alpha - half), lo_b = std::max(h, g.beta - half);
    const double hi_a = g.alpha + half, hi_b = g.beta + half;
    const GridMin fine = grid_minimum(f, lo_a, hi_a, lo_b, hi_b, h);
    auto on_edge = [&](double v, double lo, double hi) {
      return (v < lo + 0.5 * h && lo > h) || v > hi - 0.5 * h;
    };
    const bool moved = on_edge(fine.alpha, lo_a, hi_a) || on_edge(fine.beta, lo_b, hi_b);
    g = fine;
    if (!moved) break;
  }
  return g;
}

// Exhaustive search of sum_a KL(b^a || candidate) over the n x n grid of
// (0, box]^2 with spacing box / n.
inline GridMin barycentre_grid_argmin(std::span<const BeliefState> arms, std::size_t n = 400,
                                      double box = 10.0) {
  const double h = box / static_cast<double>(n);
  auto f = [&](double a, double b) {
    double s = 0.0;
    for (const auto& p : arms) {
      s += kl_reference(p, BeliefState(p.family(), a, b));
    }
    return s;
  };
  return grid_minimum(f, h, box, h, box, h);
}

}  // namespace belman::oracle
