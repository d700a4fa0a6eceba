#pragma once

// Belief-reward manifold operations: exposure schedules, the focal
// normalizer, the pseudobelief barycentre and the two KL projections.
//
// For arms P^a(X, theta) = b^a(theta) f_theta(X) and a candidate
// pseudobelief-focal-reward Qbar(X, theta) = b(theta) f_theta(X) e^{X/tau} / Z,
//
//   KL(P^a || Qbar) = KL(b^a || b) - E_{P^a}[X] / tau + log Z(b, tau).
//
// The rI-projection minimises the sum of these over (alpha, beta) of b; the
// I-projection picks the arm with the smallest one.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "belman/errors.hpp"
#include "belman/expfam.hpp"
#include "belman/special_functions.hpp"

namespace belman {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// tau(t). Infinite: pure exploration. LogSchedule(C): 1/(log t + C log log t),
// +inf where that denominator is <= 1e-12. TwoPhase: +inf for t <= T_exp, then
// the log schedule.
class ExposureSchedule {
 public:
  enum class Kind { Infinite, LogSchedule, TwoPhase };

  static ExposureSchedule infinite() { return {Kind::Infinite, 0.0, 0}; }
  static ExposureSchedule log_schedule(double c = 15.0) {
    if (!(c > 0.0)) throw DomainError("ExposureSchedule: C must be > 0");
    return {Kind::LogSchedule, c, 0};
  }
  static ExposureSchedule two_phase(std::uint64_t exploration_steps, double c = 15.0) {
    if (!(c > 0.0)) throw DomainError("ExposureSchedule: C must be > 0");
    return {Kind::TwoPhase, c, exploration_steps};
  }

  Kind kind() const noexcept { return kind_; }
  double c() const noexcept { return c_; }
  std::uint64_t exploration_steps() const noexcept { return exploration_steps_; }

  friend bool operator==(const ExposureSchedule&, const ExposureSchedule&) = default;

 private:
  ExposureSchedule(Kind k, double c, std::uint64_t t_exp)
      : kind_(k), c_(c), exploration_steps_(t_exp) {}

  Kind kind_;
  double c_;
  std::uint64_t exploration_steps_;
};

inline double exposure(const ExposureSchedule& schedule, std::uint64_t t) {
  if (t < 1) throw DomainError("exposure: t must be >= 1");
  switch (schedule.kind()) {
    case ExposureSchedule::Kind::Infinite:
      return kInf;
    case ExposureSchedule::Kind::TwoPhase:
      if (t <= schedule.exploration_steps()) return kInf;
      [[fallthrough]];
    case ExposureSchedule::Kind::LogSchedule: {
      const double lt = std::log(static_cast<double>(t));
      const double denom = lt + schedule.c() * std::log(lt);  // log(0) = -inf at t = 1
      return denom > 1e-12 ? 1.0 / denom : kInf;
    }
  }
  return kInf;
}

// Qbar: the pseudobelief b together with the exposure it was projected with.
// `tau` is the exposure actually used, which may be smaller than requested_tau
// for gamma beliefs (see ri_projection).
struct PseudobeliefFocal {
  BeliefState pseudo_belief;
  double tau = kInf;
  double log_z = 0.0;
  double requested_tau = kInf;

  bool tau_clamped() const noexcept { return tau != requested_tau; }
};

namespace detail {

// Expectation of phi(y) for y ~ Gamma(shape, 1), restricted to [lo, hi).
template <class F>
double gamma_expectation(double shape, double lo, double hi, F&& phi) {
  using boost::math::quadrature::gauss_kronrod;
  using boost::math::quadrature::tanh_sinh;
  if (!(hi > lo)) return 0.0;
  const double log_norm = log_gamma(shape);
  auto integrand = [&](double y) {
    if (!(y > 0.0)) return 0.0;
    const double v = phi(y);
    if (v == 0.0) return 0.0;
    return std::exp((shape - 1.0) * std::log(y) - y - log_norm) * v;
  };
  const double centre = std::max(shape - 1.0, 0.0);
  const double spread = std::sqrt(shape);
  // Beyond centre + 40 spread + 40 the gamma mass is below e^-40 relative to
  // the bulk; integrating that tail only stalls the adaptive rule on a
  // relative tolerance it cannot meet.
  hi = std::min(hi, centre + 40.0 * spread + 40.0);
  if (!(hi > lo)) return 0.0;
  std::vector<double> cuts{lo};
  for (double k : {-8.0, 0.0, 8.0}) {
    const double p = centre + k * spread;
    if (p > lo && p < hi) cuts.push_back(p);
  }
  cuts.push_back(hi);
  constexpr double kTol = 1e-13;
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (std::isinf(b)) {
      total += gauss_kronrod<double, 61>::integrate(integrand, a, b, 20, kTol);
    } else if (a == 0.0) {
      // y^(shape-1) and log y are not smooth at 0.
      thread_local tanh_sinh<double> ts;
      total += ts.integrate(integrand, a, b, kTol);
    } else {
      total += gauss_kronrod<double, 61>::integrate(integrand, a, b, 20, kTol);
    }
  }
  return total;
}

// The gamma-exponential focal normalizer
//   Z = E_b[ integral_0^inf theta e^{-theta x} e^{c x} dx ] = E_b[theta / (theta - c)]
// diverges for every c > 0, since any gamma belief puts mass on theta <= c.
// The tilt factor theta/(theta - c) is therefore capped at its value 2 at
// theta = 2c. ri_projection keeps P(theta <= 2c) <= 1% so the cap only touches
// the lower tail. Returns (log Z, d log Z / d alpha, d log Z / d beta).
struct CappedNormalizer {
  double log_z = 0.0;
  double d_alpha = 0.0;
  double d_beta = 0.0;
};

inline constexpr double kCapTailMass = 0.01;

inline CappedNormalizer capped_gamma_normalizer(double alpha, double beta, double c,
                                                bool with_gradient) {
  if (c <= 0.0) return {};
  // In y = beta * theta ~ Gamma(alpha, 1), the kink sits at y0 = 2 c beta and
  // (tilt - 1) = 1 below it, c beta / (y - c beta) above.
  const double cb = c * beta;
  const double y0 = 2.0 * cb;
  const double lower_mass = boost::math::gamma_p(alpha, y0);
  auto excess = [cb](double y) { return cb / (y - cb); };
  const double upper = gamma_expectation(alpha, y0, kInf, excess);
  const double z = 1.0 + lower_mass + upper;
  CappedNormalizer out{std::log(z), 0.0, 0.0};
  if (!with_gradient) return out;
  // d/d alpha log b(theta) = log y - psi(alpha); d/d beta = (alpha - y) / beta.
  const double psi_a = digamma(alpha);
  const double lower_log =
      gamma_expectation(alpha, 0.0, y0, [](double y) { return std::log(y); });
  const double upper_log = gamma_expectation(
      alpha, y0, kInf, [&](double y) { return excess(y) * std::log(y); });
  const double dz_da = lower_log + upper_log - psi_a * (lower_mass + upper);
  // E[y 1{y < y0}] = alpha P(alpha + 1, y0).
  const double lower_y = alpha * boost::math::gamma_p(alpha + 1.0, y0);
  const double upper_y = gamma_expectation(alpha, y0, kInf, [&](double y) { return excess(y) * y; });
  const double dz_db = (alpha * (lower_mass + upper) - lower_y - upper_y) / beta;
  out.d_alpha = dz_da / z;
  out.d_beta = dz_db / z;
  return out;
}

inline double gamma_lower_percentile(const BeliefState& b, double p) {
  return boost::math::gamma_p_inv(b.alpha(), p) / b.beta();
}

}  // namespace detail

// log Zbar for the pseudobelief pb at exposure tau. Bernoulli:
// log((a e^{1/tau} + b) / (a + b)). Exponential: log E_b[theta / (theta - 1/tau)]
// with the tilt capped below theta = 2/tau; throws DivergentNormalizerError
// when more than 1% of the belief mass lies below 2/tau.
inline double log_focal_normalizer(const BeliefState& pb, double tau) {
  if (!(tau > 0.0)) throw DomainError("log_focal_normalizer: tau must be > 0");
  if (std::isinf(tau)) return 0.0;
  const double c = 1.0 / tau;
  if (pb.family().kind == FamilyKind::Bernoulli) {
    // log(a e^c + b) - log(a + b), evaluated without overflowing e^c.
    const double la = std::log(pb.alpha()) + c, lb = std::log(pb.beta());
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    return hi + std::log1p(std::exp(lo - hi)) - std::log(pb.total());
  }
  const double tail = boost::math::gamma_p(pb.alpha(), 2.0 * c * pb.beta());
  if (tail > detail::kCapTailMass * (1.0 + 1e-9)) {
    throw DivergentNormalizerError(
        "log_focal_normalizer: " + std::to_string(100.0 * tail) +
        "% of the gamma belief lies below 2/tau; clamp tau before projecting");
  }
  return detail::capped_gamma_normalizer(pb.alpha(), pb.beta(), c, false).log_z;
}

// Barycentre: the belief whose expectation parameters are the arithmetic
// mean of the arms' expectation parameters.
inline BeliefState pseudobelief_barycentre(std::span<const BeliefState> arms) {
  if (arms.empty()) throw DomainError("pseudobelief_barycentre: no arms");
  const RewardFamily family = arms.front().family();
  ExpectationParams mean{};
  for (const auto& a : arms) {
    if (a.family() != family) throw DomainError("pseudobelief_barycentre: mixed families");
    const auto mu = expectation_params(a);
    mean.mu[0] += mu.mu[0];
    mean.mu[1] += mu.mu[1];
  }
  mean.mu[0] /= static_cast<double>(arms.size());
  mean.mu[1] /= static_cast<double>(arms.size());
  if (arms.size() == 1) return arms.front();
  return natural_from_expectation(mean, family);
}

// Sum over arms of KL(P^a || Qbar) for Qbar built from `candidate` at exposure
// tau, without the reward term -E_{P^a}[X]/tau (it does not depend on the
// candidate, and is infinite for gamma arms with shape <= 1). For gamma beliefs
// the capped normalizer is used and no tail check is made.
inline double ri_objective(std::span<const BeliefState> arms, const BeliefState& candidate,
                           double tau) {
  double sum = 0.0;
  for (const auto& a : arms) sum += kl_belief(a, candidate);
  double log_z = 0.0;
  if (!std::isinf(tau)) {
    log_z = candidate.family().kind == FamilyKind::Bernoulli
                ? log_focal_normalizer(candidate, tau)
                : detail::capped_gamma_normalizer(candidate.alpha(), candidate.beta(), 1.0 / tau,
                                                  false)
                      .log_z;
  }
  return sum + static_cast<double>(arms.size()) * log_z;
}

namespace detail {

struct Point2 {
  double x = 0.0, y = 0.0;
};

// Per-arm averaged rI objective in log coordinates (x, y) = (log a, log b),
// with arm-only constants dropped. Provides value, gradient and Hessian.
class RiObjective {
 public:
  RiObjective(std::span<const BeliefState> arms, double c) : c_(c) {
    family_ = arms.front().family();
    for (const auto& a : arms) {
      const auto mu = expectation_params(a);
      m1_ += mu.mu[0];
      m2_ += mu.mu[1];
    }
    m1_ /= static_cast<double>(arms.size());
    m2_ /= static_cast<double>(arms.size());
  }

  bool bernoulli() const noexcept { return family_.kind == FamilyKind::Bernoulli; }

  double value(Point2 p) const {
    const double a = std::exp(p.x), b = std::exp(p.y);
    if (bernoulli()) {
      return log_beta(a, b) - a * m1_ - b * m2_ + bernoulli_log_z(a, b);
    }
    return log_gamma(a) - a * p.y - a * m1_ + b * m2_ +
           capped_gamma_normalizer(a, b, c_, false).log_z;
  }

  // Gradient with respect to (a, b), not (x, y).
  std::array<double, 2> natural_gradient(double a, double b) const {
    if (bernoulli()) {
      const double psi_n = digamma(a + b);
      const double w = focal_weight(a, b);
      return {digamma(a) - psi_n - m1_ + w / a - 1.0 / (a + b),
              digamma(b) - psi_n - m2_ + (1.0 - w) / b - 1.0 / (a + b)};
    }
    const auto z = capped_gamma_normalizer(a, b, c_, true);
    return {digamma(a) - std::log(b) - m1_ + z.d_alpha, -a / b + m2_ + z.d_beta};
  }

  std::array<double, 2> gradient(Point2 p) const {
    const double a = std::exp(p.x), b = std::exp(p.y);
    const auto g = natural_gradient(a, b);
    return {a * g[0], b * g[1]};
  }

  // Hessian in log coordinates.
  std::array<double, 3> hessian(Point2 p) const {
    const double a = std::exp(p.x), b = std::exp(p.y);
    const auto g = natural_gradient(a, b);
    double haa, hab, hbb;
    if (bernoulli()) {
      const double tn = trigamma(a + b);
      const double w = focal_weight(a, b);
      const double ea = w / a, eb = (1.0 - w) / b;  // e^c / D and 1 / D
      const double inv_n2 = 1.0 / ((a + b) * (a + b));
      haa = trigamma(a) - tn - ea * ea + inv_n2;
      hab = -tn - ea * eb + inv_n2;
      hbb = trigamma(b) - tn - eb * eb + inv_n2;
    } else {
      // Analytic for the KL part, central differences for the normalizer.
      const double h = 1e-5;
      const auto zp_a = capped_gamma_normalizer(a * (1 + h), b, c_, true);
      const auto zm_a = capped_gamma_normalizer(a * (1 - h), b, c_, true);
      const auto zp_b = capped_gamma_normalizer(a, b * (1 + h), c_, true);
      const auto zm_b = capped_gamma_normalizer(a, b * (1 - h), c_, true);
      const double zaa = (zp_a.d_alpha - zm_a.d_alpha) / (2 * h * a);
      const double zbb = (zp_b.d_beta - zm_b.d_beta) / (2 * h * b);
      const double zab = 0.5 * ((zp_b.d_alpha - zm_b.d_alpha) / (2 * h * b) +
                                (zp_a.d_beta - zm_a.d_beta) / (2 * h * a));
      haa = trigamma(a) + zaa;
      hab = -1.0 / b + zab;
      hbb = a / (b * b) + zbb;
    }
    return {a * a * haa + a * g[0], a * b * hab, b * b * hbb + b * g[1]};
  }

 private:
  // w = a e^c / (a e^c + b).
  double focal_weight(double a, double b) const {
    if (c_ == 0.0) return a / (a + b);
    return 1.0 / (1.0 + (b / a) * std::exp(-c_));
  }
  double bernoulli_log_z(double a, double b) const {
    const double la = std::log(a) + c_, lb = std::log(b);
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    return hi + std::log1p(std::exp(lo - hi)) - std::log(a + b);
  }

  RewardFamily family_;
  double c_;
  double m1_ = 0.0, m2_ = 0.0;
};

inline constexpr int kNewtonMaxIter = 200;
inline constexpr double kNewtonGradTol = 1e-10;

struct MinimizeResult {
  Point2 p;
  double value;
  bool converged;
};

inline bool finite_point(Point2 p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::abs(p.x) < 690.0 &&
         std::abs(p.y) < 690.0;
}

// Damped Newton with Levenberg-style regularisation and Armijo backtracking.
// The objective never increases.
inline MinimizeResult newton_minimize(const RiObjective& f, Point2 p) {
  double fp = f.value(p);
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const auto g = f.gradient(p);
    const double gnorm = std::hypot(g[0], g[1]);
    if (!std::isfinite(gnorm)) return {p, fp, false};
    if (gnorm < kNewtonGradTol) return {p, fp, true};
    auto h = f.hessian(p);
    // Shift the Hessian until it is positive definite.
    double shift = 0.0;
    for (;;) {
      const double h11 = h[0] + shift, h22 = h[2] + shift;
      if (h11 > 0.0 && h11 * h22 - h[1] * h[1] > 0.0) break;
      shift = shift == 0.0 ? 1e-8 * (1.0 + std::abs(h[0]) + std::abs(h[2])) : shift * 10.0;
      if (!std::isfinite(shift)) return {p, fp, false};
    }
    const double h11 = h[0] + shift, h22 = h[2] + shift, h12 = h[1];
    const double det = h11 * h22 - h12 * h12;
    Point2 d{-(h22 * g[0] - h12 * g[1]) / det, -(h11 * g[1] - h12 * g[0]) / det};
    // Cap the step so exp() stays well inside double range.
    const double dn = std::hypot(d.x, d.y);
    if (dn > 5.0) d = {d.x * 5.0 / dn, d.y * 5.0 / dn};
    const double slope = g[0] * d.x + g[1] * d.y;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Point2 q{p.x + step * d.x, p.y + step * d.y};
      if (finite_point(q)) {
        const double fq = f.value(q);
        if (std::isfinite(fq) && fq <= fp + 1e-4 * step * slope) {
          p = q;
          fp = fq;
          moved = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!moved) {
      // No descent possible in floating point: accept if the gradient is
      // already at the noise floor of the objective.
      return {p, fp, gnorm < 1e-7};
    }
    if (step * std::hypot(d.x, d.y) < 1e-15) return {p, fp, gnorm < 1e-7};
  }
  const auto g = f.gradient(p);
  return {p, fp, std::hypot(g[0], g[1]) < kNewtonGradTol};
}

// Derivative-free fallback: cyclic golden-section line searches along the two
// log coordinates.
inline MinimizeResult coordinate_descent(const RiObjective& f, Point2 p) {
  double fp = f.value(p);
  constexpr double kGolden = 0.6180339887498949;
  for (int sweep = 0; sweep < 200; ++sweep) {
    const double before = fp;
    for (int axis = 0; axis < 2; ++axis) {
      auto along = [&](double s) {
        Point2 q = p;
        (axis == 0 ? q.x : q.y) += s;
        return finite_point(q) ? f.value(q) : kInf;
      };
      // Bracket the minimum by expanding steps.
      double lo = -1.0, hi = 1.0;
      while (along(lo) < fp && lo > -40.0) lo *= 2.0;
      while (along(hi) < fp && hi < 40.0) hi *= 2.0;
      double x1 = hi - kGolden * (hi - lo), x2 = lo + kGolden * (hi - lo);
      double f1 = along(x1), f2 = along(x2);
      for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        if (f1 < f2) {
          hi = x2, x2 = x1, f2 = f1;
          x1 = hi - kGolden * (hi - lo), f1 = along(x1);
        } else {
          lo = x1, x1 = x2, f1 = f2;
          x2 = lo + kGolden * (hi - lo), f2 = along(x2);
        }
      }
      const double s = 0.5 * (lo + hi);
      const double fs = along(s);
      if (fs < fp) {
        (axis == 0 ? p.x : p.y) += s;
        fp = fs;
      }
    }
    if (before - fp < 1e-15 * (1.0 + std::abs(fp))) {
      return {p, fp, true};
    }
  }
  return {p, fp, false};
}

inline constexpr int kMaxReclamp = 8;

}  // namespace detail

// rI-projection: the (alpha, beta) of Qbar minimising sum_a KL(P^a || Qbar).
// tau = +inf returns the barycentre. Newton starts from whichever of the
// barycentre and `warm_start` has the lower objective, so the result never
// scores worse than either.
//
// Gamma beliefs: 1/tau is clamped to half the 1st percentile of theta under the
// projected belief, which keeps the capped normalizer's tail at <= 1%. The
// clamped exposure is reported in the result.
inline PseudobeliefFocal ri_projection(std::span<const BeliefState> arms, double tau,
                                       std::optional<BeliefState> warm_start = std::nullopt) {
  if (arms.empty()) throw DomainError("ri_projection: no arms");
  if (!(tau > 0.0)) throw DomainError("ri_projection: tau must be > 0");
  const RewardFamily family = arms.front().family();
  for (const auto& a : arms) {
    if (a.family() != family) throw DomainError("ri_projection: mixed families");
  }
  const BeliefState bary = pseudobelief_barycentre(arms);
  if (std::isinf(tau)) return {bary, kInf, 0.0, kInf};

  double c = 1.0 / tau;
  const bool gamma = family.kind == FamilyKind::Exponential;
  BeliefState reference = bary;
  if (gamma) {
    c = std::min(c, 0.5 * detail::gamma_lower_percentile(reference, detail::kCapTailMass));
  }

  for (int round = 0; round <= detail::kMaxReclamp; ++round) {
    const detail::RiObjective objective(arms, c);
    detail::Point2 start{std::log(bary.alpha()), std::log(bary.beta())};
    if (warm_start && warm_start->family() == family) {
      const detail::Point2 w{std::log(warm_start->alpha()), std::log(warm_start->beta())};
      if (objective.value(w) < objective.value(start)) start = w;
    }
    auto result = detail::newton_minimize(objective, start);
    if (!result.converged) {
      const auto fallback = detail::coordinate_descent(objective, result.p);
      if (fallback.value <= result.value) result = fallback;
      if (!result.converged) {
        throw ConvergenceError("ri_projection: optimizer did not converge for " +
                               std::to_string(arms.size()) + " arms at tau=" +
                               std::to_string(1.0 / c));
      }
    }
    BeliefState pseudo(family, std::exp(result.p.x), std::exp(result.p.y));
    if (gamma) {
      const double limit = 0.5 * detail::gamma_lower_percentile(pseudo, detail::kCapTailMass);
      if (c > limit * (1.0 + 1e-9)) {
        c = limit;
        continue;
      }
    }
    const double effective_tau = 1.0 / c;
    return {pseudo, effective_tau, log_focal_normalizer(pseudo, effective_tau), tau};
  }
  throw ConvergenceError("ri_projection: exposure clamp for gamma beliefs did not settle");
}

// KL(P^a || Qbar) up to the arm-independent log Zbar:
//   KL(b^a || b) - E_{P^a}[X] / tau.
// Scores are only comparable within one Qbar. A gamma arm with shape <= 1 has
// an infinite predictive mean and scores -inf whenever tau is finite.
inline double i_projection_score(const BeliefState& arm, const PseudobeliefFocal& q) {
  if (arm.family() != q.pseudo_belief.family()) {
    throw DomainError("i_projection_score: family mismatch");
  }
  const double kl = kl_belief(arm, q.pseudo_belief);
  if (std::isinf(q.tau)) return kl;
  return kl - mean_reward_or_inf(arm) / q.tau;
}

// The full KL(P^a || Qbar), i.e. the score plus log Zbar.
inline double i_projection_divergence(const BeliefState& arm, const PseudobeliefFocal& q) {
  return i_projection_score(arm, q) + q.log_z;
}

}  // namespace belman
