#pragma once

// Closed-form decay rates and the admissibility conditions for the twisted
// entropy functionals. "rate" is always the exponential decay exponent of the
// entropy (twice the L² exponent μ for the constant-σ sharp case).

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gtlab/errors.hpp"
#include "gtlab/relaxation.hpp"

namespace gtlab {

enum class RateSource {
  ConstantSharp,
  ConstantDefectiveEps,
  PerturbativeThm,
  ImprovedPoincare,
  BernardSalvarani,
  ThreeVelocityCor,
};

inline const char* to_string(RateSource s) {
  switch (s) {
    case RateSource::ConstantSharp: return "ConstantSharp";
    case RateSource::ConstantDefectiveEps: return "ConstantDefectiveEps";
    case RateSource::PerturbativeThm: return "PerturbativeThm";
    case RateSource::ImprovedPoincare: return "ImprovedPoincare";
    case RateSource::BernardSalvarani: return "BernardSalvarani";
    case RateSource::ThreeVelocityCor: return "ThreeVelocityCor";
  }
  return "?";
}

struct RateReport {
  std::optional<double> theta;  // absent for rates not tied to an entropy twist
  double rate = 0.0;
  std::optional<double> prefactor;
  RateSource source = RateSource::ConstantSharp;
  std::optional<double> epsilon;
};

namespace detail {

// Square root that forgives tiny negative arguments at exact-arithmetic
// boundaries (σ = 2, σ_min = 4/σ_max).
inline double guarded_sqrt(double x) {
  if (x < 0.0 && x > -1e-14) return 0.0;
  return std::sqrt(x);
}

}  // namespace detail

/// Sharp L² rate μ(σ) for constant σ: σ/2 below 2, σ/2 - sqrt(σ²/4 - 1) above.
/// μ(2) = 1 is the spectral gap; the decay is then only (1+t)e^{-t}.
inline double sharp_mu(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sharp_mu: σ must be positive");
  if (sigma <= 2.0) return sigma / 2.0;
  return sigma / 2.0 - detail::guarded_sqrt(sigma * sigma / 4.0 - 1.0);
}

/// Twist θ(σ), entropy rate 2μ(σ) and L² prefactor C_σ for constant σ.
/// σ = 2 needs ε ∈ (0, 1): θ = 2(2-ε²)/(2+ε²), rate 2(1-ε), prefactor √2/ε.
inline RateReport constant_rate(double sigma, std::optional<double> eps = std::nullopt) {
  if (!(sigma > 0.0)) throw ValidationError("constant_rate: σ must be positive");
  RateReport r;
  if (std::abs(sigma - 2.0) <= 1e-12) {
    if (!eps || !(*eps > 0.0 && *eps < 1.0)) {
      throw ValidationError("constant_rate: σ = 2 requires ε in (0, 1)");
    }
    const double e2 = *eps * *eps;
    r.theta = 2.0 * (2.0 - e2) / (2.0 + e2);
    r.rate = 2.0 * (1.0 - *eps);
    r.prefactor = std::sqrt(2.0) / *eps;
    r.source = RateSource::ConstantDefectiveEps;
    r.epsilon = eps;
    return r;
  }
  r.source = RateSource::ConstantSharp;
  r.rate = 2.0 * sharp_mu(sigma);
  if (sigma < 2.0) {
    r.theta = sigma;
    r.prefactor = std::sqrt((2.0 + sigma) / (2.0 - sigma));
  } else {
    r.theta = 4.0 / sigma;
    r.prefactor = std::sqrt((sigma + 2.0) / (sigma - 2.0));
  }
  return r;
}

inline double theta_star(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || sigma_max < sigma_min) {
    throw ValidationError("theta_star: need 0 < σ_min <= σ_max");
  }
  return std::min(sigma_min, 4.0 / sigma_max);
}

/// First branch of α*(σ_min, σ_max), used when σ_min < 4/σ_max.
inline double alpha_star_branch_low(double sigma_min, double sigma_max) {
  const double root = detail::guarded_sqrt(4.0 - sigma_min * sigma_min);
  return sigma_min * (4.0 + 2.0 * root - sigma_min * sigma_max) / (4.0 + 2.0 * root - sigma_min * sigma_min);
}

/// Second branch, σ_max - sqrt(σ_max² - 4), used when σ_min >= 4/σ_max.
inline double alpha_star_branch_high(double sigma_max) {
  return sigma_max - detail::guarded_sqrt(sigma_max * sigma_max - 4.0);
}

inline double alpha_star(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
    throw ValidationError("alpha_star: need 0 < σ_min < σ_max");
  }
  if (sigma_min < 4.0 / sigma_max) return alpha_star_branch_low(sigma_min, sigma_max);
  return alpha_star_branch_high(sigma_max);
}

struct GammaBounds {
  double gamma_min;
  double gamma_max;
};

/// Largest α keeping the parabola θ²(y-α)² - 4(θ-α)(2y-θ-α) non-positive at
/// y = σ_min (gamma_min) and at y = σ_max (gamma_max).
inline GammaBounds gamma_bounds(double theta, double sigma_min, double sigma_max) {
  if (!(theta > 0.0 && theta < 2.0)) throw ValidationError("gamma_bounds: θ must lie in (0, 2)");
  const double w = 4.0 - theta * theta;
  const double r = 2.0 * std::sqrt(w);
  return {theta * (r - (4.0 - sigma_min * theta)) / (r - w),
          theta * (r + (4.0 - sigma_max * theta)) / (r + w)};
}

/// Perturbative rate bundle (θ*, α*) for a non-constant profile, with the L²
/// prefactor sqrt((2+θ*)/(2-θ*)).
inline RateReport perturbative_rate(double sigma_min, double sigma_max) {
  RateReport r;
  const double th = theta_star(sigma_min, sigma_max);
  r.theta = th;
  r.rate = alpha_star(sigma_min, sigma_max);
  r.prefactor = std::sqrt((2.0 + th) / (2.0 - th));
  r.source = RateSource::PerturbativeThm;
  return r;
}

// Slack for the non-strict inequalities, relative to the size of their terms.
inline constexpr double kConditionRelTol = 1e-12;

struct ConditionFailure {
  std::string condition;  // which inequality failed
  double excess;          // lhs - rhs, > 0 when violated
};

struct ConditionVerdict {
  std::vector<ConditionFailure> failures;

  bool ok() const { return failures.empty(); }
  explicit operator bool() const { return ok(); }

  std::string summary() const {
    if (ok()) return "all conditions hold";
    std::ostringstream os;
    os << std::setprecision(6);
    for (std::size_t i = 0; i < failures.size(); ++i) {
      if (i) os << "; ";
      os << failures[i].condition << " violated by " << failures[i].excess;
    }
    return os.str();
  }
};

/// Conditions for E_θ to decay at rate α along the 2-velocity flow:
///   (I)  α < θ, θ + α < 2σ_min
///   (II) θ²(σ-α)² - 4(θ-α)(2σ-θ-α) <= 0 for every attained σ.
inline ConditionVerdict check_conditions_2v(double theta, double alpha, const RelaxationProfile& sigma) {
  ConditionVerdict v;
  if (!(theta > 0.0 && theta < 2.0)) v.failures.push_back({"range 0<theta<2", std::abs(theta - 1.0) - 1.0});
  if (!(alpha > 0.0 && alpha < 2.0)) v.failures.push_back({"range 0<alpha<2", std::abs(alpha - 1.0) - 1.0});
  if (!(alpha < theta)) v.failures.push_back({"I: alpha<theta", alpha - theta});
  if (!(theta + alpha < 2.0 * sigma.sigma_min())) {
    v.failures.push_back({"I: theta+alpha<2sigma_min", theta + alpha - 2.0 * sigma.sigma_min()});
  }
  // α = γ_max(θ) makes the parabola vanish exactly at σ_max; allow roundoff.
  double worst = -std::numeric_limits<double>::infinity();
  double scale = 1.0;
  for (const double s : sigma.attained_values()) {
    const double a = theta * theta * (s - alpha) * (s - alpha);
    const double b = 4.0 * (theta - alpha) * (2.0 * s - theta - alpha);
    worst = std::max(worst, a - b);
    scale = std::max({scale, std::abs(a), std::abs(b)});
  }
  if (worst > kConditionRelTol * scale) v.failures.push_back({"II: sup parabola<=0", worst});
  return v;
}

/// Explicit 3-velocity pair: α = min(σ_min/2, 3σ_min/(9σ_max²+1)), θ = √6 α.
inline RateReport rate_3v(double sigma_min, double sigma_max) {
  if (!(sigma_min > 0.0) || sigma_max < sigma_min) throw ValidationError("rate_3v: need 0 < σ_min <= σ_max");
  RateReport r;
  const double a = std::min(sigma_min / 2.0, 3.0 * sigma_min / (9.0 * sigma_max * sigma_max + 1.0));
  r.rate = a;
  r.theta = std::sqrt(6.0) * a;
  r.source = RateSource::ThreeVelocityCor;
  return r;
}

/// Conditions for the 3-velocity functional:
///   (I)  √(2/3)θ + α < 2σ_min, α <= √(2/3)θ
///   (II) sup θ²(σ-α)²/(8σ - 4√(2/3)θ - 4α) + sup θ²/(12(2σ-α)) <= √(2/3)θ - α
/// Sups are taken over the attained values of σ (extremes, pieces, samples).
inline ConditionVerdict check_conditions_3v(double theta, double alpha, const RelaxationProfile& sigma) {
  ConditionVerdict v;
  const double c = std::sqrt(2.0 / 3.0);
  if (!(theta > 0.0)) v.failures.push_back({"range theta>0", -theta});
  if (!(alpha > 0.0)) v.failures.push_back({"range alpha>0", -alpha});
  if (!(c * theta + alpha < 2.0 * sigma.sigma_min())) {
    v.failures.push_back({"I: sqrt(2/3)theta+alpha<2sigma_min", c * theta + alpha - 2.0 * sigma.sigma_min()});
  }
  if (!(alpha <= c * theta)) v.failures.push_back({"I: alpha<=sqrt(2/3)theta", alpha - c * theta});
  if (!v.ok()) return v;  // denominators below are only positive under (I)
  double sup1 = 0.0;
  double sup2 = 0.0;
  for (const double s : sigma.attained_values()) {
    sup1 = std::max(sup1, theta * theta * (s - alpha) * (s - alpha) / (8.0 * s - 4.0 * c * theta - 4.0 * alpha));
    sup2 = std::max(sup2, theta * theta / (12.0 * (2.0 * s - alpha)));
  }
  const double excess = sup1 + sup2 - (c * theta - alpha);
  if (excess > kConditionRelTol * std::max(1.0, c * theta)) v.failures.push_back({"II: sup ratios<=sqrt(2/3)theta-alpha", excess});
  return v;
}

/// θ used for diagnostics when the caller does not pick one: θ(σ) for constant
/// σ (ε-variant at σ = 2), θ* otherwise.
inline double default_theta(const RelaxationProfile& sigma, double eps_at_two = 0.1) {
  if (sigma.is_constant()) return *constant_rate(sigma.sigma_min(), eps_at_two).theta;
  return theta_star(sigma.sigma_min(), sigma.sigma_max());
}

inline void write_rate_csv_header(std::ostream& os) { os << "source,theta,rate,prefactor\n"; }

inline void write_rate_csv_row(std::ostream& os, const RateReport& r) {
  auto opt = [&os](const std::optional<double>& x) {
    if (x) os << *x;
  };
  os << std::setprecision(12) << to_string(r.source) << ',';
  opt(r.theta);
  os << ',' << r.rate << ',';
  opt(r.prefactor);
  os << '\n';
}

inline void write_rate_table(std::ostream& os, const std::vector<RateReport>& rows) {
  os << std::left << std::setw(22) << "source" << std::setw(14) << "theta" << std::setw(14) << "rate"
     << "prefactor\n";
  for (const auto& r : rows) {
    auto cell = [](const std::optional<double>& x) {
      std::ostringstream c;
      c << std::setprecision(8);
      if (x) c << *x; else c << "-";
      return c.str();
    };
    std::ostringstream rate;
    rate << std::setprecision(8) << r.rate;
    os << std::setw(22) << to_string(r.source) << std::setw(14) << cell(r.theta) << std::setw(14) << rate.str()
       << cell(r.prefactor) << '\n';
  }
}

}  // namespace gtlab
