#pragma once

// Spectral gap of the telegrapher operator for a two-piece rescaled
// relaxation σ̃ ∈ {σ1 on (0, 1/2], σ2 on (1/2, 1]}, found from the roots of
// det M(γ), and the resulting rate α_BS = (1/π) min(‖σ̃‖_L¹, gap).

#include <algorithm>
#include <cmath>
#include <complex>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtlab/errors.hpp"
#include "gtlab/rates.hpp"
#include "gtlab/relaxation.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

struct TelegrapherProblem {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double re_max = 0.0;
  double im_max = 0.0;

  double l1_norm() const { return 0.5 * (sigma1 + sigma2); }
};

inline TelegrapherProblem make_telegrapher_problem(double sigma1, double sigma2, std::optional<double> re_max = {},
                                                   std::optional<double> im_max = {}) {
  if (!(sigma1 > 0.0) || !(sigma2 > 0.0)) throw ValidationError("telegrapher: σ̃ pieces must be positive");
  TelegrapherProblem p{sigma1, sigma2, 0.0, 0.0};
  p.re_max = re_max ? *re_max : 2.0 * std::min(sigma1, sigma2);
  p.im_max = im_max ? *im_max : 2.0 * std::max(sigma1, sigma2) + 4.0 * std::numbers::pi;
  if (!(p.re_max > 0.0) || !(p.im_max >= 0.0)) throw ValidationError("telegrapher: search strip must be non-empty");
  return p;
}

/// σ̃(ξ) = π σ(2πξ): pieces scale by π.
inline TelegrapherProblem rescale_sigma(const RelaxationProfile& sigma) {
  const auto [s1, s2] = sigma.two_piece_values();
  return make_telegrapher_problem(std::numbers::pi * s1, std::numbers::pi * s2);
}

/// τ(γ) = sqrt(γ(2σ - γ)), principal branch.
inline Complex tau_of(Complex gamma, double sigma) { return std::sqrt(gamma * (2.0 * sigma - gamma)); }

/// Closed-form determinant for given τ1, τ2 (any branch):
/// -sin(τ1/2) sin(τ2/2)(1 + r²) + 2r(cos(τ1/2) cos(τ2/2) - 1), r = τ2/τ1.
inline Complex det_from_tau(Complex tau1, Complex tau2) {
  const Complex r = tau2 / tau1;
  return -std::sin(tau1 / 2.0) * std::sin(tau2 / 2.0) * (1.0 + r * r) +
         2.0 * r * (std::cos(tau1 / 2.0) * std::cos(tau2 / 2.0) - 1.0);
}

inline Complex det_M_gamma(Complex gamma, const TelegrapherProblem& p) {
  if (std::abs(gamma) == 0.0) throw ValidationError("det_M_gamma: γ = 0 is excluded");
  const Complex t1 = tau_of(gamma, p.sigma1);
  if (std::abs(t1) < 1e-12) {
    throw ValidationError("det_M_gamma: τ1(γ) = 0 (γ = 2σ1), the closed form divides by τ1");
  }
  return det_from_tau(t1, tau_of(gamma, p.sigma2));
}

/// The 4×4 matching-condition matrix whose determinant is det_M_gamma.
inline Eigen::Matrix4cd m_gamma_matrix(Complex gamma, const TelegrapherProblem& p) {
  const Complex t1 = tau_of(gamma, p.sigma1);
  const Complex t2 = tau_of(gamma, p.sigma2);
  const Complex r = t2 / t1;
  Eigen::Matrix4cd m;
  m << 1.0, 0.0, -std::cos(t2), -std::sin(t2),
      0.0, 1.0, r * std::sin(t2), -r * std::cos(t2),
      std::cos(t1 / 2.0), std::sin(t1 / 2.0), -std::cos(t2 / 2.0), -std::sin(t2 / 2.0),
      std::sin(t1 / 2.0), -std::cos(t1 / 2.0), -r * std::sin(t2 / 2.0), r * std::cos(t2 / 2.0);
  return m;
}

namespace detail {

// sin(√z/2)/√z and cos(√z/2) are entire in z; series near z = 0.
struct HalfAngle {
  Complex sc;   // sin(√z/2)/√z
  Complex c;    // cos(√z/2)
  Complex dsc;  // d sc / dz
  Complex dc;   // d c / dz
};

inline HalfAngle half_angle(Complex z) {
  HalfAngle h;
  if (std::abs(z) < 1e-6) {
    h.sc = 0.5 - z / 48.0 + z * z / 3840.0;
    h.c = 1.0 - z / 8.0 + z * z / 384.0;
    h.dsc = -1.0 / 48.0 + z / 1920.0;
  } else {
    const Complex w = std::sqrt(z);
    h.sc = std::sin(w / 2.0) / w;
    h.c = std::cos(w / 2.0);
    h.dsc = (h.c - 2.0 * h.sc) / (4.0 * z);
  }
  h.dc = -h.sc / 4.0;
  return h;
}

}  // namespace detail

/// det M(γ)·τ1/τ2 = -sc1·sc2·(τ1² + τ2²) + 2(c1·c2 - 1), written through the
/// entire functions of τ_j² above. It is branch-free, real on the real axis,
/// and shares the roots of det M(γ) away from τ2 = 0 (where det M has a
/// spurious zero from r = 0). Returns the value and its γ-derivative.
inline std::pair<Complex, Complex> telegrapher_characteristic(Complex gamma, const TelegrapherProblem& p) {
  const Complex z1 = gamma * (2.0 * p.sigma1 - gamma);
  const Complex z2 = gamma * (2.0 * p.sigma2 - gamma);
  const Complex dz1 = 2.0 * p.sigma1 - 2.0 * gamma;
  const Complex dz2 = 2.0 * p.sigma2 - 2.0 * gamma;
  const auto a = detail::half_angle(z1);
  const auto b = detail::half_angle(z2);
  const Complex f = -a.sc * b.sc * (z1 + z2) + 2.0 * (a.c * b.c - 1.0);
  const Complex df = -(a.dsc * dz1 * b.sc + a.sc * b.dsc * dz2) * (z1 + z2) - a.sc * b.sc * (dz1 + dz2) +
                     2.0 * (a.dc * dz1 * b.c + a.c * b.dc * dz2);
  return {f, df};
}

struct GapResult {
  double gap = 0.0;
  Complex eigenvalue;
  std::vector<Complex> all_roots;  // sorted by (Re, Im)
  bool on_boundary = false;        // minimizer within 1e-6 of the strip's right edge
};

inline constexpr double kTelegrapherDedupeTol = 1e-6;

namespace detail {

inline std::optional<Complex> newton_root(Complex g, const TelegrapherProblem& p) {
  for (int it = 0; it < 60; ++it) {
    const auto [f, df] = telegrapher_characteristic(g, p);
    if (f == 0.0) break;
    if (std::abs(df) == 0.0 || !std::isfinite(std::abs(df))) return std::nullopt;
    const Complex step = f / df;
    g -= step;
    if (!std::isfinite(std::abs(g)) || std::abs(g) > 1e6) return std::nullopt;
    if (std::abs(step) < 1e-12 * (1.0 + std::abs(g))) break;
  }
  // Newton only converges linearly onto a double root; polish with Newton on
  // f/f', whose roots are all simple.
  for (int it = 0; it < 8; ++it) {
    const auto [f, df] = telegrapher_characteristic(g, p);
    if (f == 0.0 || df == 0.0) break;
    const double h = 1e-7 * (1.0 + std::abs(g));
    const Complex d2f =
        (telegrapher_characteristic(g + h, p).second - telegrapher_characteristic(g - h, p).second) / (2.0 * h);
    const Complex denom = 1.0 - f * d2f / (df * df);
    if (denom == 0.0) break;
    const Complex step = (f / df) / denom;
    if (!std::isfinite(std::abs(step)) || std::abs(step) > 1e-3 * (1.0 + std::abs(g))) break;
    g -= step;
    if (std::abs(step) < 1e-14 * (1.0 + std::abs(g))) break;
  }
  if (std::abs(telegrapher_characteristic(g, p).first) > 1e-9) return std::nullopt;
  return g;
}

inline bool in_strip(Complex g, const TelegrapherProblem& p) {
  return g.real() > 1e-9 && g.real() < p.re_max - 1e-9 && std::abs(g.imag()) <= p.im_max;
}

}  // namespace detail

/// All roots in Re γ ∈ (0, re_max), |Im γ| <= im_max: a real-axis scan with
/// bisection plus Newton from a seeds×seeds grid over the upper half strip;
/// non-real roots are completed with their conjugates.
inline GapResult telegrapher_gap(const TelegrapherProblem& p, int seeds = 200) {
  if (seeds < 2) throw ValidationError("telegrapher_gap: need at least 2 seeds per axis");
  std::vector<Complex> found;
  const int scan = 4000;
  const double h = p.re_max / scan;
  double prev_x = h;
  double prev_f = telegrapher_characteristic(prev_x, p).first.real();
  for (int i = 2; i < scan; ++i) {
    const double x = h * i;
    const double f = telegrapher_characteristic(x, p).first.real();
    if ((f < 0.0) != (prev_f < 0.0)) {
      double lo = prev_x;
      double hi = x;
      double flo = prev_f;
      while (hi - lo > 1e-14 * (1.0 + hi)) {
        const double mid = 0.5 * (lo + hi);
        const double fm = telegrapher_characteristic(mid, p).first.real();
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      if (auto r = detail::newton_root(0.5 * (lo + hi), p)) found.push_back(*r);
    }
    prev_x = x;
    prev_f = f;
  }
  for (int i = 0; i < seeds; ++i) {
    for (int j = 0; j < seeds; ++j) {
      const Complex seed(p.re_max * (i + 0.5) / seeds, p.im_max * j / (seeds - 1));
      if (auto r = detail::newton_root(seed, p)) found.push_back(*r);
    }
  }
  std::vector<Complex> roots;
  for (Complex g : found) {
    if (std::abs(g.imag()) < 1e-10) g = Complex(g.real(), 0.0);
    if (!detail::in_strip(g, p)) continue;
    roots.push_back(g);
    if (g.imag() != 0.0) roots.push_back(std::conj(g));
  }
  auto lex = [](Complex a, Complex b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); };
  std::sort(roots.begin(), roots.end(), lex);
  std::vector<Complex> unique;
  for (const Complex g : roots) {
    const bool dup = std::any_of(unique.begin(), unique.end(),
                                 [&](Complex u) { return std::abs(u - g) < kTelegrapherDedupeTol; });
    if (!dup) unique.push_back(g);
  }
  if (unique.empty()) throw NumericalError("telegrapher_gap: no roots in the strip; enlarge re_max / im_max");
  GapResult r;
  r.all_roots = unique;
  // Minimal real part; ties within 1e-9 (e.g. constant σ̃, where every pair
  // has Re γ = σ̃) go to the smallest |Im γ|, then the upper half plane.
  double re_min = unique.front().real();
  for (const Complex g : unique) re_min = std::min(re_min, g.real());
  r.eigenvalue = unique.front();
  bool first = true;
  for (const Complex g : unique) {
    if (g.real() > re_min + 1e-9) continue;
    const double ai = std::abs(g.imag());
    const double bi = std::abs(r.eigenvalue.imag());
    if (first || ai < bi - 1e-9 || (std::abs(ai - bi) <= 1e-9 && g.imag() > r.eigenvalue.imag())) r.eigenvalue = g;
    first = false;
  }
  r.gap = r.eigenvalue.real();
  r.on_boundary = p.re_max - r.gap < 1e-6;
  return r;
}

struct BsRate {
  TelegrapherProblem problem;
  GapResult gap;
  RateReport report;
};

/// α_BS = (1/π) min(‖σ̃‖_L¹, D̃(0)).
inline BsRate bs_rate_details(const RelaxationProfile& sigma) {
  BsRate b;
  b.problem = rescale_sigma(sigma);
  b.gap = telegrapher_gap(b.problem);
  b.report.rate = std::min(b.problem.l1_norm(), b.gap.gap) / std::numbers::pi;
  b.report.source = RateSource::BernardSalvarani;
  return b;
}

inline RateReport bs_rate(const RelaxationProfile& sigma) { return bs_rate_details(sigma).report; }

inline void write_telegrapher_report(std::ostream& os, const BsRate& b) {
  os << "re_gamma,im_gamma,abs_det\n" << std::setprecision(12);
  for (const Complex g : b.gap.all_roots) {
    double ad = std::numeric_limits<double>::quiet_NaN();
    try {
      ad = std::abs(det_M_gamma(g, b.problem));
    } catch (const ValidationError&) {
    }
    os << g.real() << ',' << g.imag() << ',' << ad << '\n';
  }
  os << "# gap=" << b.gap.gap << " eigenvalue=" << b.gap.eigenvalue.real() << (b.gap.eigenvalue.imag() < 0 ? "" : "+")
     << b.gap.eigenvalue.imag() << "i l1_norm=" << b.problem.l1_norm() << " alpha_BS=" << b.report.rate
     << (b.gap.on_boundary ? " minimizer_on_strip_boundary" : "") << '\n';
}

}  // namespace gtlab
