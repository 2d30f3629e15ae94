#pragma once

// Weighted Poincaré constants for two-piece weights ω ∈ {ω1 on (0, π],
// ω2 on (π, 2π]}: c_min is the first λ > 0 with det M(λ) = 0 and C_ω² = 1/c_min.
// Also the fixed-point improvement of the perturbative rate driven by C_ω².

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtlab/errors.hpp"
#include "gtlab/relaxation.hpp"

namespace gtlab {

struct TwoPieceWeight {
  double w1;  // on (0, π]
  double w2;  // on (π, 2π]

  void validate() const {
    if (!(w1 > 0.0) || !(w2 > 0.0) || !std::isfinite(w1) || !std::isfinite(w2)) {
      throw ValidationError("weight: both pieces must be positive and finite");
    }
  }
  double sup() const { return std::max(w1, w2); }
};

struct PoincareResult {
  double c_min = 0.0;
  double c_omega_sq = 0.0;
  std::vector<double> roots_scanned;  // increasing
  bool close_root = false;            // another root within 1e-3 of c_min
};

/// The 5×5 matrix M(λ) of the boundary and constraint conditions, as printed.
inline Eigen::Matrix<double, 5, 5> m_lambda(double lambda, const TwoPieceWeight& w) {
  const double pi = std::numbers::pi;
  const double a = std::sqrt(lambda * w.w1);
  const double b = std::sqrt(lambda * w.w2);
  const double s1 = std::sqrt(w.w1);
  const double s2 = std::sqrt(w.w2);
  const double t = (w.w2 - w.w1) / (lambda * w.w1 * w.w2);
  const double tau5 = pi * (w.w1 + w.w2) / (std::sqrt(lambda) * w.w1 * w.w2);
  Eigen::Matrix<double, 5, 5> m;
  m << 0.0, 1.0, -std::sin(2 * pi * b), -std::cos(2 * pi * b), t,
      std::sin(pi * a), std::cos(pi * a), -std::sin(pi * b), -std::cos(pi * b), t,
      s1, 0.0, -s2 * std::cos(2 * pi * b), s2 * std::sin(2 * pi * b), 0.0,
      s1 * std::cos(pi * a), -s1 * std::sin(pi * a), -s2 * std::cos(pi * b), s2 * std::sin(pi * b), 0.0,
      (1.0 - std::cos(pi * a)) / s1, std::sin(pi * a) / s1, (std::cos(pi * b) - std::cos(2 * pi * b)) / s2,
      (std::sin(2 * pi * b) - std::sin(pi * b)) / s2, tau5;
  return m;
}

inline double det_M_lambda(double lambda, const TwoPieceWeight& w) {
  if (!(lambda > 0.0)) throw ValidationError("det_M_lambda: λ must be positive");
  w.validate();
  return Eigen::PartialPivLU<Eigen::Matrix<double, 5, 5>>(m_lambda(lambda, w)).determinant();
}

namespace detail {

inline double bisect_root(double lo, double hi, double flo, const TwoPieceWeight& w) {
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double fm = det_M_lambda(mid, w);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Golden-section minimum of |det| on [lo, hi].
inline double golden_min(double lo, double hi, const TwoPieceWeight& w) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = std::abs(det_M_lambda(c, w));
  double fd = std::abs(det_M_lambda(d, w));
  while (b - a > 1e-12) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = std::abs(det_M_lambda(c, w));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = std::abs(det_M_lambda(d, w));
    }
  }
  return 0.5 * (a + b);
}

}  // namespace detail

inline constexpr double kDoubleRootRelTol = 1e-7;

/// Scans λ ∈ (0, λ_max] and refines every root. Sign changes are bisected to
/// 1e-12. Touching zeros (double roots, e.g. the uniform weight at λ = k²)
/// show no sign change; they are found as local minima of |det| that drop
/// below kDoubleRootRelTol of the neighbouring scan values' magnitude.
inline PoincareResult weighted_poincare(const TwoPieceWeight& w, std::optional<double> lambda_max = std::nullopt,
                                        double scan_step = 1e-3) {
  w.validate();
  if (!(scan_step > 0.0)) throw ValidationError("weighted_poincare: scan step must be positive");
  const double lmax = lambda_max ? *lambda_max : 4.0 / std::min(w.w1, w.w2);
  if (!(lmax > scan_step)) throw ValidationError("weighted_poincare: λ_max must exceed the scan step");
  const auto steps = static_cast<std::size_t>(std::ceil(lmax / scan_step));
  std::vector<double> lam(steps);
  std::vector<double> det(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    lam[i] = scan_step * static_cast<double>(i + 1);
    det[i] = det_M_lambda(lam[i], w);
  }
  PoincareResult r;
  for (std::size_t i = 0; i + 1 < steps; ++i) {
    if (det[i] == 0.0) {
      r.roots_scanned.push_back(lam[i]);
    } else if ((det[i] < 0.0) != (det[i + 1] < 0.0) && det[i + 1] != 0.0) {
      r.roots_scanned.push_back(detail::bisect_root(lam[i], lam[i + 1], det[i], w));
    } else if (i > 0 && std::abs(det[i]) < std::abs(det[i - 1]) && std::abs(det[i]) < std::abs(det[i + 1])) {
      const double x = detail::golden_min(lam[i - 1], lam[i + 1], w);
      const double scale = std::max(std::abs(det[i - 1]), std::abs(det[i + 1]));
      if (std::abs(det_M_lambda(x, w)) < kDoubleRootRelTol * scale) r.roots_scanned.push_back(x);
    }
  }
  std::sort(r.roots_scanned.begin(), r.roots_scanned.end());
  r.roots_scanned.erase(std::unique(r.roots_scanned.begin(), r.roots_scanned.end(),
                                    [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                        r.roots_scanned.end());
  if (r.roots_scanned.empty()) {
    throw NumericalError("weighted_poincare: no root of det M(λ) in (0, " + std::to_string(lmax) +
                         "]; increase λ_max");
  }
  r.c_min = r.roots_scanned.front();
  r.c_omega_sq = 1.0 / r.c_min;
  r.close_root = r.roots_scanned.size() > 1 && r.roots_scanned[1] - r.c_min < 1e-3;
  return r;
}

/// ω(x) = (σ(x) - α)² / (2σ(x) - θ - α) on a two-piece σ with breakpoint π.
inline TwoPieceWeight weight_from_sigma(const RelaxationProfile& sigma, double theta, double alpha) {
  const auto [s1, s2] = sigma.two_piece_values();
  auto piece = [&](double s) {
    const double den = 2.0 * s - theta - alpha;
    if (!(den > 0.0)) {
      throw ValidationError("weight_from_sigma: 2σ - θ - α must be positive (σ = " + std::to_string(s) + ")");
    }
    return (s - alpha) * (s - alpha) / den;
  };
  return {piece(s1), piece(s2)};
}

struct ImprovedAlphaResult {
  double alpha_max = 0.0;
  std::vector<double> iterates;   // α_0, α_1, ... (all admissible)
  std::vector<double> c_omega_sq; // C²(ω_{α_n}) for each iterate
  bool converged = false;
  bool stopped_inadmissible = false;
};

/// Admissibility bound θ - θ² C²(ω_α)/4 (equals 1 - C²/4 at θ = 1).
inline double improved_bound(double theta, double c_sq) { return theta - theta * theta * c_sq / 4.0; }

/// Iterates α_n = θ - θ² C²(ω_{α_{n-1}})/4 from α0 until successive iterates
/// differ by less than tol. α_max is the last admissible iterate.
inline ImprovedAlphaResult improved_alpha(const RelaxationProfile& sigma, double theta, double alpha0,
                                          double tol = 1e-6, int max_iter = 100) {
  if (!(alpha0 > 0.0)) throw ValidationError("improved_alpha: α0 must be positive");
  if (!(tol > 0.0) || max_iter < 1) throw ValidationError("improved_alpha: need tol > 0 and max_iter >= 1");
  ImprovedAlphaResult r;
  double alpha = alpha0;
  for (int it = 0; it <= max_iter; ++it) {
    TwoPieceWeight w{};
    try {
      w = weight_from_sigma(sigma, theta, alpha);
    } catch (const ValidationError&) {
      if (it == 0) throw;
      r.stopped_inadmissible = true;
      break;
    }
    const double c_sq = weighted_poincare(w).c_omega_sq;
    const double bound = improved_bound(theta, c_sq);
    if (!(alpha > 0.0 && alpha <= bound + 1e-12)) {
      if (it == 0) {
        throw ValidationError("improved_alpha: α0 = " + std::to_string(alpha0) + " violates α <= θ - θ²C²/4 = " +
                              std::to_string(bound));
      }
      r.stopped_inadmissible = true;
      break;
    }
    r.iterates.push_back(alpha);
    r.c_omega_sq.push_back(c_sq);
    r.alpha_max = alpha;
    if (std::abs(bound - alpha) < tol) {
      r.converged = true;
      break;
    }
    alpha = bound;
  }
  return r;
}

inline void write_poincare_report(std::ostream& os, const TwoPieceWeight& w, const PoincareResult& p) {
  os << "w1,w2,c_min,C_omega_sq,close_root\n" << std::setprecision(12) << w.w1 << ',' << w.w2 << ',' << p.c_min
     << ',' << p.c_omega_sq << ',' << (p.close_root ? 1 : 0) << '\n';
}

inline void write_iterate_table(std::ostream& os, const ImprovedAlphaResult& r) {
  os << "n,alpha,C_omega_sq\n" << std::setprecision(12);
  for (std::size_t i = 0; i < r.iterates.size(); ++i) os << i << ',' << r.iterates[i] << ',' << r.c_omega_sq[i] << '\n';
}

}  // namespace gtlab
