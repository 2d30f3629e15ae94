#pragma once

// Fourier-mode analysis of the constant-σ system: per-mode matrices C_k, their
// eigenvalues, the twist matrices P of the three eigenvalue cases, and the
// best μ with C_k* P + P C_k >= 2μ P.

#include <cmath>
#include <complex>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "gtlab/errors.hpp"
#include "gtlab/rates.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

using Matrix2c = Eigen::Matrix2cd;

inline constexpr double kDefectiveTol = 1e-12;
inline constexpr double kNearDefectiveTol = 1e-6;

struct ModalMatrix {
  Matrix2c entries;
  int k = 0;
  double sigma = 0.0;
};

enum class TwistCase { CaseI, CaseII, CaseIII, Suff, SuffEps };

inline const char* to_string(TwistCase c) {
  switch (c) {
    case TwistCase::CaseI: return "CaseI";
    case TwistCase::CaseII: return "CaseII";
    case TwistCase::CaseIII: return "CaseIII";
    case TwistCase::Suff: return "Suff";
    case TwistCase::SuffEps: return "SuffEps";
  }
  return "?";
}

struct TwistMatrix {
  Matrix2c entries;
  TwistCase tag = TwistCase::CaseIII;
  std::optional<double> epsilon;

  std::string label() const {
    if (!epsilon) return to_string(tag);
    std::ostringstream os;
    os << to_string(tag) << '(' << *epsilon << ')';
    return os.str();
  }
};

/// C_k = [[0, ik], [ik, σ]], so that (û, v̂)' = -C_k (û, v̂).
inline ModalMatrix c_matrix(int k, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("c_matrix: σ must be positive");
  ModalMatrix m;
  const Complex ik(0.0, static_cast<double>(k));
  m.entries << 0.0, ik, ik, sigma;
  m.k = k;
  m.sigma = sigma;
  return m;
}

struct ModalEigenvalues {
  Complex lambda_minus;  // smaller real part (then smaller imaginary part)
  Complex lambda_plus;
  bool defective = false;
  bool near_defective = false;
};

/// λ± = σ/2 ± sqrt(σ²/4 - k²).
inline ModalEigenvalues eigenvalues(int k, double sigma) {
  const double kk = static_cast<double>(k);
  const double disc = sigma * sigma / 4.0 - kk * kk;
  ModalEigenvalues e;
  const double gap = std::abs(sigma / 2.0 - std::abs(kk));
  e.defective = k != 0 && gap <= kDefectiveTol;
  e.near_defective = k != 0 && !e.defective && gap <= kNearDefectiveTol;
  if (e.defective) {
    e.lambda_minus = e.lambda_plus = sigma / 2.0;
  } else if (disc >= 0.0) {
    const double r = std::sqrt(disc);
    e.lambda_minus = sigma / 2.0 - r;
    e.lambda_plus = sigma / 2.0 + r;
  } else {
    const double r = std::sqrt(-disc);
    e.lambda_minus = Complex(sigma / 2.0, -r);
    e.lambda_plus = Complex(sigma / 2.0, r);
  }
  return e;
}

namespace detail {

inline Matrix2c unit_twist(Complex upper) {
  Matrix2c p;
  p << 1.0, upper, std::conj(upper), 1.0;
  return p;
}

inline void require_nonzero_mode(int k, const char* who) {
  if (k == 0) {
    throw ValidationError(std::string(who) + ": k = 0 has no twist; the zero mode is treated separately");
  }
}

inline void require_eps(std::optional<double> eps, const char* who) {
  if (!eps || !(*eps > 0.0 && *eps < 1.0)) throw ValidationError(std::string(who) + ": ε in (0, 1) required");
}

}  // namespace detail

/// Case I (σ > 2|k|): off-diagonal -2ki/σ.
inline TwistMatrix p_case_i(int k, double sigma) {
  detail::require_nonzero_mode(k, "p_case_i");
  return {detail::unit_twist(Complex(0.0, -2.0 * k / sigma)), TwistCase::CaseI, std::nullopt};
}

/// Case II (σ = 2, k = ±1): off-diagonal ∓i(2-ε²)/(2+ε²).
inline TwistMatrix p_case_ii(int k, std::optional<double> eps) {
  if (k != 1 && k != -1) throw ValidationError("p_case_ii: only defined for k = ±1");
  detail::require_eps(eps, "p_case_ii");
  const double e2 = *eps * *eps;
  return {detail::unit_twist(Complex(0.0, -k * (2.0 - e2) / (2.0 + e2))), TwistCase::CaseII, eps};
}

/// Case III (σ < 2|k|): off-diagonal -iσ/(2k).
inline TwistMatrix p_case_iii(int k, double sigma) {
  detail::require_nonzero_mode(k, "p_case_iii");
  return {detail::unit_twist(Complex(0.0, -sigma / (2.0 * k))), TwistCase::CaseIII, std::nullopt};
}

/// Case III with σ replaced by 4/σ: off-diagonal -2i/(kσ).
inline TwistMatrix p_suff(int k, double sigma) {
  detail::require_nonzero_mode(k, "p_suff");
  return {detail::unit_twist(Complex(0.0, -2.0 / (k * sigma))), TwistCase::Suff, std::nullopt};
}

/// σ = 2 variant: off-diagonal -i(2-ε²)/(k(2+ε²)).
inline TwistMatrix p_suff_eps(int k, std::optional<double> eps) {
  detail::require_nonzero_mode(k, "p_suff_eps");
  detail::require_eps(eps, "p_suff_eps");
  const double e2 = *eps * *eps;
  return {detail::unit_twist(Complex(0.0, -(2.0 - e2) / (k * (2.0 + e2)))), TwistCase::SuffEps, eps};
}

/// Twist used for mode k at constant σ: Case III below 2, Suff above, SuffEps at 2.
inline TwistMatrix p_matrix(int k, double sigma, std::optional<double> eps = std::nullopt) {
  detail::require_nonzero_mode(k, "p_matrix");
  if (!(sigma > 0.0)) throw ValidationError("p_matrix: σ must be positive");
  if (std::abs(sigma - 2.0) <= kDefectiveTol) return p_suff_eps(k, eps);
  if (sigma < 2.0) return p_case_iii(k, sigma);
  return p_suff(k, sigma);
}

/// Hermitian square root of a 2×2 positive definite matrix:
/// (P + sqrt(det P) I) / sqrt(tr P + 2 sqrt(det P)).
inline Matrix2c hermitian_sqrt(const Matrix2c& p) {
  const double det = p.determinant().real();
  const double tr = p.trace().real();
  if (!(det > 0.0) || !(tr > 0.0)) throw NumericalError("hermitian_sqrt: matrix is not positive definite");
  const double sd = std::sqrt(det);
  return (p + sd * Matrix2c::Identity()) / std::sqrt(tr + 2.0 * sd);
}

/// Largest μ with C*P + PC - 2μP >= 0, i.e. the smallest eigenvalue of
/// S⁻¹(C*P + PC)S⁻¹ / 2 with S = sqrt(P).
inline double lyapunov_gap(const ModalMatrix& c, const TwistMatrix& p) {
  const Matrix2c s_inv = hermitian_sqrt(p.entries).inverse();
  Matrix2c a = s_inv * (c.entries.adjoint() * p.entries + p.entries * c.entries) * s_inv;
  a = 0.5 * (a + a.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0) / 2.0;
}

inline double lyapunov_gap(int k, double sigma, std::optional<double> eps = std::nullopt) {
  detail::require_nonzero_mode(k, "lyapunov_gap");
  return lyapunov_gap(c_matrix(k, sigma), p_matrix(k, sigma, eps));
}

struct SpectralGap {
  double mu;
  bool defective;
};

/// min over k != 0 of Re λ±(k, σ); the k = 1 mode is the binding one.
inline SpectralGap spectral_gap(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("spectral_gap: σ must be positive");
  const double half = sigma / 2.0;
  const bool defective = half >= 1.0 - kDefectiveTol && std::abs(half - std::round(half)) <= kDefectiveTol;
  const double mu = sigma <= 2.0 ? half : half - detail::guarded_sqrt(half * half - 1.0);
  return {mu, defective};
}

inline void write_modal_report(std::ostream& os, double sigma, int k_max, std::optional<double> eps = std::nullopt) {
  if (k_max < 1) throw ValidationError("modal report: K must be >= 1");
  os << "k,re_lambda_minus,im_lambda_minus,re_lambda_plus,im_lambda_plus,lyapunov_gap,case_tag\n";
  os << std::setprecision(15);
  for (int k = 1; k <= k_max; ++k) {
    const auto e = eigenvalues(k, sigma);
    const auto p = p_matrix(k, sigma, eps);
    os << k << ',' << e.lambda_minus.real() << ',' << e.lambda_minus.imag() << ',' << e.lambda_plus.real() << ','
       << e.lambda_plus.imag() << ',' << lyapunov_gap(c_matrix(k, sigma), p) << ',' << p.label() << '\n';
  }
}

}  // namespace gtlab
