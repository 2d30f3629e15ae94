#pragma once

// Periodic grid functions on [0, 2π) and the spectral calculus used by the
// rest of the library: averages, derivatives, the zero-mean anti-derivative,
// and the normalized L² inner product <f, g> = (1/2π) ∫ f conj(g) dx.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "gtlab/errors.hpp"

namespace gtlab {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace detail {

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

inline double conj_if_complex(double x) { return x; }
inline Complex conj_if_complex(const Complex& z) { return std::conj(z); }

inline double real_part(double x) { return x; }
inline double real_part(const Complex& z) { return z.real(); }

// Eigen::FFT caches plans per size and is not safe to share across threads.
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine = [] {
    Eigen::FFT<double> e;
    e.SetFlag(Eigen::FFT<double>::Unscaled);
    return e;
  }();
  return engine;
}

}  // namespace detail

/// Signed wavenumber of FFT-ordered index j on an n-point grid, in [-n/2, n/2 - 1].
inline int wavenumber(std::size_t j, std::size_t n) {
  const auto jj = static_cast<long>(j);
  const auto nn = static_cast<long>(n);
  return static_cast<int>(jj < nn / 2 ? jj : jj - nn);
}

/// Samples of a periodic function at x_j = 2πj/N, j = 0..N-1. The endpoint
/// x = 2π is not stored. N is even and at least 8.
template <typename T>
class BasicGridFunction {
 public:
  using value_type = T;

  BasicGridFunction() = default;

  explicit BasicGridFunction(std::vector<T> samples) : samples_(std::move(samples)) {
    validate_resolution(samples_.size());
  }

  template <typename F>
  static BasicGridFunction sample(std::size_t n, F&& f) {
    validate_resolution(n);
    std::vector<T> s(n);
    for (std::size_t j = 0; j < n; ++j) s[j] = static_cast<T>(f(node(n, j)));
    return BasicGridFunction(std::move(s));
  }

  static BasicGridFunction constant(std::size_t n, T value) {
    validate_resolution(n);
    return BasicGridFunction(std::vector<T>(n, value));
  }

  static double node(std::size_t n, std::size_t j) {
    return kTwoPi * static_cast<double>(j) / static_cast<double>(n);
  }

  static void validate_resolution(std::size_t n) {
    if (n < 8 || n % 2 != 0) {
      throw ValidationError("grid resolution must be an even integer >= 8, got " +
                            std::to_string(n));
    }
  }

  std::size_t size() const { return samples_.size(); }
  double spacing() const { return kTwoPi / static_cast<double>(size()); }
  double x(std::size_t j) const { return node(size(), j); }

  const T& operator[](std::size_t j) const { return samples_[j]; }
  T& operator[](std::size_t j) { return samples_[j]; }

  std::span<const T> values() const { return samples_; }
  const std::vector<T>& data() const { return samples_; }

  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  template <typename F>
  BasicGridFunction map(F&& f) const {
    std::vector<T> out(samples_.size());
    std::transform(samples_.begin(), samples_.end(), out.begin(), f);
    return BasicGridFunction(std::move(out));
  }

  BasicGridFunction& operator+=(const BasicGridFunction& o) {
    check_same(o);
    for (std::size_t j = 0; j < size(); ++j) samples_[j] += o.samples_[j];
    return *this;
  }
  BasicGridFunction& operator-=(const BasicGridFunction& o) {
    check_same(o);
    for (std::size_t j = 0; j < size(); ++j) samples_[j] -= o.samples_[j];
    return *this;
  }
  BasicGridFunction& operator*=(T c) {
    for (auto& s : samples_) s *= c;
    return *this;
  }
  BasicGridFunction& operator+=(T c) {
    for (auto& s : samples_) s += c;
    return *this;
  }

  friend BasicGridFunction operator+(BasicGridFunction a, const BasicGridFunction& b) { return a += b; }
  friend BasicGridFunction operator-(BasicGridFunction a, const BasicGridFunction& b) { return a -= b; }
  friend BasicGridFunction operator*(BasicGridFunction a, T c) { return a *= c; }
  friend BasicGridFunction operator*(T c, BasicGridFunction a) { return a *= c; }
  friend BasicGridFunction operator+(BasicGridFunction a, T c) { return a += c; }
  friend BasicGridFunction operator-(BasicGridFunction a, T c) { return a += -c; }
  friend BasicGridFunction operator-(BasicGridFunction a) { return a *= T(-1); }

  /// Pointwise product.
  friend BasicGridFunction hadamard(const BasicGridFunction& a, const BasicGridFunction& b) {
    a.check_same(b);
    std::vector<T> out(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) out[j] = a.samples_[j] * b.samples_[j];
    return BasicGridFunction(std::move(out));
  }

  void check_same(const BasicGridFunction& o) const {
    if (o.size() != size()) {
      throw ValidationError("incompatible grids: N=" + std::to_string(size()) + " vs N=" +
                            std::to_string(o.size()));
    }
  }

 private:
  std::vector<T> samples_;
};

using GridFunction = BasicGridFunction<double>;
using ComplexGridFunction = BasicGridFunction<Complex>;

/// Fourier coefficients ĥ(k) = (1/2π) ∫ h e^{-ikx} dx of a grid function,
/// stored in FFT order. Index by signed k in [-N/2, N/2 - 1] with operator().
class FourierCoeffs {
 public:
  FourierCoeffs() = default;
  explicit FourierCoeffs(std::vector<Complex> fft_ordered) : coeffs_(std::move(fft_ordered)) {
    GridFunction::validate_resolution(coeffs_.size());
  }

  std::size_t size() const { return coeffs_.size(); }
  int k_min() const { return -static_cast<int>(size() / 2); }
  int k_max() const { return static_cast<int>(size() / 2) - 1; }

  const Complex& operator()(int k) const { return coeffs_[index(k)]; }
  Complex& operator()(int k) { return coeffs_[index(k)]; }

  const std::vector<Complex>& fft_ordered() const { return coeffs_; }
  std::vector<Complex>& fft_ordered() { return coeffs_; }

 private:
  std::size_t index(int k) const {
    if (k < k_min() || k > k_max()) {
      throw ValidationError("wavenumber " + std::to_string(k) + " outside resolved band");
    }
    return k >= 0 ? static_cast<std::size_t>(k) : static_cast<std::size_t>(k + static_cast<int>(size()));
  }

  std::vector<Complex> coeffs_;
};

template <typename T>
FourierCoeffs fourier(const BasicGridFunction<T>& f) {
  std::vector<Complex> out;
  detail::fft_engine().fwd(out, f.data());
  const double scale = 1.0 / static_cast<double>(f.size());
  for (auto& c : out) c *= scale;
  return FourierCoeffs(std::move(out));
}

inline ComplexGridFunction synthesize(const FourierCoeffs& c) {
  std::vector<Complex> out;
  detail::fft_engine().inv(out, c.fft_ordered());
  return ComplexGridFunction(std::move(out));
}

/// Inverse transform keeping only the real part (for spectra of real data).
inline GridFunction synthesize_real(const FourierCoeffs& c) {
  const auto z = synthesize(c);
  std::vector<double> out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) out[j] = z[j].real();
  return GridFunction(std::move(out));
}

namespace detail {

template <typename T>
BasicGridFunction<T> back_to_grid(const FourierCoeffs& c) {
  if constexpr (is_complex_v<T>) {
    return synthesize(c);
  } else {
    return synthesize_real(c);
  }
}

}  // namespace detail

/// (1/2π) ∫ f dx; on a uniform periodic grid this is the sample mean.
template <typename T>
T average(const BasicGridFunction<T>& f) {
  T sum{};
  for (const auto& s : f) sum += s;
  return sum / static_cast<double>(f.size());
}

/// Spectral derivative: multiply ĥ(k) by ik, Nyquist mode zeroed.
template <typename T>
BasicGridFunction<T> derivative(const BasicGridFunction<T>& f) {
  auto c = fourier(f);
  auto& v = c.fft_ordered();
  const std::size_t n = v.size();
  for (std::size_t j = 0; j < n; ++j) {
    v[j] *= Complex(0.0, static_cast<double>(wavenumber(j, n)));
  }
  v[n / 2] = 0.0;
  return detail::back_to_grid<T>(c);
}

/// Anti-derivative normalized to zero average. Mean-zero input goes through
/// Fourier space (ĥ(k)/ik, k=0 and Nyquist zeroed). Otherwise the literal
/// definition is used: cumulative trapezoid from 0 minus its average.
template <typename T>
BasicGridFunction<T> antiderivative(const BasicGridFunction<T>& f) {
  const std::size_t n = f.size();
  double scale = 1.0;
  for (const auto& s : f) scale = std::max(scale, std::abs(s));
  if (std::abs(average(f)) < 1e-13 * scale) {
    auto c = fourier(f);
    auto& v = c.fft_ordered();
    v[0] = 0.0;
    v[n / 2] = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
      if (j == n / 2) continue;
      v[j] /= Complex(0.0, static_cast<double>(wavenumber(j, n)));
    }
    return detail::back_to_grid<T>(c);
  }
  const double h = f.spacing();
  std::vector<T> cum(n);
  cum[0] = T{};
  for (std::size_t j = 1; j < n; ++j) cum[j] = cum[j - 1] + 0.5 * h * (f[j - 1] + f[j]);
  BasicGridFunction<T> out(std::move(cum));
  return out - average(out);
}

/// <f, g> = (1/2π) ∫ f conj(g) dx by the periodic rectangle rule.
template <typename T>
T inner(const BasicGridFunction<T>& f, const BasicGridFunction<T>& g) {
  f.check_same(g);
  T sum{};
  for (std::size_t j = 0; j < f.size(); ++j) sum += f[j] * detail::conj_if_complex(g[j]);
  return sum / static_cast<double>(f.size());
}

template <typename T>
double norm_sq(const BasicGridFunction<T>& f) {
  return detail::real_part(inner(f, f));
}

template <typename T>
double norm(const BasicGridFunction<T>& f) {
  return std::sqrt(norm_sq(f));
}

/// Σ_k |ĥ(k)|², equal to norm_sq(f) by Plancherel.
inline double spectral_energy(const FourierCoeffs& c) {
  double s = 0.0;
  for (const auto& z : c.fft_ordered()) s += std::norm(z);
  return s;
}

inline GridFunction real_part(const ComplexGridFunction& f) {
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j].real();
  return GridFunction(std::move(out));
}

inline ComplexGridFunction to_complex(const GridFunction& f) {
  std::vector<Complex> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = f[j];
  return ComplexGridFunction(std::move(out));
}

}  // namespace gtlab
