#pragma once

// Log-linear least-squares fits of exponential decay in a time series.

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtlab/errors.hpp"

namespace gtlab {

inline constexpr double kFitFloor = 1e-12;
inline constexpr std::size_t kFitMinPoints = 10;

struct DecayFit {
  double rate = 0.0;       // -slope of log(value) against t
  double r_squared = 1.0;  // 1 for an exactly flat series
  double t_lo = 0.0;       // window actually used
  double t_hi = 0.0;
  std::size_t points = 0;
};

namespace detail {

// Fits log(value) - log(envelope(t)) against t.
template <typename Envelope>
DecayFit fit_log_linear(std::span<const double> t, std::span<const double> value, std::pair<double, double> window,
                        Envelope&& envelope) {
  if (t.size() != value.size()) throw ValidationError("decay fit: time and value series differ in length");
  if (!(window.first < window.second)) throw ValidationError("decay fit: empty window");
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < window.first || t[i] > window.second) continue;
    if (!(value[i] > kFitFloor)) {
      if (xs.empty()) throw NumericalError("decay fit: series is below the 1e-12 floor at the window start");
      break;  // shrink the window to the last point above the floor
    }
    xs.push_back(t[i]);
    ys.push_back(std::log(value[i]) - std::log(envelope(t[i])));
  }
  if (xs.size() < kFitMinPoints) {
    throw NumericalError("decay fit: only " + std::to_string(xs.size()) + " usable points in the window (need " +
                         std::to_string(kFitMinPoints) + ")");
  }
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  DecayFit f;
  const double slope = sxy / sxx;
  f.rate = -slope;
  f.r_squared = syy <= 1e-300 ? 1.0 : (sxy * sxy) / (sxx * syy);
  f.t_lo = xs.front();
  f.t_hi = xs.back();
  f.points = xs.size();
  return f;
}

}  // namespace detail

/// Rate r of value ≈ C e^{-rt} over the window.
inline DecayFit fit_decay_rate(std::span<const double> t, std::span<const double> value,
                               std::pair<double, double> window) {
  return detail::fit_log_linear(t, value, window, [](double) { return 1.0; });
}

/// Rate r of value ≈ C (1+t) e^{-rt}, the envelope of a defective mode.
inline DecayFit fit_envelope_rate(std::span<const double> t, std::span<const double> value,
                                  std::pair<double, double> window) {
  return detail::fit_log_linear(t, value, window, [](double s) { return 1.0 + s; });
}

/// Default fit window [0.25 T, 0.9 T].
inline std::pair<double, double> default_fit_window(double t_final) { return {0.25 * t_final, 0.9 * t_final}; }

}  // namespace gtlab
