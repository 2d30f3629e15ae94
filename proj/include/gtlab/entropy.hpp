#pragma once

// Twisted L² functionals E_θ(f, g) = ‖f‖² + ‖g‖² - θ Re<∂⁻¹f, g> and their
// 3-velocity extension, plus the exact right-hand side of dE_θ/dt along the
// macroscopic 2-velocity flow.

#include <cmath>
#include <utility>

#include "gtlab/errors.hpp"
#include "gtlab/relaxation.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

enum class EntropyVariant { TwoVelocity, ThreeVelocity };

struct EntropyParams {
  double theta = 0.0;
  EntropyVariant variant = EntropyVariant::TwoVelocity;
};

template <typename T>
double entropy2(const BasicGridFunction<T>& f, const BasicGridFunction<T>& g, double theta) {
  f.check_same(g);
  const double mixed = detail::real_part(inner(antiderivative(f), g));
  return norm_sq(f) + norm_sq(g) - theta * mixed;
}

template <typename T>
double entropy3(const BasicGridFunction<T>& f, const BasicGridFunction<T>& g, const BasicGridFunction<T>& h,
                double theta) {
  f.check_same(h);
  return entropy2(f, g, theta) + norm_sq(h);
}

/// Constants (lower, upper) with lower·(‖f‖²+‖g‖²) <= E_θ <= upper·(‖f‖²+‖g‖²)
/// for mean-zero f. The lower bound is positive only for |θ| < 2.
inline std::pair<double, double> equivalence_bounds(double theta) {
  const double h = std::abs(theta) / 2.0;
  return {1.0 - h, 1.0 + h};
}

/// dE_θ(u - u_avg, v)/dt along u_t + v_x = 0, v_t + u_x = -σv:
///   -θ‖u-u_avg‖² + <θ-2σ, v²> + θ<σ ∂⁻¹(u-u_avg), v> - θ v_avg².
/// u may carry its mean; it is removed here.
inline double entropy_evolution_rhs(const GridFunction& u, const GridFunction& v, const GridFunction& sigma,
                                    double theta) {
  u.check_same(v);
  u.check_same(sigma);
  const GridFunction du = u - average(u);
  const GridFunction a = antiderivative(du);
  const std::size_t n = u.size();
  double damp = 0.0;
  double cross = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    damp += (theta - 2.0 * sigma[j]) * v[j] * v[j];
    cross += sigma[j] * a[j] * v[j];
  }
  damp /= static_cast<double>(n);
  cross /= static_cast<double>(n);
  const double vavg = average(v);
  return -theta * norm_sq(du) + damp + theta * cross - theta * vavg * vavg;
}

inline double entropy_evolution_rhs(const GridFunction& u, const GridFunction& v, const RelaxationProfile& sigma,
                                    double theta) {
  return entropy_evolution_rhs(u, v, sigma.on_grid(u.size()), theta);
}

}  // namespace gtlab
