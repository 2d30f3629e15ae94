#pragma once

// Time integration of the 2- and 3-velocity Goldstein-Taylor systems on the
// torus. SplitExact: Strang splitting in kinetic variables with exact
// relaxation and exact (integer-shift) transport. SpectralRK4: classical RK4
// on the macroscopic form with spectral x-derivatives.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "gtlab/decay_fit.hpp"
#include "gtlab/entropy.hpp"
#include "gtlab/errors.hpp"
#include "gtlab/rates.hpp"
#include "gtlab/relaxation.hpp"
#include "gtlab/torus_field.hpp"

namespace gtlab {

struct MacroState2V {
  GridFunction u;  // f+ + f-
  GridFunction v;  // f+ - f-
  double t = 0.0;
};

struct KineticState2V {
  GridFunction f_plus;
  GridFunction f_minus;
  double t = 0.0;
};

struct MacroState3V {
  GridFunction u1;
  GridFunction u2;
  GridFunction u3;
  double t = 0.0;
};

struct KineticState3V {
  GridFunction f1;  // velocity +1
  GridFunction f2;  // velocity 0
  GridFunction f3;  // velocity -1
  double t = 0.0;
};

inline MacroState2V to_macro(const KineticState2V& f) {
  return {f.f_plus + f.f_minus, f.f_plus - f.f_minus, f.t};
}

inline KineticState2V to_kinetic(const MacroState2V& m) {
  return {(m.u + m.v) * 0.5, (m.u - m.v) * 0.5, m.t};
}

namespace detail {

inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
inline const double kInvSqrt3 = 1.0 / std::sqrt(3.0);
inline const double kInvSqrt6 = 1.0 / std::sqrt(6.0);

}  // namespace detail

/// Orthogonal change of variables between (f1, f2, f3) and (u1, u2, u3).
inline const std::array<std::array<double, 3>, 3>& transform_3v() {
  static const std::array<std::array<double, 3>, 3> m{{
      {detail::kInvSqrt3, detail::kInvSqrt3, detail::kInvSqrt3},
      {detail::kInvSqrt2, 0.0, -detail::kInvSqrt2},
      {detail::kInvSqrt6, -2.0 * detail::kInvSqrt6, detail::kInvSqrt6},
  }};
  return m;
}

inline MacroState3V to_macro3(const KineticState3V& f) {
  const auto& m = transform_3v();
  auto row = [&](int i) { return f.f1 * m[i][0] + f.f2 * m[i][1] + f.f3 * m[i][2]; };
  return {row(0), row(1), row(2), f.t};
}

inline KineticState3V to_kinetic3(const MacroState3V& u) {
  const auto& m = transform_3v();
  auto col = [&](int j) { return u.u1 * m[0][j] + u.u2 * m[1][j] + u.u3 * m[2][j]; };
  return {col(0), col(1), col(2), u.t};
}

/// Limit value of u1: (1/(2√3π)) ∫ (f1 + f2 + f3) dx, i.e. the mean of u1.
inline double u_infinity(const MacroState3V& u) { return average(u.u1); }

enum class Scheme { SplitExact, SpectralRK4 };

inline const char* to_string(Scheme s) { return s == Scheme::SplitExact ? "split" : "rk4"; }

inline Scheme parse_scheme(const std::string& s) {
  if (s == "split") return Scheme::SplitExact;
  if (s == "rk4") return Scheme::SpectralRK4;
  throw ValidationError("unknown scheme '" + s + "' (split, rk4)");
}

struct SimulationOptions {
  double t_final = 1.0;
  double dt = 0.0;  // 0 selects Δx
  Scheme scheme = Scheme::SplitExact;
  std::optional<double> theta;  // twist for the entropy column; default from the profile
  std::size_t snapshot_every = 0;  // 0 disables snapshots
};

/// One diagnostics row per step. residual is the centered difference of E_θ
/// minus the exact right-hand side (2-velocity only; NaN at the ends and for
/// the 3-velocity system). norm_u3 is NaN for the 2-velocity system.
struct DiagnosticRow {
  double t = 0.0;
  double entropy = 0.0;
  double norm_u_dev = 0.0;
  double norm_v = 0.0;
  double v_avg = 0.0;
  double mass = 0.0;
  double residual = std::numeric_limits<double>::quiet_NaN();
  double norm_u3 = std::numeric_limits<double>::quiet_NaN();
  double rhs = std::numeric_limits<double>::quiet_NaN();

  /// L² distance of (u, v) (resp. (u1, u2, u3)) from equilibrium.
  double l2_distance() const {
    const double u3 = std::isnan(norm_u3) ? 0.0 : norm_u3;
    return std::sqrt(norm_u_dev * norm_u_dev + norm_v * norm_v + u3 * u3);
  }
};

struct Trajectory {
  std::vector<DiagnosticRow> rows;
  double theta = 0.0;
  double dt = 0.0;
  Scheme scheme = Scheme::SplitExact;
  bool three_velocity = false;

  std::vector<double> times() const { return column(&DiagnosticRow::t); }
  std::vector<double> entropies() const { return column(&DiagnosticRow::entropy); }
  std::vector<double> distances() const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.l2_distance());
    return out;
  }
  std::vector<double> column(double DiagnosticRow::*field) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.*field);
    return out;
  }

  /// Largest E(t_{i+1}) - E(t_i) over the run (negative when strictly decaying).
  double max_entropy_increase() const {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < rows.size(); ++i) worst = std::max(worst, rows[i].entropy - rows[i - 1].entropy);
    return worst;
  }

  /// Largest |residual| over the interior rows.
  double max_abs_residual() const {
    double worst = 0.0;
    for (const auto& r : rows) {
      if (!std::isnan(r.residual)) worst = std::max(worst, std::abs(r.residual));
    }
    return worst;
  }
};

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,E_theta,norm_u_dev,norm_v," << (tr.three_velocity ? "norm_u3," : "") << "v_avg,mass,residual\n";
  os << std::setprecision(15);
  for (const auto& r : tr.rows) {
    os << r.t << ',' << r.entropy << ',' << r.norm_u_dev << ',' << r.norm_v << ',';
    if (tr.three_velocity) os << r.norm_u3 << ',';
    os << r.v_avg << ',' << r.mass << ',';
    if (std::isnan(r.residual)) os << "nan"; else os << r.residual;
    os << '\n';
  }
}

using SnapshotCallback2V = std::function<void(std::size_t step, const MacroState2V&)>;
using SnapshotCallback3V = std::function<void(std::size_t step, const MacroState3V&)>;

namespace detail {

struct StepPlan {
  std::size_t steps = 0;
  double dt = 0.0;
  std::size_t shift = 0;        // SplitExact cells per step
  std::size_t substeps = 1;     // SpectralRK4 stages per recorded step
};

// SplitExact: dt must be an integer multiple of Δx; steps = round(T/dt), so
// the run ends at steps·dt. SpectralRK4: steps = ceil(T/dt) with dt shrunk to
// land on T, and sub-steps keeping |dt_sub · N/2| <= 2.5 (RK4 stability on
// the imaginary axis reaches 2√2).
inline StepPlan plan_steps(std::size_t n, const SimulationOptions& o) {
  if (!(o.t_final > 0.0) || !std::isfinite(o.t_final)) throw ValidationError("simulate: T must be positive");
  const double dx = kTwoPi / static_cast<double>(n);
  const double dt = o.dt == 0.0 ? dx : o.dt;
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("simulate: dt must be positive");
  StepPlan p;
  if (o.scheme == Scheme::SplitExact) {
    const double cells = dt / dx;
    const double rounded = std::round(cells);
    if (rounded < 1.0 || std::abs(cells - rounded) > 1e-9 * rounded) {
      throw ValidationError("simulate: SplitExact needs dt to be an integer multiple of Δx = 2π/N (dt/Δx = " +
                            std::to_string(cells) + ")");
    }
    p.shift = static_cast<std::size_t>(rounded);
    p.dt = rounded * dx;
    p.steps = static_cast<std::size_t>(std::max(1.0, std::round(o.t_final / p.dt)));
  } else {
    p.steps = static_cast<std::size_t>(std::max(1.0, std::ceil(o.t_final / dt - 1e-9)));
    p.dt = o.t_final / static_cast<double>(p.steps);
    p.substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(p.dt * static_cast<double>(n / 2) / 2.5)));
  }
  return p;
}

inline void shift_right(std::vector<double>& v, std::size_t s) {
  std::rotate(v.rbegin(), v.rbegin() + static_cast<std::ptrdiff_t>(s % v.size()), v.rend());
}

inline void shift_left(std::vector<double>& v, std::size_t s) {
  std::rotate(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(s % v.size()), v.end());
}

inline void check_finite(double e, double t) {
  if (!std::isfinite(e)) {
    throw NumericalError("simulate: non-finite state detected at t = " + std::to_string(t));
  }
}

inline void fill_residuals(Trajectory& tr) {
  auto& r = tr.rows;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    const double dedt = (r[i + 1].entropy - r[i - 1].entropy) / (r[i + 1].t - r[i - 1].t);
    r[i].residual = dedt - r[i].rhs;
  }
}

}  // namespace detail

/// Diagnostics of a 2-velocity macro state: E_θ(u - u_avg, v) and the norms.
inline DiagnosticRow diagnose_2v(const MacroState2V& m, const GridFunction& sigma, double theta) {
  DiagnosticRow r;
  r.t = m.t;
  r.mass = average(m.u);
  const GridFunction du = m.u - r.mass;
  r.entropy = entropy2(du, m.v, theta);
  r.norm_u_dev = norm(du);
  r.norm_v = norm(m.v);
  r.v_avg = average(m.v);
  r.rhs = entropy_evolution_rhs(m.u, m.v, sigma, theta);
  detail::check_finite(r.entropy, m.t);
  return r;
}

inline DiagnosticRow diagnose_3v(const MacroState3V& m, double theta) {
  DiagnosticRow r;
  r.t = m.t;
  r.mass = average(m.u1);
  const GridFunction du = m.u1 - r.mass;
  r.entropy = entropy3(du, m.u2, m.u3, theta);
  r.norm_u_dev = norm(du);
  r.norm_v = norm(m.u2);
  r.norm_u3 = norm(m.u3);
  r.v_avg = average(m.u2);
  detail::check_finite(r.entropy, m.t);
  return r;
}

namespace detail {

inline void relax_2v(std::vector<double>& fp, std::vector<double>& fm, const std::vector<double>& factor) {
  for (std::size_t j = 0; j < fp.size(); ++j) {
    const double mean = 0.5 * (fp[j] + fm[j]);
    const double half_diff = 0.5 * (fp[j] - fm[j]) * factor[j];
    fp[j] = mean + half_diff;
    fm[j] = mean - half_diff;
  }
}

inline void relax_3v(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c,
                     const std::vector<double>& factor) {
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double mean = (a[j] + b[j] + c[j]) / 3.0;
    a[j] = mean + (a[j] - mean) * factor[j];
    b[j] = mean + (b[j] - mean) * factor[j];
    c[j] = mean + (c[j] - mean) * factor[j];
  }
}

struct Rhs2V {
  const GridFunction& sigma;
  void operator()(const GridFunction& u, const GridFunction& v, GridFunction& du, GridFunction& dv) const {
    du = -derivative(v);
    dv = -derivative(u) - hadamard(sigma, v);
  }
};

struct Rhs3V {
  const GridFunction& sigma;
  void operator()(const std::array<GridFunction, 3>& u, std::array<GridFunction, 3>& d) const {
    static const double a = std::sqrt(2.0 / 3.0);
    static const double b = 1.0 / std::sqrt(3.0);
    const GridFunction d1 = derivative(u[0]);
    const GridFunction d2 = derivative(u[1]);
    const GridFunction d3 = derivative(u[2]);
    d[0] = d2 * (-a);
    d[1] = d1 * (-a) - d3 * b - hadamard(sigma, u[1]);
    d[2] = d2 * (-b) - hadamard(sigma, u[2]);
  }
};

template <std::size_t K, typename F>
void rk4_step(std::array<GridFunction, K>& y, double h, F&& f) {
  std::array<GridFunction, K> k1, k2, k3, k4, tmp;
  f(y, k1);
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + k1[i] * (0.5 * h);
  f(tmp, k2);
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + k2[i] * (0.5 * h);
  f(tmp, k3);
  for (std::size_t i = 0; i < K; ++i) tmp[i] = y[i] + k3[i] * h;
  f(tmp, k4);
  for (std::size_t i = 0; i < K; ++i) y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
}

}  // namespace detail

/// Advances the 2-velocity system to (about) T and records diagnostics every
/// step. The entropy column is E_θ(u - u_avg, v).
inline Trajectory simulate_2v(const MacroState2V& init, const RelaxationProfile& sigma_profile,
                              const SimulationOptions& opt, const SnapshotCallback2V& snapshot = {}) {
  init.u.check_same(init.v);
  const std::size_t n = init.u.size();
  const GridFunction sigma = sigma_profile.on_grid(n);
  const auto plan = detail::plan_steps(n, opt);
  Trajectory tr;
  tr.theta = opt.theta ? *opt.theta : default_theta(sigma_profile);
  tr.dt = plan.dt;
  tr.scheme = opt.scheme;
  tr.rows.reserve(plan.steps + 1);

  MacroState2V m = init;
  tr.rows.push_back(diagnose_2v(m, sigma, tr.theta));
  if (snapshot) snapshot(0, m);

  if (opt.scheme == Scheme::SplitExact) {
    std::vector<double> half(n);
    for (std::size_t j = 0; j < n; ++j) half[j] = std::exp(-sigma[j] * plan.dt / 2.0);
    auto k = to_kinetic(m);
    std::vector<double> fp = k.f_plus.data();
    std::vector<double> fm = k.f_minus.data();
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      detail::relax_2v(fp, fm, half);
      detail::shift_right(fp, plan.shift);
      detail::shift_left(fm, plan.shift);
      detail::relax_2v(fp, fm, half);
      m = to_macro(KineticState2V{GridFunction(fp), GridFunction(fm), static_cast<double>(s) * plan.dt});
      tr.rows.push_back(diagnose_2v(m, sigma, tr.theta));
      if (snapshot && opt.snapshot_every && s % opt.snapshot_every == 0) snapshot(s, m);
    }
  } else {
    const double h = plan.dt / static_cast<double>(plan.substeps);
    const detail::Rhs2V rhs{sigma};
    auto f = [&rhs](const std::array<GridFunction, 2>& y, std::array<GridFunction, 2>& d) { rhs(y[0], y[1], d[0], d[1]); };
    std::array<GridFunction, 2> y{m.u, m.v};
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      for (std::size_t q = 0; q < plan.substeps; ++q) detail::rk4_step(y, h, f);
      m = {y[0], y[1], static_cast<double>(s) * plan.dt};
      tr.rows.push_back(diagnose_2v(m, sigma, tr.theta));
      if (snapshot && opt.snapshot_every && s % opt.snapshot_every == 0) snapshot(s, m);
    }
  }
  detail::fill_residuals(tr);
  return tr;
}

inline Trajectory simulate_2v(const KineticState2V& init, const RelaxationProfile& sigma, const SimulationOptions& opt,
                              const SnapshotCallback2V& snapshot = {}) {
  return simulate_2v(to_macro(init), sigma, opt, snapshot);
}

/// Advances the 3-velocity system; the entropy column is 𝔈_θ(u1 - u_∞, u2, u3)
/// with θ defaulting to the explicit 3-velocity choice √6 α.
inline Trajectory simulate_3v(const MacroState3V& init, const RelaxationProfile& sigma_profile,
                              const SimulationOptions& opt, const SnapshotCallback3V& snapshot = {}) {
  init.u1.check_same(init.u2);
  init.u1.check_same(init.u3);
  const std::size_t n = init.u1.size();
  const GridFunction sigma = sigma_profile.on_grid(n);
  const auto plan = detail::plan_steps(n, opt);
  Trajectory tr;
  tr.theta = opt.theta ? *opt.theta : *rate_3v(sigma_profile.sigma_min(), sigma_profile.sigma_max()).theta;
  tr.dt = plan.dt;
  tr.scheme = opt.scheme;
  tr.three_velocity = true;
  tr.rows.reserve(plan.steps + 1);

  MacroState3V m = init;
  tr.rows.push_back(diagnose_3v(m, tr.theta));
  if (snapshot) snapshot(0, m);

  if (opt.scheme == Scheme::SplitExact) {
    std::vector<double> half(n);
    for (std::size_t j = 0; j < n; ++j) half[j] = std::exp(-sigma[j] * plan.dt / 2.0);
    auto k = to_kinetic3(m);
    std::vector<double> f1 = k.f1.data();
    std::vector<double> f2 = k.f2.data();
    std::vector<double> f3 = k.f3.data();
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      detail::relax_3v(f1, f2, f3, half);
      detail::shift_right(f1, plan.shift);
      detail::shift_left(f3, plan.shift);
      detail::relax_3v(f1, f2, f3, half);
      m = to_macro3(KineticState3V{GridFunction(f1), GridFunction(f2), GridFunction(f3), static_cast<double>(s) * plan.dt});
      tr.rows.push_back(diagnose_3v(m, tr.theta));
      if (snapshot && opt.snapshot_every && s % opt.snapshot_every == 0) snapshot(s, m);
    }
  } else {
    const double h = plan.dt / static_cast<double>(plan.substeps);
    const detail::Rhs3V rhs{sigma};
    std::array<GridFunction, 3> y{m.u1, m.u2, m.u3};
    for (std::size_t s = 1; s <= plan.steps; ++s) {
      for (std::size_t q = 0; q < plan.substeps; ++q) detail::rk4_step(y, h, rhs);
      m = {y[0], y[1], y[2], static_cast<double>(s) * plan.dt};
      tr.rows.push_back(diagnose_3v(m, tr.theta));
      if (snapshot && opt.snapshot_every && s % opt.snapshot_every == 0) snapshot(s, m);
    }
  }
  return tr;
}

}  // namespace gtlab
