#pragma once

// Experiment harness: flat key-value configs, named scenarios that produce
// in-memory artifacts (raw CSV, summary CSV, SVG plots), a worker pool for
// batches, and a single collector that writes the files.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "gtlab/decay_fit.hpp"
#include "gtlab/errors.hpp"
#include "gtlab/initial_data.hpp"
#include "gtlab/modal.hpp"
#include "gtlab/poincare.hpp"
#include "gtlab/rates.hpp"
#include "gtlab/relaxation.hpp"
#include "gtlab/solver.hpp"
#include "gtlab/svg_plot.hpp"
#include "gtlab/telegrapher.hpp"

namespace gtlab {

enum class Scenario {
  ConstantSigma,
  PiecewiseSigma,
  ThreeVelocity,
  PoincareTable,
  TelegrapherTable,
  AppendixAComparison,
  ModalReport,
};

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::ConstantSigma: return "constant-sigma";
    case Scenario::PiecewiseSigma: return "piecewise-sigma";
    case Scenario::ThreeVelocity: return "three-velocity";
    case Scenario::PoincareTable: return "poincare-table";
    case Scenario::TelegrapherTable: return "telegrapher-table";
    case Scenario::AppendixAComparison: return "appendix-a";
    case Scenario::ModalReport: return "modal-report";
  }
  return "?";
}

inline Scenario parse_scenario(const std::string& name) {
  for (const auto s : {Scenario::ConstantSigma, Scenario::PiecewiseSigma, Scenario::ThreeVelocity,
                       Scenario::PoincareTable, Scenario::TelegrapherTable, Scenario::AppendixAComparison,
                       Scenario::ModalReport}) {
    if (name == to_string(s)) return s;
  }
  throw ValidationError("config field 'scenario': unknown scenario '" + name +
                        "' (constant-sigma, piecewise-sigma, three-velocity, poincare-table, telegrapher-table, "
                        "appendix-a, modal-report)");
}

using ParamMap = std::map<std::string, std::string>;

struct ExperimentConfig {
  Scenario scenario = Scenario::ConstantSigma;
  ParamMap params;
  std::filesystem::path output_dir = "out";
  bool plots = true;
  unsigned threads = 0;  // 0 selects the hardware concurrency
};

/// Flat INI: one "key = value" per line, '#' or ';' starts a comment.
/// The keys scenario, out, plots and threads fill the config fields; every
/// other key is a scenario parameter.
inline ExperimentConfig read_config(std::istream& is, const std::string& origin = "config") {
  ExperimentConfig c;
  bool have_scenario = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find_first_of("#;"); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty() || t == "\r") continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos || t.front() == '[') {
      throw ValidationError(origin + " line " + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    if (!value.empty() && value.back() == '\r') value.pop_back();
    if (key.empty()) throw ValidationError(origin + " line " + std::to_string(lineno) + ": empty key");
    if (key == "scenario") {
      c.scenario = parse_scenario(value);
      have_scenario = true;
    } else if (key == "out") {
      c.output_dir = value;
    } else if (key == "plots") {
      if (value != "true" && value != "false") {
        throw ValidationError("config field 'plots': expected true or false, got '" + value + "'");
      }
      c.plots = value == "true";
    } else if (key == "threads") {
      const double v = detail::parse_number(value, "config field 'threads'");
      if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("config field 'threads': expected an integer >= 0");
      c.threads = static_cast<unsigned>(v);
    } else {
      c.params[key] = value;
    }
  }
  if (!have_scenario) throw ValidationError(origin + ": missing 'scenario = ...'");
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path.string() + "'");
  return read_config(in, path.string());
}

namespace detail {

inline const std::set<std::string>& allowed_keys(Scenario s) {
  static const std::map<Scenario, std::set<std::string>> keys = {
      {Scenario::ConstantSigma,
       {"sigma", "n", "dt", "t_final", "scheme", "u0", "v0", "seed", "eps", "fit_lo", "fit_hi", "k_max"}},
      {Scenario::PiecewiseSigma,
       {"sigma", "n", "dt", "t_final", "scheme", "theta", "alpha", "trajectories", "seed", "u0", "v0", "fit_lo",
        "fit_hi"}},
      {Scenario::ThreeVelocity, {"sigma", "n", "dt", "t_final", "scheme", "theta", "alpha", "seed", "fit_lo", "fit_hi"}},
      {Scenario::PoincareTable, {"sigma", "theta", "alpha", "tol"}},
      {Scenario::TelegrapherTable, {"sigma", "seeds"}},
      {Scenario::AppendixAComparison, {"sigma", "theta", "tol"}},
      {Scenario::ModalReport, {"sigma", "k_max", "eps"}},
  };
  return keys.at(s);
}

// Typed, field-level access to a scenario's parameters.
class ParamReader {
 public:
  explicit ParamReader(const ParamMap& m) : m_(m) {}

  bool has(const std::string& key) const { return m_.count(key) != 0; }

  std::string str(const std::string& key, const std::string& fallback) const {
    const auto it = m_.find(key);
    return it == m_.end() ? fallback : it->second;
  }

  std::optional<double> opt_real(const std::string& key) const {
    const auto it = m_.find(key);
    if (it == m_.end()) return std::nullopt;
    double v = 0.0;
    try {
      v = parse_number(it->second, "number");
    } catch (const ValidationError&) {
      fail(key, "expected a number", it->second);
    }
    if (!std::isfinite(v)) fail(key, "expected a finite number", it->second);
    return v;
  }

  double real(const std::string& key, double fallback) const { return opt_real(key).value_or(fallback); }

  double positive(const std::string& key, double fallback) const {
    const double v = real(key, fallback);
    if (!(v > 0.0)) fail(key, "expected a positive number", str(key, std::to_string(v)));
    return v;
  }

  std::optional<double> opt_positive(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return positive(key, 1.0);
  }

  std::uint64_t integer(const std::string& key, std::uint64_t fallback, std::uint64_t min_value) const {
    if (!has(key)) return fallback;
    const double v = real(key, 0.0);
    if (v != std::floor(v) || v < static_cast<double>(min_value) || v > 9.0e15) {
      fail(key, "expected an integer >= " + std::to_string(min_value), str(key, ""));
    }
    return static_cast<std::uint64_t>(v);
  }

  std::size_t grid_size(std::size_t fallback) const {
    const auto n = integer("n", fallback, 8);
    if (n % 2 != 0) fail("n", "expected an even integer >= 8", str("n", ""));
    return static_cast<std::size_t>(n);
  }

  RelaxationProfile sigma(const std::string& fallback, std::size_t n) const {
    const std::string spec = str("sigma", fallback);
    try {
      if (spec.find(':') == std::string::npos) return RelaxationProfile::constant(parse_number(spec, "σ value"));
      return parse_relaxation(spec, n);
    } catch (const ValidationError& e) {
      fail("sigma", e.what(), spec);
    }
  }

  [[noreturn]] static void fail(const std::string& key, const std::string& what, const std::string& got) {
    throw ValidationError("config field '" + key + "': " + what + " (got '" + got + "')");
  }

 private:
  const ParamMap& m_;
};

}  // namespace detail

struct SimulationSetup {
  RelaxationProfile sigma = RelaxationProfile::constant(1.0);
  std::size_t n = 256;
  SimulationOptions options;
  std::uint64_t seed = 1;
  std::pair<double, double> window;
};

struct ConstantSigmaPlan {
  SimulationSetup sim;
  double sigma_value = 1.0;
  std::optional<double> eps;
  std::string u0;
  std::string v0;
  int k_max = 20;
};

struct PiecewiseSigmaPlan {
  SimulationSetup sim;
  double theta = 1.0;
  double alpha = 0.5;
  std::size_t trajectories = 20;
  std::optional<std::string> u0;  // both set: one deterministic trajectory
  std::optional<std::string> v0;
};

struct ThreeVelocityPlan {
  SimulationSetup sim;
  double theta = 0.0;
  double alpha = 0.0;
};

struct PoincarePlan {
  RelaxationProfile sigma = RelaxationProfile::constant(1.0);
  double theta = 1.0;
  double alpha0 = 0.0;
  double tol = 1e-6;
  bool appendix_case = false;
};

struct TelegrapherPlan {
  RelaxationProfile sigma = RelaxationProfile::constant(1.0);
  int seeds = 200;
  bool appendix_case = false;
};

struct AppendixAPlan {
  RelaxationProfile sigma = RelaxationProfile::constant(1.0);
  double theta = 1.0;
  double tol = 1e-6;
  bool appendix_case = false;
};

struct ModalPlan {
  double sigma = 1.0;
  int k_max = 50;
  std::optional<double> eps;
};

using RunPlan = std::variant<ConstantSigmaPlan, PiecewiseSigmaPlan, ThreeVelocityPlan, PoincarePlan,
                             TelegrapherPlan, AppendixAPlan, ModalPlan>;

// Published reference values for σ ∈ {1, 4}.
inline constexpr double kPublishedAlphaStar = 0.5359;
inline constexpr double kPublishedCOmegaSq = 1.12013;
inline constexpr double kPublishedAlphaMax = 0.7234;
inline constexpr double kPublishedGap = 2.72831;
inline constexpr double kPublishedAlphaBS = 0.86845;

namespace detail {

inline const char* kAppendixSigma = "pc:1@pi,4@2pi";

inline bool is_appendix_sigma(const RelaxationProfile& s) {
  const auto* pc = std::get_if<RelaxationProfile::PiecewiseConstant>(&s.kind());
  if (!pc || pc->pieces.size() != 2) return false;
  return std::abs(pc->pieces[0].breakpoint - std::numbers::pi) < 1e-12 && pc->pieces[0].value == 1.0 &&
         pc->pieces[1].value == 4.0;
}

inline SimulationSetup read_simulation(const ParamReader& p, const std::string& sigma_default, double t_default) {
  SimulationSetup s;
  s.n = p.grid_size(256);
  s.sigma = p.sigma(sigma_default, s.n);
  s.options.t_final = p.positive("t_final", t_default);
  s.options.dt = p.real("dt", 0.0);
  if (s.options.dt < 0.0) ParamReader::fail("dt", "expected dt >= 0 (0 selects Δx)", p.str("dt", ""));
  try {
    s.options.scheme = parse_scheme(p.str("scheme", "split"));
  } catch (const ValidationError& e) {
    ParamReader::fail("scheme", e.what(), p.str("scheme", ""));
  }
  s.seed = p.integer("seed", 1, 0);
  try {
    plan_steps(s.n, s.options);
  } catch (const ValidationError& e) {
    ParamReader::fail("dt", e.what(), p.str("dt", "0"));
  }
  const auto w = default_fit_window(s.options.t_final);
  s.window = {p.real("fit_lo", w.first), p.real("fit_hi", w.second)};
  if (!(s.window.first >= 0.0 && s.window.first < s.window.second && s.window.second <= s.options.t_final + 1e-12)) {
    ParamReader::fail("fit_lo", "fit window must satisfy 0 <= fit_lo < fit_hi <= t_final",
                      p.str("fit_lo", "") + "," + p.str("fit_hi", ""));
  }
  return s;
}

inline void check_initial_spec(const ParamReader& p, const std::string& key, std::size_t n) {
  if (!p.has(key)) return;
  std::mt19937_64 rng(0);
  try {
    parse_profile(p.str(key, ""), n, rng);
  } catch (const ValidationError& e) {
    ParamReader::fail(key, e.what(), p.str(key, ""));
  }
}

}  // namespace detail

/// Checks every parameter against the module preconditions and returns the
/// typed plan; nothing runs before this succeeds.
inline RunPlan validate(const ExperimentConfig& c) {
  const auto& allowed = detail::allowed_keys(c.scenario);
  for (const auto& [key, value] : c.params) {
    if (!allowed.count(key)) {
      std::string list;
      for (const auto& k : allowed) list += (list.empty() ? "" : ", ") + k;
      throw ValidationError("config field '" + key + "': not a parameter of scenario " + to_string(c.scenario) +
                            " (allowed: " + list + ")");
    }
  }
  const detail::ParamReader p(c.params);
  using detail::ParamReader;
  switch (c.scenario) {
    case Scenario::ConstantSigma: {
      ConstantSigmaPlan plan;
      plan.sim = detail::read_simulation(p, "const:1", 30.0);
      if (!plan.sim.sigma.is_constant()) ParamReader::fail("sigma", "constant-sigma needs a constant profile", p.str("sigma", ""));
      plan.sigma_value = plan.sim.sigma.sigma_min();
      plan.eps = p.opt_real("eps");
      if (std::abs(plan.sigma_value - 2.0) <= 1e-12 && !plan.eps) plan.eps = 0.1;
      if (plan.eps && !(*plan.eps > 0.0 && *plan.eps < 1.0)) ParamReader::fail("eps", "expected ε in (0, 1)", p.str("eps", ""));
      plan.sim.options.theta = *constant_rate(plan.sigma_value, plan.eps).theta;
      plan.u0 = p.str("u0", "zero");
      plan.v0 = p.str("v0", "cos:1");
      detail::check_initial_spec(p, "u0", plan.sim.n);
      detail::check_initial_spec(p, "v0", plan.sim.n);
      plan.k_max = static_cast<int>(p.integer("k_max", 20, 1));
      return plan;
    }
    case Scenario::PiecewiseSigma: {
      PiecewiseSigmaPlan plan;
      plan.sim = detail::read_simulation(p, detail::kAppendixSigma, 20.0);
      const double smin = plan.sim.sigma.sigma_min();
      const double smax = plan.sim.sigma.sigma_max();
      plan.theta = p.real("theta", theta_star(smin, smax));
      plan.alpha = p.real("alpha", alpha_star(smin, smax));
      const auto verdict = check_conditions_2v(plan.theta, plan.alpha, plan.sim.sigma);
      if (!verdict.ok()) {
        ParamReader::fail(p.has("alpha") ? "alpha" : "theta", "(θ, α) not admissible: " + verdict.summary(),
                          p.str("theta", "θ*") + "," + p.str("alpha", "α*"));
      }
      plan.sim.options.theta = plan.theta;
      plan.trajectories = p.integer("trajectories", 20, 1);
      if (p.has("u0") || p.has("v0")) {
        plan.u0 = p.str("u0", "zero");
        plan.v0 = p.str("v0", "zero");
        plan.trajectories = 1;
        detail::check_initial_spec(p, "u0", plan.sim.n);
        detail::check_initial_spec(p, "v0", plan.sim.n);
      }
      return plan;
    }
    case Scenario::ThreeVelocity: {
      ThreeVelocityPlan plan;
      plan.sim = detail::read_simulation(p, "const:1", 40.0);
      const auto r = rate_3v(plan.sim.sigma.sigma_min(), plan.sim.sigma.sigma_max());
      plan.alpha = p.real("alpha", r.rate);
      plan.theta = p.real("theta", std::sqrt(6.0) * plan.alpha);
      const auto verdict = check_conditions_3v(plan.theta, plan.alpha, plan.sim.sigma);
      if (!verdict.ok()) {
        ParamReader::fail(p.has("alpha") ? "alpha" : "theta", "(θ, α) not admissible: " + verdict.summary(),
                          p.str("theta", "√6α") + "," + p.str("alpha", "α"));
      }
      plan.sim.options.theta = plan.theta;
      return plan;
    }
    case Scenario::PoincareTable: {
      PoincarePlan plan;
      plan.sigma = p.sigma(detail::kAppendixSigma, 256);
      try {
        plan.sigma.two_piece_values();
      } catch (const ValidationError& e) {
        ParamReader::fail("sigma", e.what(), p.str("sigma", ""));
      }
      plan.theta = p.positive("theta", 1.0);
      plan.alpha0 = p.positive("alpha", alpha_star(plan.sigma.sigma_min(), plan.sigma.sigma_max()));
      plan.tol = p.positive("tol", 1e-6);
      plan.appendix_case = detail::is_appendix_sigma(plan.sigma) && plan.theta == 1.0 && !p.has("alpha");
      return plan;
    }
    case Scenario::TelegrapherTable: {
      TelegrapherPlan plan;
      plan.sigma = p.sigma(detail::kAppendixSigma, 256);
      try {
        plan.sigma.two_piece_values();
      } catch (const ValidationError& e) {
        ParamReader::fail("sigma", e.what(), p.str("sigma", ""));
      }
      plan.seeds = static_cast<int>(p.integer("seeds", 200, 2));
      plan.appendix_case = detail::is_appendix_sigma(plan.sigma);
      return plan;
    }
    case Scenario::AppendixAComparison: {
      AppendixAPlan plan;
      plan.sigma = p.sigma(detail::kAppendixSigma, 256);
      try {
        plan.sigma.two_piece_values();
      } catch (const ValidationError& e) {
        ParamReader::fail("sigma", e.what(), p.str("sigma", ""));
      }
      plan.theta = p.positive("theta", 1.0);
      plan.tol = p.positive("tol", 1e-6);
      plan.appendix_case = detail::is_appendix_sigma(plan.sigma) && plan.theta == 1.0;
      return plan;
    }
    case Scenario::ModalReport: {
      ModalPlan plan;
      const auto s = p.sigma("const:1", 256);
      if (!s.is_constant()) ParamReader::fail("sigma", "modal-report needs a constant σ", p.str("sigma", ""));
      plan.sigma = s.sigma_min();
      plan.k_max = static_cast<int>(p.integer("k_max", 50, 1));
      plan.eps = p.opt_real("eps");
      if (std::abs(plan.sigma - 2.0) <= 1e-12 && !plan.eps) plan.eps = 0.1;
      if (plan.eps && !(*plan.eps > 0.0 && *plan.eps < 1.0)) ParamReader::fail("eps", "expected ε in (0, 1)", p.str("eps", ""));
      return plan;
    }
  }
  throw ValidationError("unknown scenario");
}

struct Artifact {
  std::string name;  // file name inside the output directory
  std::string content;
};

struct SummaryRow {
  std::string quantity;
  double theoretical = std::numeric_limits<double>::quiet_NaN();
  double observed = std::numeric_limits<double>::quiet_NaN();
  std::string note;

  double margin() const { return observed - theoretical; }
};

struct RunResult {
  std::string label;
  std::vector<SummaryRow> summary;
  std::vector<Artifact> artifacts;

  const SummaryRow* find(const std::string& quantity) const {
    for (const auto& r : summary) {
      if (r.quantity == quantity) return &r;
    }
    return nullptr;
  }
};

namespace detail {

inline std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "quantity,theoretical,observed,margin,note\n";
  for (const auto& r : rows) {
    os << r.quantity << ',' << num(r.theoretical) << ',' << num(r.observed) << ',' << num(r.margin()) << ','
       << r.note << '\n';
  }
  return os.str();
}

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

// Lower-bound check used for rows with a proven lower bound: observed >= theoretical - 2%.
inline std::string lower_bound_note(double theoretical, double observed) {
  return observed >= theoretical * 0.98 ? "ok: observed >= theoretical - 2%" : "BELOW: observed < theoretical - 2%";
}

inline std::string within_note(double reference, double observed, double tol, const std::string& what) {
  return std::string(std::abs(observed - reference) <= tol ? "ok" : "MISMATCH") + ": " + what;
}

}  // namespace detail

/// Runs fn(i) for i in [0, count) on a pool of worker threads. Results must be
/// stored by index; the exception of the lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (count == 0) return;
  unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  t = static_cast<unsigned>(std::min<std::size_t>(t, count));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < t; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline MacroState2V initial_2v(const std::string& u0, const std::string& v0, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GridFunction u = parse_profile(u0, n, rng);
  GridFunction v = parse_profile(v0, n, rng);
  return {std::move(u), std::move(v), 0.0};
}

inline std::string eigenvalue_csv(double sigma, int k_max) {
  std::ostringstream os;
  os << "k,re_lambda_minus,im_lambda_minus,re_lambda_plus,im_lambda_plus\n" << std::setprecision(15);
  for (int k = 1; k <= k_max; ++k) {
    const auto e = eigenvalues(k, sigma);
    os << k << ',' << e.lambda_minus.real() << ',' << e.lambda_minus.imag() << ',' << e.lambda_plus.real() << ','
       << e.lambda_plus.imag() << '\n';
  }
  return os.str();
}

inline std::string eigenvalue_svg(double sigma, int k_max) {
  PlotSeries lo{"lambda_-", {}, {}, SeriesStyle::Markers};
  PlotSeries hi{"lambda_+", {}, {}, SeriesStyle::Markers};
  for (int k = 1; k <= k_max; ++k) {
    const auto e = eigenvalues(k, sigma);
    for (const double sgn : {1.0, -1.0}) {
      lo.x.push_back(e.lambda_minus.real());
      lo.y.push_back(sgn * e.lambda_minus.imag());
      hi.x.push_back(e.lambda_plus.real());
      hi.y.push_back(sgn * e.lambda_plus.imag());
    }
  }
  const double mu = spectral_gap(sigma).mu;
  PlotSeries gap{"spectral gap", {mu, mu}, {-static_cast<double>(k_max), static_cast<double>(k_max)}};
  gap.dashed = true;
  PlotSpec spec{"Modal eigenvalues, sigma = " + num(sigma), "Re lambda", "Im lambda", false};
  return render([&](std::ostream& os) { write_svg(os, spec, {lo, hi, gap}); });
}

inline std::string entropy_svg(const std::vector<const Trajectory*>& trs, double rate, const std::string& title) {
  std::vector<PlotSeries> series;
  for (std::size_t i = 0; i < trs.size(); ++i) {
    series.push_back({trs.size() == 1 ? "E_theta" : "E_theta #" + std::to_string(i), trs[i]->times(), trs[i]->entropies()});
  }
  if (!trs.empty() && !trs.front()->rows.empty()) {
    const auto t = trs.front()->times();
    const double e0 = trs.front()->rows.front().entropy;
    PlotSeries ref{"E(0) exp(-" + num(rate) + " t)", {}, {}};
    ref.dashed = true;
    for (const double s : t) {
      ref.x.push_back(s);
      ref.y.push_back(e0 * std::exp(-rate * s));
    }
    series.push_back(std::move(ref));
  }
  PlotSpec spec{title, "t", "E_theta", true};
  return render([&](std::ostream& os) { write_svg(os, spec, series); });
}

inline RunResult run_constant_sigma(const ConstantSigmaPlan& plan, bool plots) {
  RunResult r;
  const auto init = initial_2v(plan.u0, plan.v0, plan.sim.n, plan.sim.seed);
  const auto tr = simulate_2v(init, plan.sim.sigma, plan.sim.options);
  const auto t = tr.times();
  const auto d = tr.distances();
  const auto e = tr.entropies();
  const auto rates = constant_rate(plan.sigma_value, plan.eps);
  const double mu = sharp_mu(plan.sigma_value);
  const bool at_two = rates.source == RateSource::ConstantDefectiveEps;
  const auto l2 = fit_decay_rate(t, d, plan.sim.window);
  if (at_two) {
    const auto env = fit_envelope_rate(t, d, plan.sim.window);
    r.summary.push_back({"l2_rate_pure_exp", 1.0 - *plan.eps, l2.rate, detail::lower_bound_note(1.0 - *plan.eps, l2.rate)});
    r.summary.push_back({"l2_rate_envelope", 1.0, env.rate,
                         detail::within_note(1.0, env.rate, 0.02, "(1+t)e^{-t} envelope within 0.02")});
  } else {
    r.summary.push_back({"l2_rate", mu, l2.rate, detail::lower_bound_note(mu, l2.rate)});
  }
  const auto ef = fit_decay_rate(t, e, plan.sim.window);
  r.summary.push_back({"entropy_rate", rates.rate, ef.rate, detail::lower_bound_note(rates.rate, ef.rate)});
  r.summary.push_back({"max_entropy_increase", 0.0, tr.max_entropy_increase(), "per-step increase; <= 1e-8 expected"});
  double modal_min = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= plan.k_max; ++k) {
    const auto ev = eigenvalues(k, plan.sigma_value);
    modal_min = std::min({modal_min, ev.lambda_minus.real(), ev.lambda_plus.real()});
  }
  r.summary.push_back({"modal_gap", mu, modal_min, within_note(mu, modal_min, 1e-12, "min Re lambda over k = 1..k_max")});
  r.artifacts.push_back({"trajectory.csv", render([&](std::ostream& os) { write_trajectory_csv(os, tr); })});
  r.artifacts.push_back({"eigenvalues.csv", eigenvalue_csv(plan.sigma_value, plan.k_max)});
  if (plots) {
    r.artifacts.push_back({"entropy_decay.svg", entropy_svg({&tr}, rates.rate, "Entropy decay, sigma = " + num(plan.sigma_value))});
    r.artifacts.push_back({"eigenvalues.svg", eigenvalue_svg(plan.sigma_value, plan.k_max)});
  }
  return r;
}

inline RunResult run_piecewise_sigma(const PiecewiseSigmaPlan& plan, bool plots, unsigned threads) {
  RunResult r;
  const std::size_t count = plan.trajectories;
  std::vector<Trajectory> trs(count);
  std::vector<DecayFit> fits(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t seed = plan.sim.seed + i;
    const MacroState2V init = plan.u0 ? initial_2v(*plan.u0, *plan.v0, plan.sim.n, seed) : random_state_2v(plan.sim.n, seed);
    trs[i] = simulate_2v(init, plan.sim.sigma, plan.sim.options);
    fits[i] = fit_decay_rate(trs[i].times(), trs[i].entropies(), plan.sim.window);
  });
  std::ostringstream table;
  table << "index,seed,max_entropy_increase,entropy_rate,r_squared,fit_t_hi,max_abs_residual\n" << std::setprecision(12);
  double min_rate = std::numeric_limits<double>::infinity();
  double max_increase = -std::numeric_limits<double>::infinity();
  double max_residual = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double inc = trs[i].max_entropy_increase();
    const double res = trs[i].max_abs_residual();
    table << i << ',' << plan.sim.seed + i << ',' << inc << ',' << fits[i].rate << ',' << fits[i].r_squared << ','
          << fits[i].t_hi << ',' << res << '\n';
    min_rate = std::min(min_rate, fits[i].rate);
    max_increase = std::max(max_increase, inc);
    max_residual = std::max(max_residual, res);
  }
  r.summary.push_back({"min_entropy_rate", plan.alpha, min_rate, lower_bound_note(plan.alpha, min_rate)});
  r.summary.push_back({"max_entropy_increase", 0.0, max_increase, "per-step increase; <= 1e-8 expected"});
  r.summary.push_back({"max_entropy_residual", 0.0, max_residual, "centered dE/dt minus the exact right-hand side"});
  r.summary.push_back({"theta", plan.theta, plan.theta, "twist used for E_theta"});
  r.artifacts.push_back({"trajectories.csv", table.str()});
  r.artifacts.push_back({"trajectory_000.csv", render([&](std::ostream& os) { write_trajectory_csv(os, trs.front()); })});
  if (plots) {
    std::vector<const Trajectory*> shown;
    for (std::size_t i = 0; i < std::min<std::size_t>(count, 5); ++i) shown.push_back(&trs[i]);
    r.artifacts.push_back({"entropy_decay.svg", entropy_svg(shown, plan.alpha, "Entropy decay, sigma = " + plan.sim.sigma.describe())});
  }
  return r;
}

inline RunResult run_three_velocity(const ThreeVelocityPlan& plan, bool plots) {
  RunResult r;
  const auto tr = simulate_3v(random_state_3v(plan.sim.n, plan.sim.seed), plan.sim.sigma, plan.sim.options);
  const auto f = fit_decay_rate(tr.times(), tr.entropies(), plan.sim.window);
  r.summary.push_back({"entropy_rate", plan.alpha, f.rate, lower_bound_note(plan.alpha, f.rate)});
  r.summary.push_back({"max_entropy_increase", 0.0, tr.max_entropy_increase(), "per-step increase; <= 1e-8 expected"});
  r.summary.push_back({"final_l2_distance", 0.0, tr.rows.back().l2_distance(), "distance from (u_inf, 0, 0)"});
  r.summary.push_back({"theta", plan.theta, plan.theta, "twist used for the 3-velocity functional"});
  r.artifacts.push_back({"trajectory.csv", render([&](std::ostream& os) { write_trajectory_csv(os, tr); })});
  if (plots) r.artifacts.push_back({"entropy_decay.svg", entropy_svg({&tr}, plan.alpha, "3-velocity entropy decay")});
  return r;
}

inline RunResult run_poincare(const PoincarePlan& plan) {
  RunResult r;
  const auto w = weight_from_sigma(plan.sigma, plan.theta, plan.alpha0);
  const auto pr = weighted_poincare(w);
  const auto it = improved_alpha(plan.sigma, plan.theta, plan.alpha0, plan.tol);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.summary.push_back({"C_omega_sq_at_alpha0", plan.appendix_case ? kPublishedCOmegaSq : nan, pr.c_omega_sq,
                       plan.appendix_case ? within_note(kPublishedCOmegaSq, pr.c_omega_sq, 1e-3, "published value, tol 1e-3")
                                          : "no published reference"});
  r.summary.push_back({"c_min_at_alpha0", nan, pr.c_min, "first root of det M(lambda)"});
  r.summary.push_back({"alpha_max", plan.appendix_case ? kPublishedAlphaMax : nan, it.alpha_max,
                       plan.appendix_case ? within_note(kPublishedAlphaMax, it.alpha_max, 1e-3, "published value, tol 1e-3")
                                          : "no published reference"});
  r.summary.push_back({"iterations", nan, static_cast<double>(it.iterates.size()),
                       it.converged ? "converged" : (it.stopped_inadmissible ? "stopped: inadmissible" : "not converged")});
  r.artifacts.push_back({"poincare.csv", render([&](std::ostream& os) { write_poincare_report(os, w, pr); })});
  r.artifacts.push_back({"iterates.csv", render([&](std::ostream& os) { write_iterate_table(os, it); })});
  return r;
}

inline std::string roots_svg(const BsRate& b) {
  PlotSeries roots{"roots of det M(gamma)", {}, {}, SeriesStyle::Markers};
  for (const Complex g : b.gap.all_roots) {
    roots.x.push_back(g.real());
    roots.y.push_back(g.imag());
  }
  PlotSeries gap{"gap", {b.gap.gap, b.gap.gap}, {-b.problem.im_max, b.problem.im_max}};
  gap.dashed = true;
  PlotSpec spec{"Telegrapher roots", "Re gamma", "Im gamma", false};
  return render([&](std::ostream& os) { write_svg(os, spec, {roots, gap}); });
}

inline RunResult run_telegrapher(const TelegrapherPlan& plan, bool plots) {
  RunResult r;
  BsRate b;
  b.problem = rescale_sigma(plan.sigma);
  b.gap = telegrapher_gap(b.problem, plan.seeds);
  b.report.rate = std::min(b.problem.l1_norm(), b.gap.gap) / std::numbers::pi;
  b.report.source = RateSource::BernardSalvarani;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.summary.push_back({"gap", plan.appendix_case ? kPublishedGap : nan, b.gap.gap,
                       plan.appendix_case ? within_note(kPublishedGap, b.gap.gap, 1e-3, "published value, tol 1e-3")
                                          : "no published reference"});
  r.summary.push_back({"gap_eigenvalue_imag", nan, b.gap.eigenvalue.imag(),
                       b.gap.eigenvalue.imag() == 0.0 ? "minimizer is real" : "minimizer is a complex pair"});
  r.summary.push_back({"l1_norm", nan, b.problem.l1_norm(), "(sigma1 + sigma2)/2 of the rescaled profile"});
  r.summary.push_back({"alpha_BS", plan.appendix_case ? kPublishedAlphaBS : nan, b.report.rate,
                       plan.appendix_case ? within_note(kPublishedAlphaBS, b.report.rate, 1e-3, "published value, tol 1e-3")
                                          : "no published reference"});
  if (b.gap.on_boundary) r.summary.push_back({"strip_boundary", nan, b.problem.re_max, "minimizer on the strip edge"});
  r.artifacts.push_back({"roots.csv", render([&](std::ostream& os) { write_telegrapher_report(os, b); })});
  if (plots) r.artifacts.push_back({"roots.svg", roots_svg(b)});
  return r;
}

inline RunResult run_appendix_a(const AppendixAPlan& plan) {
  RunResult r;
  const double smin = plan.sigma.sigma_min();
  const double smax = plan.sigma.sigma_max();
  const double a_star = alpha_star(smin, smax);
  const auto it = improved_alpha(plan.sigma, plan.theta, a_star, plan.tol);
  const auto bs = bs_rate_details(plan.sigma);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto ref = [&](double v) { return plan.appendix_case ? v : nan; };
  auto note = [&](double v, double obs) {
    return plan.appendix_case ? within_note(v, obs, 1e-3, "published value, tol 1e-3") : std::string("no published reference");
  };
  r.summary.push_back({"alpha_star", ref(kPublishedAlphaStar), a_star, note(kPublishedAlphaStar, a_star)});
  r.summary.push_back({"alpha_max", ref(kPublishedAlphaMax), it.alpha_max, note(kPublishedAlphaMax, it.alpha_max)});
  r.summary.push_back({"alpha_BS", ref(kPublishedAlphaBS), bs.report.rate, note(kPublishedAlphaBS, bs.report.rate)});
  const bool ordered = a_star < it.alpha_max && it.alpha_max < bs.report.rate;
  r.summary.push_back({"ordering", 1.0, ordered ? 1.0 : 0.0,
                       ordered ? "alpha_star < alpha_max < alpha_BS" : "ORDER VIOLATED"});
  std::ostringstream rates;
  rates << "rate,value,published,source\n" << std::setprecision(12);
  rates << "alpha_star," << a_star << ',' << num(ref(kPublishedAlphaStar)) << ",PerturbativeThm\n";
  rates << "alpha_max," << it.alpha_max << ',' << num(ref(kPublishedAlphaMax)) << ",ImprovedPoincare\n";
  rates << "alpha_BS," << bs.report.rate << ',' << num(ref(kPublishedAlphaBS)) << ",BernardSalvarani\n";
  r.artifacts.push_back({"rates.csv", rates.str()});
  r.artifacts.push_back({"iterates.csv", render([&](std::ostream& os) { write_iterate_table(os, it); })});
  r.artifacts.push_back({"roots.csv", render([&](std::ostream& os) { write_telegrapher_report(os, bs); })});
  return r;
}

inline RunResult run_modal(const ModalPlan& plan, bool plots) {
  RunResult r;
  const double mu = spectral_gap(plan.sigma).mu;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= plan.k_max; ++k) min_gap = std::min(min_gap, lyapunov_gap(k, plan.sigma, plan.eps));
  const double target = std::abs(plan.sigma - 2.0) <= 1e-12 ? 1.0 - *plan.eps : mu;
  r.summary.push_back({"min_lyapunov_gap", target, min_gap,
                       min_gap >= target - 1e-10 ? "ok: gap >= mu - 1e-10 for every k" : "BELOW: gap < mu - 1e-10"});
  r.summary.push_back({"spectral_gap", mu, mu, spectral_gap(plan.sigma).defective ? "defective" : "diagonalizable"});
  r.artifacts.push_back({"modal.csv", render([&](std::ostream& os) { write_modal_report(os, plan.sigma, plan.k_max, plan.eps); })});
  if (plots) r.artifacts.push_back({"eigenvalues.svg", eigenvalue_svg(plan.sigma, plan.k_max)});
  return r;
}

}  // namespace detail

/// Validates and runs one scenario in memory. summary.csv is always the last artifact.
inline RunResult run(const ExperimentConfig& c) {
  const RunPlan plan = validate(c);
  RunResult r = std::visit(
      [&](const auto& p) -> RunResult {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ConstantSigmaPlan>) return detail::run_constant_sigma(p, c.plots);
        else if constexpr (std::is_same_v<P, PiecewiseSigmaPlan>) return detail::run_piecewise_sigma(p, c.plots, c.threads);
        else if constexpr (std::is_same_v<P, ThreeVelocityPlan>) return detail::run_three_velocity(p, c.plots);
        else if constexpr (std::is_same_v<P, PoincarePlan>) return detail::run_poincare(p);
        else if constexpr (std::is_same_v<P, TelegrapherPlan>) return detail::run_telegrapher(p, c.plots);
        else if constexpr (std::is_same_v<P, AppendixAPlan>) return detail::run_appendix_a(p);
        else return detail::run_modal(p, c.plots);
      },
      plan);
  r.label = to_string(c.scenario);
  r.artifacts.push_back({"summary.csv", detail::summary_csv(r.summary)});
  return r;
}

/// The single collector: writes every artifact of one result into dir.
inline void write_artifacts(const RunResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& a : r.artifacts) {
    std::ofstream out(dir / a.name, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + (dir / a.name).string() + "'");
    out << a.content;
  }
}

/// Validates every config, runs them on the worker pool, then writes all
/// artifacts from the calling thread in config order.
inline std::vector<RunResult> run_batch(const std::vector<ExperimentConfig>& configs, unsigned threads = 0) {
  for (const auto& c : configs) validate(c);
  std::vector<RunResult> results(configs.size());
  parallel_for(configs.size(), threads, [&](std::size_t i) {
    ExperimentConfig c = configs[i];
    c.threads = 1;  // the batch already fans out
    results[i] = run(c);
  });
  for (std::size_t i = 0; i < configs.size(); ++i) write_artifacts(results[i], configs[i].output_dir);
  return results;
}

struct RateCurvePoint {
  double sigma;
  double mu;
  bool defective;  // the inserted σ = 2 point
};

/// μ(σ) on the grid; σ = 2 is dropped from the grid and re-inserted once as
/// the marked defective point.
inline std::vector<RateCurvePoint> rate_vs_sigma_curve(const std::vector<double>& sigma_grid) {
  std::vector<double> grid;
  for (const double s : sigma_grid) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("rate curve: σ values must be positive and finite");
    if (std::abs(s - 2.0) > 1e-12) grid.push_back(s);
  }
  std::sort(grid.begin(), grid.end());
  std::vector<RateCurvePoint> out;
  bool inserted = false;
  for (const double s : grid) {
    if (!inserted && s > 2.0) {
      out.push_back({2.0, 1.0, true});
      inserted = true;
    }
    out.push_back({s, sharp_mu(s), false});
  }
  if (!inserted) out.push_back({2.0, 1.0, true});
  return out;
}

struct RateCurveShape {
  bool increasing_below_two = true;
  bool decreasing_above_two = true;
  double max_sigma_mu_above_two = 0.0;  // σμ(σ) stays bounded (μ = O(1/σ))
};

inline RateCurveShape check_rate_curve(const std::vector<RateCurvePoint>& curve) {
  RateCurveShape s;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    if (b.sigma <= 2.0 && !(b.mu > a.mu)) s.increasing_below_two = false;
    if (a.sigma >= 2.0 && !(b.mu < a.mu)) s.decreasing_above_two = false;
  }
  for (const auto& p : curve) {
    if (p.sigma > 2.0) s.max_sigma_mu_above_two = std::max(s.max_sigma_mu_above_two, p.sigma * p.mu);
  }
  return s;
}

inline RunResult run_rate_curve(const std::vector<double>& sigma_grid, bool plots = true) {
  RunResult r;
  r.label = "rate-curve";
  const auto curve = rate_vs_sigma_curve(sigma_grid);
  std::ostringstream os;
  os << "sigma,mu,regime\n" << std::setprecision(12);
  PlotSeries below{"mu(sigma), sigma < 2", {}, {}};
  PlotSeries above{"mu(sigma), sigma > 2", {}, {}};
  PlotSeries mark{"sigma = 2 (defective)", {}, {}, SeriesStyle::Markers};
  for (const auto& p : curve) {
    os << p.sigma << ',' << p.mu << ',' << (p.defective ? "defective" : (p.sigma < 2.0 ? "underdamped" : "overdamped")) << '\n';
    auto& s = p.defective ? mark : (p.sigma < 2.0 ? below : above);
    s.x.push_back(p.sigma);
    s.y.push_back(p.mu);
  }
  const auto shape = check_rate_curve(curve);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.summary.push_back({"increasing_below_two", 1.0, shape.increasing_below_two ? 1.0 : 0.0, "mu = sigma/2 on (0,2)"});
  r.summary.push_back({"decreasing_above_two", 1.0, shape.decreasing_above_two ? 1.0 : 0.0, "mu decreasing on (2,inf)"});
  r.summary.push_back({"max_sigma_mu_above_two", nan, shape.max_sigma_mu_above_two, "bounded: mu = O(1/sigma)"});
  r.artifacts.push_back({"rate_curve.csv", os.str()});
  if (plots) {
    PlotSpec spec{"Sharp decay rate mu(sigma)", "sigma", "mu", false};
    r.artifacts.push_back({"rate_curve.svg", detail::render([&](std::ostream& o) { write_svg(o, spec, {below, above, mark}); })});
  }
  r.artifacts.push_back({"summary.csv", detail::summary_csv(r.summary)});
  return r;
}

/// Rate bundle for one profile: (θ(σ), 2μ) for constant σ, otherwise (θ*, α*)
/// and the 3-velocity pair.
inline RunResult run_rates(const RelaxationProfile& sigma, std::optional<double> eps) {
  RunResult r;
  r.label = "rates";
  std::vector<RateReport> rows;
  if (sigma.is_constant()) {
    rows.push_back(constant_rate(sigma.sigma_min(), eps));
  } else {
    rows.push_back(perturbative_rate(sigma.sigma_min(), sigma.sigma_max()));
  }
  rows.push_back(rate_3v(sigma.sigma_min(), sigma.sigma_max()));
  std::ostringstream os;
  write_rate_csv_header(os);
  for (const auto& row : rows) write_rate_csv_row(os, row);
  r.artifacts.push_back({"rates.csv", os.str()});
  for (const auto& row : rows) {
    r.summary.push_back({std::string("rate_") + to_string(row.source), row.rate, row.rate,
                         row.theta ? "theta = " + detail::num(*row.theta) : std::string()});
  }
  r.artifacts.push_back({"summary.csv", detail::summary_csv(r.summary)});
  return r;
}

inline void print_summary(std::ostream& os, const RunResult& r) {
  os << r.label << '\n';
  os << std::left << std::setw(26) << "quantity" << std::setw(20) << "theoretical" << std::setw(20) << "observed"
     << "note\n";
  for (const auto& row : r.summary) {
    os << std::left << std::setw(26) << row.quantity << std::setw(20) << detail::num(row.theoretical) << std::setw(20)
       << detail::num(row.observed) << row.note << '\n';
  }
}

}  // namespace gtlab
