// gtlab: command-line front end for the Goldstein-Taylor experiments.
// Exit codes: 0 success, 2 validation failure, 3 numerical failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gtlab/experiment.hpp"

namespace {

using gtlab::ExperimentConfig;
using gtlab::ParamMap;
using gtlab::Scenario;

struct Common {
  std::string config;
  std::string out;
  bool no_plots = false;
  unsigned threads = 0;
  bool threads_set = false;
};

struct Command {
  CLI::App* app = nullptr;
  std::optional<Scenario> scenario;  // fixed scenario, or chosen after parsing
  ParamMap params;
  Common common;
};

void add_param(Command& c, const std::string& flag, const std::string& key, const std::string& help) {
  c.app->add_option_function<std::string>(
      flag, [&c, key](const std::string& v) { c.params[key] = v; }, help);
}

void add_common(Command& c, bool with_config = true) {
  if (with_config) c.app->add_option("--config", c.common.config, "Flat key = value config file; flags override it");
  c.app->add_option("--out", c.common.out, "Output directory");
  c.app->add_flag("--no-plots", c.common.no_plots, "Skip SVG output");
  c.app->add_option_function<unsigned>(
      "--threads", [&c](unsigned t) { c.common.threads = t; c.common.threads_set = true; },
      "Worker threads (0: hardware concurrency)");
}

void add_simulation_params(Command& c) {
  add_param(c, "--sigma", "sigma", "Relaxation profile: const:5 | pc:1@pi,4@2pi | sin:1,0.5 | file:path.csv");
  add_param(c, "--n", "n", "Grid points (even, >= 8)");
  add_param(c, "--dt", "dt", "Time step (0: dx; split needs an integer multiple of dx)");
  add_param(c, "--t-final", "t_final", "Final time");
  add_param(c, "--scheme", "scheme", "split | rk4");
  add_param(c, "--seed", "seed", "Seed for random initial data");
  add_param(c, "--fit-lo", "fit_lo", "Fit window start (default 0.25 T)");
  add_param(c, "--fit-hi", "fit_hi", "Fit window end (default 0.9 T)");
}

ExperimentConfig build_config(const Command& c, Scenario scenario, const std::string& default_out) {
  ExperimentConfig cfg;
  if (!c.common.config.empty()) {
    cfg = gtlab::load_config(c.common.config);
    if (cfg.scenario != scenario) {
      throw gtlab::ValidationError("config field 'scenario': '" + std::string(gtlab::to_string(cfg.scenario)) +
                                   "' does not match subcommand " + c.app->get_name() + " (expects " +
                                   gtlab::to_string(scenario) + ")");
    }
  } else {
    cfg.scenario = scenario;
    cfg.output_dir = default_out;
  }
  for (const auto& [k, v] : c.params) cfg.params[k] = v;
  if (!c.common.out.empty()) cfg.output_dir = c.common.out;
  if (c.common.no_plots) cfg.plots = false;
  if (c.common.threads_set) cfg.threads = c.common.threads;
  return cfg;
}

// simulate-2v runs the constant-sigma scenario for constant profiles and the
// piecewise-sigma scenario otherwise.
Scenario pick_2v_scenario(const Command& c) {
  if (!c.common.config.empty()) {
    const auto s = gtlab::load_config(c.common.config).scenario;
    if (s == Scenario::ConstantSigma || s == Scenario::PiecewiseSigma) return s;
    throw gtlab::ValidationError("config field 'scenario': simulate-2v runs constant-sigma or piecewise-sigma, not " +
                                 std::string(gtlab::to_string(s)));
  }
  const auto it = c.params.find("sigma");
  if (it == c.params.end()) return Scenario::ConstantSigma;
  const std::string& spec = it->second;
  if (spec.find(':') == std::string::npos) return Scenario::ConstantSigma;
  std::size_t n = 256;
  if (const auto nit = c.params.find("n"); nit != c.params.end()) {
    const double v = gtlab::detail::parse_number(nit->second, "--n");
    if (v >= 8 && v == static_cast<double>(static_cast<std::size_t>(v))) n = static_cast<std::size_t>(v);
  }
  try {
    return gtlab::parse_relaxation(spec, n).is_constant() ? Scenario::ConstantSigma : Scenario::PiecewiseSigma;
  } catch (const gtlab::ValidationError& e) {
    throw gtlab::ValidationError(std::string("config field 'sigma': ") + e.what());
  }
}

void finish(const gtlab::RunResult& r, const std::filesystem::path& dir) {
  gtlab::write_artifacts(r, dir);
  gtlab::print_summary(std::cout, r);
  std::cout << "wrote " << r.artifacts.size() << " files to " << dir.string() << '\n';
}

std::vector<double> linear_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2) {
    throw gtlab::ValidationError("rate-curve: need 0 < sigma-min < sigma-max and points >= 2");
  }
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goldstein-Taylor hypocoercivity experiments"};
  app.require_subcommand(1);

  Command sim2, sim3, rates, modal, poincare, tele, appx, curve, batch;

  sim2.app = app.add_subcommand("simulate-2v", "Simulate the 2-velocity system and fit decay rates");
  add_simulation_params(sim2);
  add_param(sim2, "--theta", "theta", "Twist θ (non-constant σ; default θ*)");
  add_param(sim2, "--alpha", "alpha", "Rate α checked against the fit (non-constant σ; default α*)");
  add_param(sim2, "--eps", "eps", "ε for σ = 2 (constant σ)");
  add_param(sim2, "--u0", "u0", "Initial u: zero | const:c | cos:k[,a] | sin:k[,a] | random | file:path.csv");
  add_param(sim2, "--v0", "v0", "Initial v (same forms as --u0)");
  add_param(sim2, "--trajectories", "trajectories", "Number of seeded random trajectories (non-constant σ)");
  add_param(sim2, "--k-max", "k_max", "Modes in the eigenvalue table (constant σ)");
  add_common(sim2);

  sim3.app = app.add_subcommand("simulate-3v", "Simulate the 3-velocity system and fit the entropy decay");
  sim3.scenario = Scenario::ThreeVelocity;
  add_simulation_params(sim3);
  add_param(sim3, "--theta", "theta", "Twist θ (default √6 α)");
  add_param(sim3, "--alpha", "alpha", "Rate α (default from the explicit 3-velocity choice)");
  add_common(sim3);

  rates.app = app.add_subcommand("rates", "Tabulate theoretical rates for a profile");
  std::string rates_sigma = "const:1";
  std::string rates_n = "256";
  std::optional<double> rates_eps;
  rates.app->add_option("--sigma", rates_sigma, "Relaxation profile");
  rates.app->add_option("--n", rates_n, "Grid points for sampled profiles");
  rates.app->add_option("--eps", rates_eps, "ε for σ = 2");
  add_common(rates, false);

  modal.app = app.add_subcommand("modal-report", "Modal eigenvalues, twist matrices and Lyapunov gaps");
  modal.scenario = Scenario::ModalReport;
  add_param(modal, "--sigma", "sigma", "Constant σ (e.g. const:5 or 5)");
  add_param(modal, "--k-max", "k_max", "Largest mode");
  add_param(modal, "--eps", "eps", "ε for σ = 2");
  add_common(modal);

  poincare.app = app.add_subcommand("poincare", "Weighted Poincaré constant and the improved rate iteration");
  poincare.scenario = Scenario::PoincareTable;
  add_param(poincare, "--sigma", "sigma", "Two-piece profile (breakpoint π)");
  add_param(poincare, "--theta", "theta", "Twist θ (default 1)");
  add_param(poincare, "--alpha", "alpha", "Starting rate α0 (default α*)");
  add_param(poincare, "--tol", "tol", "Iteration tolerance");
  add_common(poincare);

  tele.app = app.add_subcommand("telegrapher", "Telegrapher spectral gap and the rate α_BS");
  tele.scenario = Scenario::TelegrapherTable;
  add_param(tele, "--sigma", "sigma", "Two-piece profile (breakpoint π)");
  add_param(tele, "--seeds", "seeds", "Newton seeds per axis");
  add_common(tele);

  appx.app = app.add_subcommand("appendix-a", "Compare α*, α_max and α_BS for a two-piece profile");
  appx.scenario = Scenario::AppendixAComparison;
  add_param(appx, "--sigma", "sigma", "Two-piece profile (breakpoint π)");
  add_param(appx, "--theta", "theta", "Twist θ for the iteration (default 1)");
  add_param(appx, "--tol", "tol", "Iteration tolerance");
  add_common(appx);

  curve.app = app.add_subcommand("rate-curve", "Sharp rate μ(σ) against σ");
  double sigma_min = 0.05;
  double sigma_max = 10.0;
  int points = 200;
  curve.app->add_option("--sigma-min", sigma_min, "Smallest σ");
  curve.app->add_option("--sigma-max", sigma_max, "Largest σ");
  curve.app->add_option("--points", points, "Grid points");
  add_common(curve, false);

  batch.app = app.add_subcommand("run", "Run one or more config files as a batch on the worker pool");
  std::vector<std::string> configs;
  batch.app->add_option("configs", configs, "Config files")->required();
  batch.app->add_option_function<unsigned>(
      "--threads", [&batch](unsigned t) { batch.common.threads = t; batch.common.threads_set = true; },
      "Worker threads (0: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim2.app->parsed()) {
      const Scenario s = pick_2v_scenario(sim2);
      const auto cfg = build_config(sim2, s, "out/simulate-2v");
      finish(gtlab::run(cfg), cfg.output_dir);
    } else if (rates.app->parsed()) {
      const double n = gtlab::detail::parse_number(rates_n, "--n");
      const auto profile = gtlab::parse_relaxation(rates_sigma.find(':') == std::string::npos ? "const:" + rates_sigma : rates_sigma,
                                                   static_cast<std::size_t>(n));
      const std::filesystem::path dir = rates.common.out.empty() ? "out/rates" : rates.common.out;
      finish(gtlab::run_rates(profile, rates_eps), dir);
    } else if (curve.app->parsed()) {
      const std::filesystem::path dir = curve.common.out.empty() ? "out/rate-curve" : curve.common.out;
      finish(gtlab::run_rate_curve(linear_grid(sigma_min, sigma_max, points), !curve.common.no_plots), dir);
    } else if (batch.app->parsed()) {
      std::vector<ExperimentConfig> cfgs;
      for (const auto& path : configs) cfgs.push_back(gtlab::load_config(path));
      const auto results = gtlab::run_batch(cfgs, batch.common.threads_set ? batch.common.threads : 0);
      for (std::size_t i = 0; i < results.size(); ++i) {
        gtlab::print_summary(std::cout, results[i]);
        std::cout << "wrote " << results[i].artifacts.size() << " files to " << cfgs[i].output_dir.string() << "\n\n";
      }
    } else {
      for (Command* c : {&sim3, &modal, &poincare, &tele, &appx}) {
        if (!c->app->parsed()) continue;
        const auto cfg = build_config(*c, *c->scenario, "out/" + c->app->get_name());
        finish(gtlab::run(cfg), cfg.output_dir);
      }
    }
  } catch (const gtlab::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gtlab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
