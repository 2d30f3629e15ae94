// Unit tests for the experiment harness: config parsing and validation,
// scenario summaries, determinism, the rate curve and SVG output.

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gtlab/experiment.hpp"

using namespace gtlab;

namespace {

ExperimentConfig config(Scenario s, ParamMap params) {
  ExperimentConfig c;
  c.scenario = s;
  c.params = std::move(params);
  c.threads = 1;
  return c;
}

std::string validation_message(const ExperimentConfig& c) {
  try {
    validate(c);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

const std::string& artifact(const RunResult& r, const std::string& name) {
  for (const auto& a : r.artifacts) {
    if (a.name == name) return a.content;
  }
  throw std::runtime_error("missing artifact " + name);
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gtlab_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(ReadConfig, FlatKeyValueWithComments) {
  std::istringstream in(
      "# constant case\n"
      "scenario = constant-sigma\n"
      "sigma = const:5   ; inline comment\n"
      "n=128\n"
      "\n"
      "out = results/c5\n"
      "plots = false\n"
      "threads = 2\n");
  const auto c = read_config(in);
  EXPECT_EQ(c.scenario, Scenario::ConstantSigma);
  EXPECT_EQ(c.params.at("sigma"), "const:5");
  EXPECT_EQ(c.params.at("n"), "128");
  EXPECT_EQ(c.output_dir, std::filesystem::path("results/c5"));
  EXPECT_FALSE(c.plots);
  EXPECT_EQ(c.threads, 2u);
}

TEST(ReadConfig, Errors) {
  std::istringstream no_scenario("sigma = const:1\n");
  EXPECT_THROW(read_config(no_scenario), ValidationError);
  std::istringstream bad_line("scenario = modal-report\nsigma\n");
  try {
    read_config(bad_line, "cfg");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("cfg line 2"), std::string::npos);
  }
  std::istringstream section("[general]\nscenario = modal-report\n");
  EXPECT_THROW(read_config(section), ValidationError);
  std::istringstream unknown("scenario = nope\n");
  EXPECT_THROW(read_config(unknown), ValidationError);
  EXPECT_THROW(load_config("/nonexistent/gtlab.ini"), ValidationError);
}

TEST(ScenarioNames, RoundTrip) {
  for (const auto s : {Scenario::ConstantSigma, Scenario::PiecewiseSigma, Scenario::ThreeVelocity,
                       Scenario::PoincareTable, Scenario::TelegrapherTable, Scenario::AppendixAComparison,
                       Scenario::ModalReport}) {
    EXPECT_EQ(parse_scenario(to_string(s)), s);
  }
}

TEST(Validate, FieldLevelMessages) {
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"n", "7"}})).find("config field 'n'"), std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"t_final", "-1"}})).find("'t_final'"), std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"dt", "0.01"}})).find("'dt'"), std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"sigma", "pc:1@pi,4@2pi"}})).find("'sigma'"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"theta", "1"}})).find("not a parameter"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"scheme", "euler"}})).find("'scheme'"), std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"v0", "tri:1"}})).find("'v0'"), std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"eps", "1.5"}, {"sigma", "2"}})).find("'eps'"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::PiecewiseSigma, {{"alpha", "0.9"}})).find("not admissible"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ThreeVelocity, {{"alpha", "0.55"}, {"theta", "0.7348469228"}}))
                .find("II:"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::PoincareTable, {{"sigma", "sin:1,0.5"}})).find("'sigma'"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ModalReport, {{"sigma", "pc:1@pi,4@2pi"}})).find("'sigma'"),
            std::string::npos);
  EXPECT_NE(validation_message(config(Scenario::ConstantSigma, {{"fit_lo", "20"}, {"fit_hi", "10"}})).find("fit window"),
            std::string::npos);
}

TEST(Validate, DefaultsFollowTheRateModules) {
  const auto plan = std::get<PiecewiseSigmaPlan>(validate(config(Scenario::PiecewiseSigma, {})));
  EXPECT_DOUBLE_EQ(plan.theta, 1.0);
  EXPECT_DOUBLE_EQ(plan.alpha, alpha_star(1.0, 4.0));
  EXPECT_EQ(plan.trajectories, 20u);
  const auto three = std::get<ThreeVelocityPlan>(validate(config(Scenario::ThreeVelocity, {})));
  EXPECT_NEAR(three.alpha, 0.3, 1e-15);
  EXPECT_NEAR(three.theta, std::sqrt(6.0) * 0.3, 1e-15);
  const auto two = std::get<ConstantSigmaPlan>(validate(config(Scenario::ConstantSigma, {{"sigma", "2"}})));
  ASSERT_TRUE(two.eps.has_value());
  EXPECT_DOUBLE_EQ(*two.eps, 0.1);
}

TEST(Run, AppendixASummaryHasThreeOrderedRates) {
  const auto r = run(config(Scenario::AppendixAComparison, {}));
  ASSERT_NE(r.find("alpha_star"), nullptr);
  EXPECT_NEAR(r.find("alpha_star")->observed, 0.5359, 1e-4);
  EXPECT_NEAR(r.find("alpha_max")->observed, 0.7234, 1e-3);
  EXPECT_NEAR(r.find("alpha_BS")->observed, 0.86845, 1e-3);
  EXPECT_EQ(r.find("ordering")->observed, 1.0);
  EXPECT_EQ(r.artifacts.back().name, "summary.csv");
  EXPECT_EQ(artifact(r, "summary.csv").rfind("quantity,theoretical,observed,margin,note\n", 0), 0u);
}

TEST(Run, ConstantSigmaFiveMatchesSpectralGap) {
  const auto r = run(config(Scenario::ConstantSigma, {{"sigma", "const:5"}}));
  const double gap = (5.0 - std::sqrt(21.0)) / 2.0;
  EXPECT_NEAR(r.find("modal_gap")->observed, gap, 1e-12);
  EXPECT_NEAR(r.find("l2_rate")->observed, gap, 0.02 * gap);
  EXPECT_NE(artifact(r, "eigenvalues.svg").find("<circle"), std::string::npos);
}

TEST(Run, ConstantSigmaTwoFitsDefectiveEnvelope) {
  const auto r = run(config(Scenario::ConstantSigma, {{"sigma", "const:2"}, {"eps", "0.1"}}));
  EXPECT_GE(r.find("l2_rate_pure_exp")->observed, 0.9 - 0.02);
  EXPECT_NEAR(r.find("l2_rate_envelope")->observed, 1.0, 0.02);
}

TEST(Run, ModalReportGapBound) {
  const auto r = run(config(Scenario::ModalReport, {{"sigma", "3"}, {"k_max", "10"}}));
  EXPECT_GE(r.find("min_lyapunov_gap")->observed, r.find("min_lyapunov_gap")->theoretical - 1e-10);
  const std::string& csv = artifact(r, "modal.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Run, PiecewiseDeterministicAcrossThreadCounts) {
  auto c = config(Scenario::PiecewiseSigma, {{"n", "64"}, {"t_final", "6"}, {"trajectories", "4"}});
  c.plots = false;
  const auto a = run(c);
  c.threads = 3;
  const auto b = run(c);
  ASSERT_EQ(a.artifacts.size(), b.artifacts.size());
  for (std::size_t i = 0; i < a.artifacts.size(); ++i) {
    EXPECT_EQ(a.artifacts[i].name, b.artifacts[i].name);
    EXPECT_EQ(a.artifacts[i].content, b.artifacts[i].content) << a.artifacts[i].name;
  }
}

TEST(Run, PiecewiseWithExplicitInitialData) {
  auto c = config(Scenario::PiecewiseSigma,
                  {{"sigma", "sin:1,0.5"}, {"n", "64"}, {"t_final", "4"}, {"u0", "cos:1"}, {"v0", "sin:2"}});
  c.plots = false;
  const auto plan = std::get<PiecewiseSigmaPlan>(validate(c));
  EXPECT_EQ(plan.trajectories, 1u);
  const auto r = run(c);
  EXPECT_LE(r.find("max_entropy_increase")->observed, 1e-8);
}

TEST(RunBatch, CollectorWritesByteIdenticalFiles) {
  const auto d1 = fresh_dir("batch1");
  const auto d2 = fresh_dir("batch2");
  auto a = config(Scenario::ModalReport, {{"sigma", "5"}, {"k_max", "5"}});
  auto b = config(Scenario::TelegrapherTable, {{"seeds", "40"}});
  a.output_dir = d1 / "modal";
  b.output_dir = d1 / "tele";
  run_batch({a, b}, 2);
  a.output_dir = d2 / "modal";
  b.output_dir = d2 / "tele";
  run_batch({a, b}, 1);
  for (const auto* sub : {"modal", "tele"}) {
    for (const auto& entry : std::filesystem::directory_iterator(d1 / sub)) {
      std::ifstream x(entry.path(), std::ios::binary);
      std::ifstream y(d2 / sub / entry.path().filename(), std::ios::binary);
      std::stringstream sx;
      std::stringstream sy;
      sx << x.rdbuf();
      sy << y.rdbuf();
      EXPECT_FALSE(sx.str().empty());
      EXPECT_EQ(sx.str(), sy.str()) << entry.path();
    }
  }
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(RunBatch, ValidatesEverythingBeforeRunning) {
  const auto d = fresh_dir("batch_invalid");
  auto good = config(Scenario::ModalReport, {});
  good.output_dir = d / "good";
  auto bad = config(Scenario::ModalReport, {{"k_max", "0"}});
  bad.output_dir = d / "bad";
  EXPECT_THROW(run_batch({good, bad}), ValidationError);
  EXPECT_FALSE(std::filesystem::exists(d / "good"));
}

TEST(ParallelFor, VisitsEveryIndexOnceAndRethrowsLowestError) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 7 || i == 4) throw NumericalError("index " + std::to_string(i));
    });
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_STREQ(e.what(), "index 4");
  }
}

TEST(RateCurve, ExamplesAndShape) {
  const auto curve = rate_vs_sigma_curve({1.0, 2.5, 10.0, 0.5, 2.0, 3.0});
  ASSERT_EQ(curve.size(), 6u);
  EXPECT_DOUBLE_EQ(curve[0].sigma, 0.5);
  EXPECT_DOUBLE_EQ(curve[1].mu, 0.5);
  EXPECT_TRUE(curve[2].defective);
  EXPECT_DOUBLE_EQ(curve[2].sigma, 2.0);
  EXPECT_NEAR(curve[3].mu, 0.5, 1e-15);
  EXPECT_NEAR(curve[5].mu, 5.0 - std::sqrt(24.0), 1e-15);
  const auto shape = check_rate_curve(curve);
  EXPECT_TRUE(shape.increasing_below_two);
  EXPECT_TRUE(shape.decreasing_above_two);
  std::vector<double> grid;
  for (int i = 1; i <= 400; ++i) grid.push_back(0.05 * i);
  const auto fine = check_rate_curve(rate_vs_sigma_curve(grid));
  EXPECT_TRUE(fine.increasing_below_two);
  EXPECT_TRUE(fine.decreasing_above_two);
  EXPECT_LT(fine.max_sigma_mu_above_two, 2.0);
  EXPECT_THROW(rate_vs_sigma_curve({-1.0}), ValidationError);
}

TEST(RunRates, ConstantAndPiecewise) {
  const auto c = run_rates(RelaxationProfile::constant(1.0), std::nullopt);
  EXPECT_EQ(artifact(c, "rates.csv").rfind("source,theta,rate,prefactor\nConstantSharp,1,1,", 0), 0u);
  const auto p = run_rates(RelaxationProfile::two_piece(1.0, 4.0), std::nullopt);
  EXPECT_NEAR(p.summary.front().observed, alpha_star(1.0, 4.0), 1e-15);
}

TEST(SvgPlot, WellFormedAndDeterministic) {
  PlotSeries s{"decay", {0.0, 1.0, 2.0, 3.0}, {1.0, 0.1, 0.0, 0.001}};
  PlotSpec spec{"a < b & c", "t", "E", true};
  std::ostringstream a;
  std::ostringstream b;
  write_svg(a, spec, {s});
  write_svg(b, spec, {s});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().rfind("<svg", 0), 0u);
  EXPECT_NE(a.str().find("</svg>"), std::string::npos);
  EXPECT_NE(a.str().find("a &lt; b &amp; c"), std::string::npos);
  // The zero is dropped on the log axis, which breaks the line into two pieces.
  const std::string svg = a.str();
  const auto path_start = svg.find("<path d=\"");
  ASSERT_NE(path_start, std::string::npos);
  const std::string path = svg.substr(path_start, svg.find('"', path_start + 9) - path_start);
  EXPECT_EQ(std::count(path.begin(), path.end(), 'M'), 2);
  EXPECT_THROW(write_svg(a, spec, {PlotSeries{"bad", {1.0}, {1.0, 2.0}}}), ValidationError);
}
