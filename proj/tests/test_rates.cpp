// Unit tests for closed-form rates and the admissibility conditions.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "gtlab/rates.hpp"

using namespace gtlab;

namespace {

const double kAlphaStar14 = 4.0 - std::sqrt(12.0);

}  // namespace

TEST(ConstantRate, SigmaOne) {
  const auto r = constant_rate(1.0);
  EXPECT_DOUBLE_EQ(*r.theta, 1.0);
  EXPECT_DOUBLE_EQ(r.rate, 1.0);  // entropy rate 2μ with μ = 0.5
  EXPECT_NEAR(*r.prefactor, std::sqrt(3.0), 1e-15);
  EXPECT_EQ(r.source, RateSource::ConstantSharp);
}

TEST(ConstantRate, SigmaFiveMatchesSpectralGap) {
  const auto r = constant_rate(5.0);
  EXPECT_NEAR(r.rate / 2.0, (5.0 - std::sqrt(21.0)) / 2.0, 1e-15);
  EXPECT_NEAR(r.rate / 2.0, 0.20871, 1e-5);
  EXPECT_NEAR(*r.theta, 0.8, 1e-15);
  EXPECT_NEAR(*r.prefactor, std::sqrt(7.0 / 3.0), 1e-15);
}

TEST(ConstantRate, SigmaTwoNeedsEpsilon) {
  const auto r = constant_rate(2.0, 0.5);
  EXPECT_NEAR(*r.theta, 14.0 / 9.0, 1e-15);
  EXPECT_NEAR(r.rate, 1.0, 1e-15);
  EXPECT_NEAR(*r.prefactor, std::sqrt(2.0) / 0.5, 1e-15);
  EXPECT_EQ(r.source, RateSource::ConstantDefectiveEps);
  EXPECT_THROW(constant_rate(2.0), ValidationError);
  EXPECT_THROW(constant_rate(2.0, 1.0), ValidationError);
  EXPECT_THROW(constant_rate(2.0, 0.0), ValidationError);
  EXPECT_THROW(constant_rate(0.0), ValidationError);
  EXPECT_THROW(constant_rate(-1.0), ValidationError);
}

TEST(ThetaStar, Examples) {
  EXPECT_DOUBLE_EQ(theta_star(1.0, 4.0), 1.0);
  EXPECT_NEAR(theta_star(3.0, 3.0), 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(theta_star(0.5, 1.0), 0.5);
  EXPECT_THROW(theta_star(2.0, 1.0), ValidationError);
  EXPECT_THROW(theta_star(0.0, 1.0), ValidationError);
}

TEST(AlphaStar, Examples) {
  EXPECT_NEAR(alpha_star(1.0, 4.0), kAlphaStar14, 1e-14);
  EXPECT_NEAR(alpha_star(1.0, 4.0), 0.5359, 1e-4);
  EXPECT_NEAR(alpha_star(2.0, 4.0), kAlphaStar14, 1e-14);
  EXPECT_NEAR(alpha_star_branch_low(1.0, 4.0), alpha_star_branch_high(4.0), 1e-14);
  EXPECT_THROW(alpha_star(1.0, 1.0), ValidationError);
  EXPECT_THROW(alpha_star(0.0, 1.0), ValidationError);
}

TEST(AlphaStar, BranchContinuityOnCurve) {
  for (double smax = 2.0 + 1e-3; smax <= 10.0; smax += 0.01) {
    EXPECT_LT(std::abs(alpha_star_branch_low(4.0 / smax, smax) - alpha_star_branch_high(smax)), 1e-10) << smax;
  }
}

TEST(AlphaStar, LimitRecoversConstantCase) {
  const double d = 1e-6;
  for (const double s : {0.5, 1.0, 3.0, 5.0}) {
    EXPECT_NEAR(theta_star(s - d, s + d), std::min(s, 4.0 / s), 1e-4) << s;
    const double expect = s < 2.0 ? s : s - std::sqrt(s * s - 4.0);
    EXPECT_NEAR(alpha_star(s - d, s + d), expect, 1e-4) << s;
  }
}

TEST(AlphaStar, EqualsTwiceSharpRateAboveCurve) {
  for (const double smax : {2.5, 4.0, 7.0}) {
    const double smin = 4.0 / smax + 0.3;
    if (smin >= smax) continue;
    EXPECT_NEAR(alpha_star(smin, smax), 2.0 * sharp_mu(smax), 1e-13);
  }
}

TEST(GammaBounds, MaxAtThetaStarIsAlphaStar) {
  EXPECT_NEAR(gamma_bounds(1.0, 1.0, 4.0).gamma_max, kAlphaStar14, 1e-14);
}

TEST(GammaBounds, MaxBelowMinWhenThetaBelowSigmaMin) {
  for (const double th : {0.1, 0.5, 0.9, 1.0}) {
    const auto g = gamma_bounds(th, 1.0, 4.0);
    EXPECT_LE(g.gamma_max, g.gamma_min + 1e-14) << th;
  }
}

TEST(GammaBounds, DerivativeVanishesAtThetaOneForSigmaMaxFour) {
  auto gmax = [](double th) { return gamma_bounds(th, 1.0, 4.0).gamma_max; };
  const double h = 1e-5;
  const double fd = (gmax(1.0 + h) - gmax(1.0 - h)) / (2.0 * h);
  const double closed = (8.0 - 2.0 * 4.0 * 1.0) / std::pow(4.0 - 1.0, 1.5);
  EXPECT_NEAR(closed, 0.0, 1e-15);
  EXPECT_NEAR(fd, closed, 1e-8);
  const double th = 0.6;
  const double fd2 = (gmax(th + h) - gmax(th - h)) / (2.0 * h);
  EXPECT_NEAR(fd2, (8.0 - 8.0 * th) / std::pow(4.0 - th * th, 1.5), 1e-8);
}

TEST(GammaBounds, MaxOverThetaAttainedAtThetaStar) {
  for (const auto& [smin, smax] : {std::pair{1.0, 4.0}, std::pair{0.5, 3.0}, std::pair{1.5, 2.0}}) {
    const double ts = theta_star(smin, smax);
    const double at_star = gamma_bounds(ts, smin, smax).gamma_max;
    for (int i = 1; i <= 10000; ++i) {
      const double th = ts * i / 10000.0;
      ASSERT_LE(gamma_bounds(th, smin, smax).gamma_max, at_star + 1e-12) << th;
    }
  }
}

TEST(GammaBounds, RejectsThetaOutsideRange) {
  EXPECT_THROW(gamma_bounds(0.0, 1.0, 4.0), ValidationError);
  EXPECT_THROW(gamma_bounds(2.0, 1.0, 4.0), ValidationError);
}

TEST(Conditions2v, ThetaStarAlphaStarAdmissible) {
  const auto sigma = RelaxationProfile::two_piece(1.0, 4.0);
  const auto v = check_conditions_2v(1.0, kAlphaStar14, sigma);
  EXPECT_TRUE(v.ok()) << v.summary();
}

TEST(Conditions2v, AlphaEqualThetaFails) {
  const auto v = check_conditions_2v(1.0, 1.0, RelaxationProfile::constant(3.0));
  EXPECT_FALSE(v.ok());
  EXPECT_EQ(v.failures.front().condition, "I: alpha<theta");
}

TEST(Conditions2v, TwentyPercentAboveAlphaStarFails) {
  const auto sigma = RelaxationProfile::two_piece(1.0, 4.0);
  const auto v = check_conditions_2v(1.0, 0.99 * kAlphaStar14 * 1.2, sigma);
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.failures.back().condition, "II: sup parabola<=0");
  EXPECT_GT(v.failures.back().excess, 0.0);
}

TEST(Conditions2v, SampledProfileChecksEverySample) {
  const auto smp = RelaxationProfile::sampled(GridFunction::sample(64, [](double x) { return 2.5 + 1.5 * std::sin(x); }));
  const double th = theta_star(smp.sigma_min(), smp.sigma_max());
  EXPECT_TRUE(check_conditions_2v(th, alpha_star(smp.sigma_min(), smp.sigma_max()), smp).ok());
}

TEST(Rate3v, Examples) {
  const auto r = rate_3v(1.0, 1.0);
  EXPECT_NEAR(r.rate, 0.3, 1e-15);
  EXPECT_NEAR(*r.theta, std::sqrt(6.0) * 0.3, 1e-15);
  EXPECT_EQ(r.source, RateSource::ThreeVelocityCor);
  EXPECT_NEAR(rate_3v(1.0, 4.0).rate, 3.0 / 145.0, 1e-15);
}

TEST(Rate3v, AlwaysPassesConditions) {
  for (const auto& [smin, smax] : {std::pair{1.0, 1.0}, std::pair{1.0, 4.0}, std::pair{0.2, 0.3}, std::pair{2.0, 9.0},
                                   std::pair{0.05, 0.1}}) {
    const auto r = rate_3v(smin, smax);
    const auto sigma = smin == smax ? RelaxationProfile::constant(smin) : RelaxationProfile::two_piece(smin, smax);
    const auto v = check_conditions_3v(*r.theta, r.rate, sigma);
    EXPECT_TRUE(v.ok()) << smin << ' ' << smax << ": " << v.summary();
  }
}

TEST(Conditions3v, AlphaAboveScaledThetaFails) {
  const auto v = check_conditions_3v(0.3, 0.3, RelaxationProfile::constant(1.0));
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.failures.front().condition, "I: alpha<=sqrt(2/3)theta");
}

TEST(Conditions3v, DirectEvaluationAtAlphaZeroPointFourFive) {
  // 0.54·0.55²/3.8 + 0.54/18.6 = 0.0720 <= 0.6 - 0.45: both conditions hold.
  const double th = std::sqrt(6.0) * 0.3;
  EXPECT_TRUE(check_conditions_3v(th, 0.45, RelaxationProfile::constant(1.0)).ok());
  const auto v = check_conditions_3v(th, 0.55, RelaxationProfile::constant(1.0));
  ASSERT_FALSE(v.ok());
  EXPECT_EQ(v.failures.front().condition, "II: sup ratios<=sqrt(2/3)theta-alpha");
  EXPECT_NEAR(v.failures.front().excess, 0.54 * 0.45 * 0.45 / 3.4 + 0.54 / 17.4 - 0.05, 1e-12);
}

TEST(RateOutput, CsvRow) {
  std::ostringstream os;
  write_rate_csv_header(os);
  write_rate_csv_row(os, constant_rate(1.0));
  EXPECT_EQ(os.str(), "source,theta,rate,prefactor\nConstantSharp,1,1,1.73205080757\n");
}

TEST(DefaultTheta, ConstantAndVariable) {
  EXPECT_DOUBLE_EQ(default_theta(RelaxationProfile::constant(1.0)), 1.0);
  EXPECT_DOUBLE_EQ(default_theta(RelaxationProfile::two_piece(1.0, 4.0)), 1.0);
  EXPECT_NEAR(default_theta(RelaxationProfile::constant(5.0)), 0.8, 1e-15);
}

TEST(RelaxationParse, Kinds) {
  EXPECT_DOUBLE_EQ(parse_relaxation("const:5", 64).sigma_max(), 5.0);
  const auto pc = parse_relaxation("pc:1@pi,4@2pi", 64);
  EXPECT_EQ(pc.two_piece_values(), std::make_pair(1.0, 4.0));
  EXPECT_DOUBLE_EQ(pc(std::numbers::pi), 1.0);
  EXPECT_DOUBLE_EQ(pc(0.0), 4.0);
  EXPECT_DOUBLE_EQ(pc(std::numbers::pi + 1e-6), 4.0);
  const auto sn = parse_relaxation("sin:1,0.5", 64);
  EXPECT_NEAR(sn.sigma_max(), 1.5, 1e-12);
  EXPECT_THROW(parse_relaxation("pc:1@pi,4@3", 64), ValidationError);
  EXPECT_THROW(parse_relaxation("const:-1", 64), ValidationError);
  EXPECT_THROW(parse_relaxation("wave:1", 64), ValidationError);
  EXPECT_THROW(parse_relaxation("file:/nonexistent.csv", 64), ValidationError);
  EXPECT_THROW(sn.on_grid(32), ValidationError);
}

TEST(RelaxationParse, PositionForms) {
  const double pi = std::numbers::pi;
  EXPECT_DOUBLE_EQ(parse_position("pi"), pi);
  EXPECT_DOUBLE_EQ(parse_position("2pi"), 2.0 * pi);
  EXPECT_DOUBLE_EQ(parse_position("2*pi"), 2.0 * pi);
  EXPECT_DOUBLE_EQ(parse_position("0.5pi"), 0.5 * pi);
  EXPECT_DOUBLE_EQ(parse_position("pi/2"), pi / 2.0);
  EXPECT_DOUBLE_EQ(parse_position("1.25"), 1.25);
}
