// Unit tests for the two-piece weighted Poincaré constant and the improved
// rate iteration.

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gtlab/poincare.hpp"
#include "gtlab/rates.hpp"

using namespace gtlab;

namespace {

const double kAlpha0 = 2.0 * (2.0 - std::sqrt(3.0));

RelaxationProfile sigma14() { return RelaxationProfile::two_piece(1.0, 4.0); }

// Independent oracle: min over mean-zero u of ∫u'² / ∫ω u² by a periodic
// second-order finite-difference generalized eigenproblem, with the
// constraint ∫u = 0 imposed by projecting out constants.
double fd_c_min(const TwoPieceWeight& w, int n) {
  const double h = kTwoPi / n;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) {
    k(j, j) = 2.0 / (h * h);
    k(j, (j + 1) % n) = -1.0 / (h * h);
    k(j, (j + n - 1) % n) = -1.0 / (h * h);
    const double x = (j + 0.5) * h;
    m(j) = x <= std::numbers::pi ? w.w1 : w.w2;
  }
  // Basis of the mean-zero subspace: orthonormal complement of the constants.
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(n, n);
  q.col(0).setConstant(1.0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
  const Eigen::MatrixXd full_q = qr.householderQ();
  const Eigen::MatrixXd z = full_q.rightCols(n - 1);
  const Eigen::MatrixXd a = z.transpose() * k * z;
  const Eigen::MatrixXd b = z.transpose() * m.asDiagonal() * z;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, b);
  return es.eigenvalues()(0);
}

}  // namespace

TEST(DetMLambda, UniformWeightVanishesAtOne) {
  EXPECT_LT(std::abs(det_M_lambda(1.0, {1.0, 1.0})), 1e-12);
  EXPECT_GT(std::abs(det_M_lambda(0.5, {1.0, 1.0})), 1.0);
  EXPECT_THROW(det_M_lambda(0.0, {1.0, 1.0}), ValidationError);
  EXPECT_THROW(det_M_lambda(1.0, {0.0, 1.0}), ValidationError);
}

TEST(DetMLambda, SignChangesAcrossSimpleRoot) {
  const TwoPieceWeight w{1.0 - kAlpha0, 12.0 / (7.0 - kAlpha0)};
  const double r = weighted_poincare(w).c_min;
  EXPECT_LT(det_M_lambda(r - 1e-3, w) * det_M_lambda(r + 1e-3, w), 0.0);
}

TEST(WeightedPoincare, UniformWeightGivesClassicalConstant) {
  const auto r = weighted_poincare({1.0, 1.0});
  EXPECT_NEAR(r.c_min, 1.0, 1e-9);
  EXPECT_NEAR(r.c_omega_sq, 1.0, 1e-9);
  for (const double w : {0.5, 2.0}) {
    const auto s = weighted_poincare({w, w});
    EXPECT_NEAR(s.c_min * w, 1.0, 1e-9) << w;
  }
}

TEST(WeightedPoincare, ScalingLaw) {
  const TwoPieceWeight w{0.7, 2.3};
  const auto a = weighted_poincare(w);
  const auto b = weighted_poincare({2.0 * w.w1, 2.0 * w.w2});
  EXPECT_NEAR(b.c_min, a.c_min / 2.0, 1e-10);
}

TEST(WeightedPoincare, AppendixWeightAtAlphaZero) {
  // Frozen from this implementation: first root 0.7969697384, C² = 1.2547527865.
  // The finite-difference oracle agrees; see the acceptance report for the
  // comparison with the published 1.12013.
  const auto w = weight_from_sigma(sigma14(), 1.0, kAlpha0);
  EXPECT_NEAR(w.w1, 1.0 - kAlpha0, 1e-15);
  EXPECT_NEAR(w.w2, 12.0 / (7.0 - kAlpha0), 1e-14);
  const auto r = weighted_poincare(w);
  EXPECT_NEAR(r.c_min, 0.7969697384, 1e-9);
  EXPECT_NEAR(r.c_omega_sq, 1.2547527865, 1e-9);
  EXPECT_FALSE(r.close_root);
  ASSERT_GE(r.roots_scanned.size(), 2u);
  EXPECT_NEAR(r.roots_scanned[1], 0.843837, 1e-6);
  EXPECT_NEAR(fd_c_min(w, 400), r.c_min, 2e-4);
}

TEST(WeightedPoincare, FiniteDifferenceOracleOnSeveralWeights) {
  for (const auto& w : {TwoPieceWeight{0.5, 3.0}, TwoPieceWeight{2.0, 0.3}, TwoPieceWeight{1.0, 1.5}}) {
    EXPECT_NEAR(fd_c_min(w, 400), weighted_poincare(w).c_min, 5e-4 * weighted_poincare(w).c_min) << w.w1 << ',' << w.w2;
  }
}

TEST(WeightedPoincare, FootnoteBoundAndOrderedRoots) {
  for (const auto& w : {TwoPieceWeight{0.5, 3.0}, TwoPieceWeight{2.0, 0.3}, TwoPieceWeight{0.1, 20.0},
                        TwoPieceWeight{1.0, 1.0}, TwoPieceWeight{4.0, 4.5}}) {
    const auto r = weighted_poincare(w);
    EXPECT_LE(r.c_omega_sq, w.sup() + 1e-9);
    EXPECT_TRUE(std::is_sorted(r.roots_scanned.begin(), r.roots_scanned.end()));
    EXPECT_EQ(r.c_min, r.roots_scanned.front());
  }
}

TEST(WeightedPoincare, NoRootInRangeThrows) {
  EXPECT_THROW(weighted_poincare({1.0, 1.0}, 0.5), NumericalError);
}

TEST(WeightFromSigma, Examples) {
  const auto a = weight_from_sigma(sigma14(), 1.0, 0.3);
  EXPECT_NEAR(a.w1, 0.7, 1e-15);
  const auto b = weight_from_sigma(sigma14(), 1.0, 0.0);
  EXPECT_NEAR(b.w1, 1.0, 1e-15);
  EXPECT_NEAR(b.w2, 16.0 / 7.0, 1e-15);
  EXPECT_THROW(weight_from_sigma(sigma14(), 1.0, 1.0), ValidationError);
  EXPECT_THROW(weight_from_sigma(RelaxationProfile::piecewise({{1.0, 1.0}, {3.0, 2.0}, {kTwoPi, 3.0}}), 1.0, 0.1),
               ValidationError);
}

TEST(ImprovedAlpha, ConvergesToAppendixValue) {
  const auto r = improved_alpha(sigma14(), 1.0, kAlpha0);
  EXPECT_TRUE(r.converged);
  EXPECT_FALSE(r.stopped_inadmissible);
  EXPECT_LT(r.iterates.size(), 100u);
  EXPECT_NEAR(r.alpha_max, 0.7234, 1e-3);
  EXPECT_NEAR(r.alpha_max, 0.72340896, 1e-7);  // frozen
  EXPECT_GE(r.alpha_max, alpha_star(1.0, 4.0));
  for (std::size_t i = 1; i < r.iterates.size(); ++i) EXPECT_GT(r.iterates[i], r.iterates[i - 1]);
}

TEST(ImprovedAlpha, FixedPointResidual) {
  const double tol = 1e-6;
  const auto r = improved_alpha(sigma14(), 1.0, kAlpha0, tol);
  const double c_sq = weighted_poincare(weight_from_sigma(sigma14(), 1.0, r.alpha_max)).c_omega_sq;
  EXPECT_LT(std::abs(r.alpha_max - improved_bound(1.0, c_sq)), 2.0 * tol);
}

TEST(ImprovedAlpha, UpdateRuleWithPublishedConstant) {
  EXPECT_NEAR(improved_bound(1.0, 1.12013), 0.71997, 1e-5);
  const auto r = improved_alpha(sigma14(), 1.0, kAlpha0);
  ASSERT_GE(r.iterates.size(), 2u);
  EXPECT_NEAR(r.iterates[1], improved_bound(1.0, r.c_omega_sq[0]), 1e-15);
}

TEST(ImprovedAlpha, InadmissibleStartRejected) {
  EXPECT_THROW(improved_alpha(sigma14(), 1.0, 0.9), ValidationError);
  EXPECT_THROW(improved_alpha(sigma14(), 1.0, 0.0), ValidationError);
}

TEST(PoincareReport, Csv) {
  std::ostringstream os;
  write_poincare_report(os, {1.0, 1.0}, weighted_poincare({1.0, 1.0}));
  EXPECT_EQ(os.str(), "w1,w2,c_min,C_omega_sq,close_root\n1,1,1,1,0\n");
}
