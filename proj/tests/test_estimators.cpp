#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "sphfield/errors.hpp"
#include "sphfield/estimators.hpp"
#include "test_support.hpp"

using namespace sphfield;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(AnalyzeField, ZeroAndConstant) {
  const auto g = build_grid(4);
  const auto zero = analyze_field({g, MatrixXd::Zero(static_cast<Eigen::Index>(g.size()), 3)}, 4);
  EXPECT_EQ(zero.vectors.cwiseAbs().maxCoeff(), 0.0);
  const Eigen::RowVector3d u(1.0, -2.0, 0.5);
  MatrixXd values = (0.28209479177387814 * u).replicate(static_cast<Eigen::Index>(g.size()), 1);
  const auto c = analyze_field({g, values}, 4);
  EXPECT_LE((c(0, 0) - u).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_LE(c.vectors.bottomRows(c.vectors.rows() - 1).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_THROW(analyze_field({g, values}, 5), std::invalid_argument);
}

TEST(AnalyzeField, RoundTripRandom) {
  auto c = CoefficientSet::zeros(8, 3);
  c.vectors = testsupport::random_matrix(81, 3);
  const auto back = analyze_field(synthesize_field(c, build_grid(8)), 8);
  EXPECT_LE((back.vectors - c.vectors).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SamplePowerSpectrum, AllEqualVectors) {
  auto c = CoefficientSet::zeros(3, 2);
  for (int m = -2; m <= 2; ++m) c(2, m) << 1.0, 0.0;
  const auto f = sample_power_spectrum(c, 2);
  EXPECT_EQ(f.dof, 5);
  MatrixXd e11 = MatrixXd::Zero(2, 2);
  e11(0, 0) = 1.0;
  EXPECT_LE((f.op.entries() - e11).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(sample_power_spectrum(c, 4), std::out_of_range);
  EXPECT_THROW(reduced_estimator(c, -1), std::out_of_range);
}

TEST(SamplePowerSpectrum, ScalarCase) {
  auto c = CoefficientSet::zeros(3, 1);
  c.vectors = testsupport::random_matrix(16, 1);
  double acc = 0.0;
  for (int m = -3; m <= 3; ++m) acc += c(3, m)(0) * c(3, m)(0);
  EXPECT_NEAR(sample_power_spectrum(c, 3).op.entries()(0, 0), acc / 7.0, 1e-15);
}

// property: F_hat PSD, rank <= min(d, 2l+1), trace = C_hat
TEST(SamplePowerSpectrum, StructuralInvariants) {
  const auto m = make_powerlaw_model(6, 5, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 2});
  for (std::uint32_t r = 0; r < 50; ++r) {
    const auto c = draw_coefficients(m, 9, r);
    for (int l = 0; l <= 6; ++l) {
      const auto f = sample_power_spectrum(c, l);
      EXPECT_TRUE(f.op.self_adjoint());
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(f.op.entries());
      EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-14);
      const int rank = static_cast<int>((eig.eigenvalues().array() > 1e-12 * eig.eigenvalues().maxCoeff()).count());
      EXPECT_LE(rank, std::min(5, 2 * l + 1));
      EXPECT_NEAR(reduced_estimator(c, l), trace(f.op), 1e-12);
    }
  }
  EXPECT_EQ(reduced_estimator(CoefficientSet::zeros(2, 2), 1), 0.0);
}

TEST(SamplePowerSpectrum, Unbiased) {
  const auto m = make_powerlaw_model(4, 3, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 6});
  const int ell = 3, R = 5000;
  std::vector<std::vector<double>> entries(9);
  for (std::uint32_t r = 0; r < R; ++r) {
    const MatrixXd f = sample_power_spectrum_entries(draw_degree(m, 4, r, ell));
    for (int k = 0; k < 9; ++k) entries[k].push_back(f(k / 3, k % 3));
  }
  const MatrixXd truth = power_spectrum_operator(m, ell).entries();
  for (int k = 0; k < 9; ++k) {
    const auto s = testsupport::mean_se(entries[k]);
    EXPECT_NEAR(s.mean, truth(k / 3, k % 3), 4 * s.se) << k;
  }
}

TEST(SamplePowerSpectrum, DirectAndGridPathsAgree) {
  const auto m = make_powerlaw_model(10, 3, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 6});
  const auto c = draw_coefficients(m, 4, 0);
  const auto via_grid = analyze_field(synthesize_field(c, build_grid(10)), 10);
  for (int l = 0; l <= 10; ++l) {
    EXPECT_LE((sample_power_spectrum(c, l).op.entries() - sample_power_spectrum(via_grid, l).op.entries())
                  .cwiseAbs()
                  .maxCoeff(),
              1e-9);
  }
}

TEST(ReducedEstimator, VarianceAtMonopole) {
  MatrixXd lambda(1, 1);
  lambda << 2.0;
  const auto m = SpectralModel::from_table(lambda, {});
  std::vector<double> c, c2;
  for (std::uint32_t r = 0; r < 20000; ++r) c.push_back(reduced_estimator(draw_coefficients(m, 3, r), 0));
  const auto s = testsupport::mean_se(c);
  for (double v : c) c2.push_back((v - 2.0) * (v - 2.0));
  const auto v = testsupport::mean_se(c2);
  EXPECT_NEAR(s.mean, 2.0, 4 * s.se);
  EXPECT_NEAR(v.mean, 8.0, 4 * v.se);
}

TEST(NormalizedStatistic, ExactTruthGivesZero) {
  // a_{l,m} rows chosen so that sum_m a a^T / (2l+1) = F_l exactly:
  // sqrt(lambda_j (2l+1)) e_j on the first d orders, zero elsewhere
  const auto m = make_powerlaw_model(3, 2, 1.0, 3.0, 2.0);
  auto c = CoefficientSet::zeros(3, 2);
  const int ell = 3;
  for (int j = 1; j <= 2; ++j) {
    c(ell, -ell + j - 1) = std::sqrt(m.lambda(j, ell) * (2 * ell + 1)) * m.frame(ell).col(j - 1).transpose();
  }
  const auto s = normalized_statistic(c, m, ell);
  EXPECT_LE(s.operator_stat.entries().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(s.scalar_stat, 0.0, 1e-14);
}

TEST(NormalizedStatistic, DegenerateDegree) {
  MatrixXd lambda = MatrixXd::Ones(3, 2);
  lambda.row(1).setZero();
  const auto m = SpectralModel::from_table(lambda, {});
  EXPECT_THROW(normalized_statistic(draw_coefficients(m, 1, 0), m, 1), DegenerateError);
  EXPECT_NO_THROW(normalized_statistic(draw_coefficients(m, 1, 0), m, 2));
}

TEST(NormalizedStatistic, UnitScale) {
  const auto m = make_powerlaw_model(4, 3, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 13});
  std::vector<double> op2, sc, sc2;
  for (std::uint32_t r = 0; r < 20000; ++r) {
    const auto s = normalized_statistic(draw_coefficients(m, 10, r), m, 4);
    op2.push_back(s.operator_stat.entries().squaredNorm());
    sc.push_back(s.scalar_stat);
    sc2.push_back(s.scalar_stat * s.scalar_stat);
  }
  const auto a = testsupport::mean_se(op2), b = testsupport::mean_se(sc2), c = testsupport::mean_se(sc);
  EXPECT_NEAR(a.mean, 1.0, 4 * a.se);
  EXPECT_NEAR(b.mean, 1.0, 4 * b.se);
  EXPECT_NEAR(c.mean, 0.0, 4 * c.se);
}

// trend: E||F_hat - F||_1 shrinks with l for a flat spectrum
TEST(Consistency, NuclearErrorDecreases) {
  MatrixXd lambda(33, 3);
  for (int l = 0; l <= 32; ++l) lambda.row(l) << 1.0, 0.6, 0.2;
  const auto m = SpectralModel::from_table(lambda, {});
  double prev_mean = 1e300, prev_se = 0.0;
  for (int ell : {1, 4, 16, 32}) {
    std::vector<double> err;
    const auto truth = power_spectrum_operator(m, ell);
    for (std::uint32_t r = 0; r < 1000; ++r) {
      err.push_back(nuclear_norm(OperatorOnH(sample_power_spectrum_entries(draw_degree(m, 8, r, ell)), true) - truth));
    }
    const auto s = testsupport::mean_se(err);
    EXPECT_LT(s.mean, prev_mean + 4 * std::hypot(s.se, prev_se)) << ell;
    prev_mean = s.mean;
    prev_se = s.se;
  }
}
