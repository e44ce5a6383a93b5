#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "sphfield/clt.hpp"
#include "test_support.hpp"

using namespace sphfield;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Test-side closed forms, written from the rank-one reduction rather than
// from the general expression.
double rank_one_d2(int ell) {
  const double c = (1.0 + std::sqrt(3.0)) / (2.0 * std::sqrt(3.0));
  const double q = 12.0 / (2 * ell + 1);
  return c * std::sqrt(q * (q + 3.0));
}

SpectralModel rank_one_model(int L, int d = 3, double lam = 1.0) {
  MatrixXd lambda = MatrixXd::Zero(L + 1, d);
  lambda.col(0).setConstant(lam);
  return SpectralModel::from_table(lambda, {FrameMode::random_orthogonal, 4});
}

}  // namespace

TEST(Theoretical, RankOneValues) {
  const auto m = rank_one_model(100);
  const auto t1 = theoretical(m, 1);
  EXPECT_NEAR(t1.d2_bound_exact, 4.1733, 1e-3);
  EXPECT_NEAR(t1.d2_bound_simplified, 4.1733, 1e-3);
  EXPECT_NEAR(t1.d2_bound_exact, t1.d2_bound_simplified, 1e-12);
  EXPECT_NEAR(t1.d2_bound_simplified, rank_one_d2(1), 1e-14);
  EXPECT_NEAR(theoretical(m, 100).d2_bound_simplified, 0.33708, 1e-3);
  EXPECT_NEAR(d2_bound_simplified(100), rank_one_d2(100), 1e-15);
}

TEST(Theoretical, TvBound) { EXPECT_NEAR(tv_bound(24), std::sqrt(8.0 / 49.0), 1e-15); EXPECT_NEAR(tv_bound(24), 0.40406, 1e-5); }

TEST(Theoretical, MseExamples) {
  const auto m = rank_one_model(4, 1);
  EXPECT_NEAR(mse_theoretical(m, 2), 0.4, 1e-15);
  MatrixXd lambda = MatrixXd::Constant(5, 1, 0.7);
  const auto scalar = SpectralModel::from_table(lambda, {});
  EXPECT_NEAR(mse_theoretical(scalar, 3), 2 * 0.49 / 7, 1e-15);
  const auto doubled = SpectralModel::from_table(2.0 * lambda, {});
  EXPECT_NEAR(mse_theoretical(doubled, 3), 4 * mse_theoretical(scalar, 3), 1e-15);
}

TEST(Theoretical, Fields) {
  const VectorXd lambda = Eigen::Vector2d(1.0, 0.5);
  const auto t = theoretical_from_eigenvalues(3, lambda);
  EXPECT_DOUBLE_EQ(t.hs_norm_sq, 1.25);
  EXPECT_DOUBLE_EQ(t.trace_sq, 2.25);
  EXPECT_DOUBLE_EQ(t.s4_norm4, 1.0625);
  EXPECT_DOUBLE_EQ(t.mse, 3.5 / 7);
  EXPECT_DOUBLE_EQ(t.fourth_moment_a, 2 * 1.25 + 2.25);
  EXPECT_NEAR(t.cum4_reduced, 12.0 / 7 * 1.0625 / (1.25 * 1.25), 1e-15);
}

TEST(Theoretical, Errors) {
  EXPECT_THROW(theoretical_from_eigenvalues(2, VectorXd::Zero(3)), DegenerateError);
  EXPECT_THROW(theoretical_from_eigenvalues(2, Eigen::Vector2d(1, -1)), std::domain_error);
  EXPECT_THROW(theoretical(rank_one_model(3), 4), std::out_of_range);
}

// property: exact <= simplified, equality exactly at rank one; cum4 <= 12/(2l+1)
TEST(Theoretical, BoundOrdering) {
  for (int i = 0; i < 1000; ++i) {
    const int d = 1 + i % 8;
    const int ell = 1 + (i * 37) % 300;
    const VectorXd lambda = testsupport::random_spectrum(d, 0.3);
    const auto t = theoretical_from_eigenvalues(ell, lambda);
    const int rank = static_cast<int>((lambda.array() > 0).count());
    EXPECT_LE(t.d2_bound_exact, t.d2_bound_simplified * (1 + 1e-14));
    EXPECT_LE(t.cum4_reduced, 12.0 / (2 * ell + 1) * (1 + 1e-14));
    if (rank == 1) {
      EXPECT_NEAR(t.d2_bound_exact, t.d2_bound_simplified, 1e-12);
      EXPECT_NEAR(t.cum4_reduced, 12.0 / (2 * ell + 1), 1e-14);
    } else {
      EXPECT_LT(t.d2_bound_exact, t.d2_bound_simplified);
      EXPECT_LT(t.cum4_reduced, 12.0 / (2 * ell + 1));
    }
    for (double v : {t.hs_norm_sq, t.trace_sq, t.s4_norm4, t.mse, t.fourth_moment_a, t.d2_bound_exact, t.tv_bound,
                     t.cum4_reduced})
      EXPECT_GE(v, 0.0);
  }
}

TEST(Theoretical, SimplifiedBoundDecays) {
  double prev = d2_bound_simplified(1);
  for (int ell = 2; ell <= 1024; ++ell) {
    const double v = d2_bound_simplified(ell);
    EXPECT_LT(v, prev);
    prev = v;
  }
  EXPECT_LT(prev, 0.11);
  EXPECT_LT(d2_bound_simplified(1 << 20), 1e-2);
}

TEST(D2Proxy, ProbesAreUnitSymmetric) {
  const auto probes = unit_hs_probes(4, 16, 3);
  ASSERT_EQ(probes.size(), 16u);
  for (const auto& b : probes) {
    EXPECT_NEAR(b.norm(), 1.0, 1e-14);
    EXPECT_EQ(b, b.transpose());
  }
  EXPECT_EQ(probes[0], unit_hs_probes(4, 16, 3)[0]);
  EXPECT_THROW(unit_hs_probes(4, 0, 3), std::invalid_argument);
}

TEST(D2Proxy, ReferenceSamplesHaveTargetCovariance) {
  const auto m = make_powerlaw_model(6, 3, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 11});
  const int ell = 4;
  const auto z = reference_samples(m, ell, 20000, 8);
  const auto t = theoretical(m, ell);
  const CltCovariance cov(ell, m.eigenvalues(ell), m.frame(ell));
  // E||Z||^2 = 1 and Var <Z, B> = <S B, B> / (||F||_2^2 + C^2)
  const MatrixXd b = testsupport::random_symmetric(3);
  const double expect = hs_inner(cov.apply(OperatorOnH(b, true)), OperatorOnH(b, true)) / (t.hs_norm_sq + t.trace_sq);
  std::vector<double> n2, proj2;
  for (const auto& s : z) {
    EXPECT_EQ(s, s.transpose());
    n2.push_back(s.squaredNorm());
    proj2.push_back(std::pow(s.cwiseProduct(b).sum(), 2));
  }
  const auto a = testsupport::mean_se(n2), p = testsupport::mean_se(proj2);
  EXPECT_NEAR(a.mean, 1.0, 4 * a.se);
  EXPECT_NEAR(p.mean, expect, 4 * p.se);
}

TEST(D2Proxy, SameLawIsSmall) {
  const auto m = make_powerlaw_model(6, 3, 1.0, 3.0, 2.0);
  const auto a = reference_samples(m, 4, 20000, 1);
  const auto b = reference_samples(m, 4, 20000, 2);
  const auto r = d2_proxy_between(a, b, unit_hs_probes(3, 16, 5));
  EXPECT_EQ(r.per_probe.size(), 16u);
  EXPECT_LE(r.value, 3 * r.se * 1.5);  // max over 16 probes inflates the single-probe scale
  EXPECT_THROW(d2_proxy_between(a, b, {}), std::invalid_argument);
}

TEST(D2Proxy, DetectsDifferentLaw) {
  const auto m = make_powerlaw_model(6, 3, 1.0, 3.0, 2.0);
  const auto a = reference_samples(m, 4, 5000, 1);
  std::vector<MatrixXd> b;
  for (const auto& s : reference_samples(m, 4, 5000, 2)) b.push_back(3.0 * s);
  EXPECT_GT(d2_proxy_between(a, b, unit_hs_probes(3, 16, 5)).value, 0.1);
}

TEST(D2Proxy, RejectsZeroProbes) {
  const auto m = make_powerlaw_model(6, 3, 1.0, 3.0, 2.0);
  const auto a = reference_samples(m, 4, 10, 1);
  EXPECT_THROW(d2_proxy(a, m, 4, 0, 1), std::invalid_argument);
}

TEST(RunMc, RankOneAtSixteen) {
  const auto m = rank_one_model(16, 2);
  McOptions opt;
  opt.replicates = 20000;
  opt.master_seed = 1;
  opt.threads = 0;
  const auto reps = run_mc(m, {16}, opt);
  ASSERT_EQ(reps.size(), 1u);
  const auto& r = reps[0];
  EXPECT_NEAR(mse_theoretical(m, 16), 2.0 / 33.0, 1e-15);
  EXPECT_TRUE(r.mse_pass) << r.mse.value << " +- " << r.mse.se;
  EXPECT_TRUE(r.cum4_pass) << r.cum4.value << " +- " << r.cum4.se << " vs " << 12.0 / 33;
  EXPECT_TRUE(r.ks_pass);
  EXPECT_TRUE(r.d2_pass);
  EXPECT_GT(r.mse.se, 0.0);
  EXPECT_GE(r.ks_distance, 0.0);
  EXPECT_LE(r.ks_distance, 1.0);
}

TEST(RunMc, FaultySamplerFails) {
  const auto m = make_powerlaw_model(8, 3, 1.0, 3.0, 2.0);
  McOptions opt;
  opt.replicates = 5000;
  opt.sampler_lambda_scale = 1.5;
  const auto r = run_mc(m, {8}, opt)[0];
  EXPECT_FALSE(r.mse_pass);
  EXPECT_FALSE(r.pass());
}

TEST(RunMc, Errors) {
  MatrixXd lambda = MatrixXd::Ones(4, 2);
  lambda.row(2).setZero();
  const auto m = SpectralModel::from_table(lambda, {});
  McOptions opt;
  opt.replicates = 99;
  EXPECT_THROW(run_mc(m, {1}, opt), std::invalid_argument);
  opt.replicates = 200;
  EXPECT_THROW(run_mc(m, {2}, opt), DegenerateError);
  EXPECT_THROW(run_mc(m, {5}, opt), std::out_of_range);
}

TEST(RunMc, ThreadCountDoesNotChangeResults) {
  const auto m = make_powerlaw_model(8, 3, 1.0, 3.0, 2.0, {FrameMode::random_orthogonal, 2});
  McOptions opt;
  opt.replicates = 1000;
  opt.master_seed = 77;
  opt.threads = 1;
  const auto a = run_mc(m, {2, 8}, opt);
  opt.threads = 5;
  const auto b = run_mc(m, {2, 8}, opt);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].mse.value, b[i].mse.value);
    EXPECT_EQ(a[i].mse.se, b[i].mse.se);
    EXPECT_EQ(a[i].cum4.value, b[i].cum4.value);
    EXPECT_EQ(a[i].ks_distance, b[i].ks_distance);
    EXPECT_EQ(a[i].d2_proxy, b[i].d2_proxy);
  }
}
