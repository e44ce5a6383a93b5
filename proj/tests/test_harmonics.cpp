#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/legendre.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>
#include <gtest/gtest.h>

#include "sphfield/errors.hpp"
#include "sphfield/harmonics.hpp"
#include "test_support.hpp"

using namespace sphfield;
using testsupport::random_unit;

namespace {

constexpr double kY00 = 0.28209479177387814;  // 1 / sqrt(4 pi)

double y32(const Vec3& p) { return 0.25 * std::sqrt(105.0 / M_PI) * (p.x() * p.x() - p.y() * p.y()) * p.z(); }

double y4m3(const Vec3& p) {
  return 0.75 * std::sqrt(35.0 / (2.0 * M_PI)) * p.y() * (3.0 * p.x() * p.x() - p.y() * p.y()) * p.z();
}

// 30-point Gauss rule in cos(theta) times 64 uniform longitudes; exact for
// integrands of degree < 60, independent of SphericalGrid.
template <class F>
double dense_integral(F&& f) {
  using rule = boost::math::quadrature::gauss<double, 30>;
  constexpr int kPhi = 64;
  double acc = 0.0;
  for (std::size_t k = 0; k < rule::abscissa().size(); ++k) {
    for (double sign : {1.0, -1.0}) {
      if (sign < 0 && rule::abscissa()[k] == 0.0) continue;  // zero node listed once
      const double z = sign * rule::abscissa()[k];
      const double w = rule::weights()[k];
      for (int i = 0; i < kPhi; ++i) {
        const double phi = 2.0 * M_PI * i / kPhi;
        acc += w * (2.0 * M_PI / kPhi) * f(unit_vector(std::acos(z), phi));
      }
    }
  }
  return acc;
}

// Real harmonic from boost's complex one, which carries the Condon-Shortley
// phase (-1)^m.
double boost_real_harmonic(int l, int m, double theta, double phi) {
  const int am = std::abs(m);
  const double cs = am % 2 ? -1.0 : 1.0;
  if (m == 0) return boost::math::spherical_harmonic_r(l, 0, theta, phi);
  if (m > 0) return std::numbers::sqrt2 * cs * boost::math::spherical_harmonic_r(l, am, theta, phi);
  return std::numbers::sqrt2 * cs * boost::math::spherical_harmonic_i(l, am, theta, phi);
}

}  // namespace

TEST(HarmonicIndex, ValidatesAndPacks) {
  EXPECT_EQ(HarmonicIndex(0, 0).offset(), 0u);
  EXPECT_EQ(HarmonicIndex(1, -1).offset(), 1u);
  EXPECT_EQ(HarmonicIndex(2, 2).offset(), 8u);
  EXPECT_EQ(harmonic_count(3), 16u);
  EXPECT_THROW(HarmonicIndex(-1, 0), std::domain_error);
  EXPECT_THROW(HarmonicIndex(2, 3), std::domain_error);
  EXPECT_THROW(HarmonicIndex(2, -3), std::domain_error);
}

TEST(SphHarm, ConstantMode) {
  for (int i = 0; i < 10; ++i) EXPECT_NEAR(sph_harm({0, 0}, random_unit()), kY00, 1e-15);
}

TEST(SphHarm, DipoleSumIsConstant) {
  for (int i = 0; i < 20; ++i) {
    const Vec3 x = random_unit();
    double acc = 0.0;
    for (int m = -1; m <= 1; ++m) acc += std::pow(sph_harm({1, m}, x), 2);
    EXPECT_NEAR(acc, 3.0 / (4.0 * M_PI), 1e-14);
  }
}

TEST(SphHarm, ClosedForms) {
  for (int i = 0; i < 50; ++i) {
    const Vec3 x = random_unit();
    EXPECT_NEAR(sph_harm({3, 2}, x), y32(x), 1e-13);
    EXPECT_NEAR(sph_harm({4, -3}, x), y4m3(x), 1e-13);
  }
}

TEST(SphHarm, MatchesBoostRealParts) {
  for (int i = 0; i < 20; ++i) {
    const double theta = testsupport::uniform(0.0, M_PI);
    const double phi = testsupport::uniform(0.0, 2.0 * M_PI);
    const Vec3 x = unit_vector(theta, phi);
    const auto all = sph_harm_all(15, x);
    for (int l = 0; l <= 15; ++l) {
      for (int m = -l; m <= l; ++m) {
        const double expect = boost_real_harmonic(l, m, theta, phi);
        EXPECT_NEAR(sph_harm({l, m}, x), expect, 1e-12) << l << "," << m;
        EXPECT_NEAR(all[harmonic_offset(l, m)], expect, 1e-12) << l << "," << m;
      }
    }
  }
}

TEST(SphHarm, RejectsOffSpherePoint) {
  EXPECT_THROW(sph_harm({1, 0}, Vec3(1.0, 1.0, 0.0)), std::domain_error);
  EXPECT_THROW(sph_harm_all(2, Vec3(0.0, 0.0, 1.0 + 1e-8)), std::domain_error);
  EXPECT_NO_THROW(sph_harm({1, 0}, Vec3(0.0, 0.0, 1.0 + 1e-12)));
}

TEST(SphHarm, PolesAreFinite) {
  for (double z : {1.0, -1.0}) {
    const auto y = sph_harm_all(40, Vec3(0, 0, z));
    EXPECT_TRUE(y.allFinite());
    for (int l = 1; l <= 40; ++l)
      for (int m = 1; m <= l; ++m) {
        EXPECT_EQ(y[harmonic_offset(l, m)], 0.0);
        EXPECT_EQ(y[harmonic_offset(l, -m)], 0.0);
      }
  }
}

TEST(SphHarm, AdditionFormulaDegreeSeven) {
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = random_unit(), y = random_unit();
    double acc = 0.0;
    for (int m = -7; m <= 7; ++m) acc += sph_harm({7, m}, x) * sph_harm({7, m}, y);
    EXPECT_NEAR(acc, 15.0 / (4.0 * M_PI) * boost::math::legendre_p(7, std::clamp(x.dot(y), -1.0, 1.0)), 1e-11);
  }
}

// property: addition formula for every l <= 64 at 100 random pairs
TEST(SphHarm, AdditionFormulaAllDegrees) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = random_unit(), y = random_unit();
    const auto yx = sph_harm_all(64, x), yy = sph_harm_all(64, y);
    const double t = std::clamp(x.dot(y), -1.0, 1.0);
    for (int l = 0; l <= 64; ++l) {
      double acc = 0.0;
      for (int m = -l; m <= l; ++m) acc += yx[harmonic_offset(l, m)] * yy[harmonic_offset(l, m)];
      worst = std::max(worst, std::abs(acc - (2 * l + 1) / (4 * M_PI) * boost::math::legendre_p(l, t)));
    }
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Grid, SingleNodeAtZero) {
  const auto g = build_grid(0);
  ASSERT_EQ(g.size(), 1u);
  EXPECT_NEAR(g.weights()[0], 4 * M_PI, 1e-14);
}

TEST(Grid, ShapeAndInvariants) {
  for (int L : {1, 5, 8, 33}) {
    const auto g = build_grid(L);
    EXPECT_EQ(g.size(), static_cast<std::size_t>((L + 1) * (2 * L + 1)));
    EXPECT_EQ(g.ring_count(), L + 1);
    EXPECT_EQ(g.longitude_count(), 2 * L + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_NEAR(g.nodes()[i].norm(), 1.0, 1e-14);
      EXPECT_GT(g.weights()[i], 0.0);
      sum += g.weights()[i];
    }
    EXPECT_NEAR(sum, 4 * M_PI, 1e-12);
    EXPECT_NEAR(g.integrate(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(g.size()))), 4 * M_PI, 1e-12);
    // north to south
    for (int r = 1; r <= L; ++r) EXPECT_GT(g.ring_cos_theta()[r - 1], g.ring_cos_theta()[r]);
    // node index layout
    const std::size_t node = g.size() / 2;
    EXPECT_NEAR((unit_vector(g.theta(node), g.phi(node)) - g.nodes()[node]).norm(), 0.0, 1e-14);
  }
}

TEST(Grid, RejectsBadBandLimit) {
  EXPECT_THROW(build_grid(-1), std::domain_error);
  EXPECT_THROW(build_grid(kMaxBandLimit + 1), ResourceError);
}

TEST(Grid, SquaredHarmonicMatchesDenseReference) {
  const auto g = build_grid(3);
  Eigen::VectorXd s(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = std::pow(sph_harm({3, 2}, g.nodes()[i]), 2);
  const double reference = dense_integral([](const Vec3& p) { return y32(p) * y32(p); });
  EXPECT_NEAR(reference, 1.0, 1e-12);
  EXPECT_NEAR(g.integrate(s), 1.0, 1e-12);
}

// property: exact orthonormality of every product with l, l' <= L
TEST(Grid, ExactForBandLimitedProducts) {
  for (int L : {0, 1, 4, 12}) {
    const auto g = build_grid(L);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(harmonic_count(L)));
    for (std::size_t i = 0; i < g.size(); ++i) y.row(i) = sph_harm_all(L, g.nodes()[i]).transpose();
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(g.weights().data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::MatrixXd gram = y.transpose() * w.asDiagonal() * y;
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff(), 1e-12) << L;
  }
}

TEST(Analyze, ConstantField) {
  const auto g = build_grid(6);
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), kY00);
  const auto c = analyze_scalar(s, g, 6);
  EXPECT_NEAR(c(0, 0), 1.0, 1e-11);
  for (int l = 1; l <= 6; ++l)
    for (int m = -l; m <= l; ++m) EXPECT_NEAR(c(l, m), 0.0, 1e-11);
}

TEST(Analyze, PicksOutSingleHarmonic) {
  const auto g = build_grid(4);
  Eigen::VectorXd s(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) s[i] = y4m3(g.nodes()[i]);
  const auto c = analyze_scalar(s, g, 4);
  for (int l = 0; l <= 4; ++l)
    for (int m = -l; m <= l; ++m) EXPECT_NEAR(c(l, m), (l == 4 && m == -3) ? 1.0 : 0.0, 1e-11);
  EXPECT_NEAR(c[HarmonicIndex(4, -3)], 1.0, 1e-11);
}

TEST(Analyze, RejectsMismatch) {
  const auto g = build_grid(4);
  EXPECT_THROW(analyze_scalar(Eigen::VectorXd::Zero(10), g, 4), std::length_error);
  EXPECT_THROW(analyze_scalar(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(g.size())), g, 5),
               std::invalid_argument);
}

TEST(Synthesize, ConstantAndSingleTerm) {
  auto c = ScalarCoefficients::zeros(3);
  c(0, 0) = 1.0;
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_unit());
  for (double v : synthesize_scalar(c, pts)) EXPECT_NEAR(v, kY00, 1e-15);
  c(0, 0) = 0.0;
  c(2, 1) = 1.0;
  const auto v = synthesize_scalar(c, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(v[i], sph_harm({2, 1}, pts[i]), 1e-13);
}

TEST(Synthesize, RejectsIncompleteCoefficients) {
  ScalarCoefficients c{3, Eigen::VectorXd::Zero(10)};
  EXPECT_THROW(synthesize_scalar(c, std::vector<Vec3>{Vec3(0, 0, 1)}), std::length_error);
  EXPECT_THROW(synthesize_scalar(ScalarCoefficients::zeros(5), build_grid(4)), std::invalid_argument);
}

// property: analyze o synthesize = identity on band-limited input
TEST(Synthesize, RoundTrip) {
  for (int L : {0, 3, 10, 16}) {
    const auto g = build_grid(L);
    auto c = ScalarCoefficients::zeros(L);
    for (Eigen::Index k = 0; k < c.values.size(); ++k) c.values[k] = testsupport::normal();
    const auto back = analyze_scalar(synthesize_scalar(c, g), g, L);
    EXPECT_LE((back.values - c.values).cwiseAbs().maxCoeff(), 1e-10) << L;
    // grid synthesis agrees with pointwise evaluation
    const auto on_grid = synthesize_scalar(c, g);
    const auto at_nodes = synthesize_scalar(c, g.nodes());
    EXPECT_LE((on_grid - at_nodes).cwiseAbs().maxCoeff(), 1e-11);
  }
}

TEST(Synthesize, RoundTripOnFinerGrid) {
  const int L = 7;
  const auto g = build_grid(12);
  auto c = ScalarCoefficients::zeros(L);
  for (Eigen::Index k = 0; k < c.values.size(); ++k) c.values[k] = testsupport::normal();
  const auto back = analyze_scalar(synthesize_scalar(c, g), g, L);
  EXPECT_LE((back.values - c.values).cwiseAbs().maxCoeff(), 1e-10);
}
