#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/clt.hpp"
#include "sphfield/harmonics.hpp"
#include "sphfield/legendre.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/rng.hpp"
#include "sphfield/cli/config.hpp"

namespace sphfield::cli {

/// One deterministic invariant: observed error against its tolerance.
struct SelfCheck {
  std::string name;
  std::string identity;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string error;  // set when the check threw instead of producing a value
};

namespace detail {

// Seeded draws for the self-test, one counter word per use.
class SelftestDraws {
 public:
  explicit SelftestDraws(std::uint64_t seed) : seed_(seed) {}

  double normal() { return standard_normal({seed_, counter_++, 0, 0, 0, StreamDomain::selftest}); }
  double uniform() { return uniform_open({seed_, counter_++, 1, 0, 0, StreamDomain::selftest}); }

  Vec3 unit_vector() {
    Vec3 v(normal(), normal(), normal());
    return v / v.norm();
  }

  Eigen::MatrixXd matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k < cols; ++k) m(i, k) = normal();
    return m;
  }

  Eigen::MatrixXd orthogonal(int d) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(matrix(d, d));
    return qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  }

  Eigen::VectorXd spectrum(int d, double zero_probability) {
    Eigen::VectorXd v(d);
    for (int j = 0; j < d; ++j) v[j] = uniform() < zero_probability ? 0.0 : 0.01 + 2.0 * uniform();
    if (v.maxCoeff() == 0.0) v[0] = 1.0;
    return v;
  }

 private:
  std::uint64_t seed_;
  std::uint32_t counter_ = 0;
};

template <class F>
SelfCheck run_check(std::string name, std::string identity, double tolerance, F&& observe) {
  SelfCheck c{std::move(name), std::move(identity), 0.0, tolerance, false, {}};
  try {
    c.observed = observe();
    c.pass = std::isfinite(c.observed) && c.observed <= tolerance;
  } catch (const std::exception& e) {
    c.error = e.what();
  }
  return c;
}

}  // namespace detail

/// Max error of the addition formula over degrees 0..max_degree at `pairs`
/// random point pairs.
inline double addition_formula_error(int max_degree, int pairs, std::uint64_t seed) {
  detail::SelftestDraws draws(seed);
  double worst = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Vec3 x = draws.unit_vector(), y = draws.unit_vector();
    const Eigen::VectorXd yx = sph_harm_all(max_degree, x), yy = sph_harm_all(max_degree, y);
    const auto leg = legendre_all(max_degree, std::clamp(x.dot(y), -1.0, 1.0)).values;
    for (int l = 0; l <= max_degree; ++l) {
      double acc = 0.0;
      for (int m = -l; m <= l; ++m) acc += yx[harmonic_offset(l, m)] * yy[harmonic_offset(l, m)];
      worst = std::max(worst, std::abs(acc - (2.0 * l + 1.0) / (4.0 * std::numbers::pi) * leg[l]));
    }
  }
  return worst;
}

/// Max |analyze(synthesize(c)) - c| for random coefficients of band limit
/// `band_limit` in `dim` columns, synthesized on a grid of band limit
/// `band_limit - grid_deficit`. A positive deficit is rejected by the
/// transforms.
inline double round_trip_error(int band_limit, int dim, int grid_deficit, std::uint64_t seed) {
  detail::SelftestDraws draws(seed);
  const Eigen::MatrixXd c = draws.matrix(static_cast<int>(harmonic_count(band_limit)), dim);
  const SphericalGrid grid(band_limit - grid_deficit);
  const Eigen::MatrixXd back = analyze(synthesize_on_grid(c, band_limit, grid), grid, band_limit);
  return (back - c).cwiseAbs().maxCoeff();
}

/// Worst residual of the CltCovariance trace and Hilbert-Schmidt identities,
/// relative to max(1, |expected|).
inline double clt_covariance_identity_error(int cases, std::uint64_t seed) {
  detail::SelftestDraws draws(seed);
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    const int d = 1 + i % 8;
    const Eigen::VectorXd lambda = draws.spectrum(d, 0.2);
    const CltCovariance cov(i, lambda, draws.orthogonal(d));
    const double hs2 = lambda.squaredNorm(), c = lambda.sum(), s4 = lambda.array().pow(4).sum();
    worst = std::max(worst, std::abs(cov.trace() - (hs2 + c * c)));
    worst = std::max(worst, std::abs(cov.hs_norm_squared() - 2.0 * (s4 + hs2 * hs2)));
  }
  return worst;
}

/// Largest violation of d2_exact <= d2_simplified over random models, plus
/// the largest rank-one gap |exact - simplified|. Returns the max of both.
inline double d2_bound_ordering_error(int cases, std::uint64_t seed) {
  detail::SelftestDraws draws(seed);
  double worst = 0.0;
  for (int i = 0; i < cases; ++i) {
    const int d = 1 + i % 8;
    const int ell = 1 + (i * 37) % 500;
    const Eigen::VectorXd lambda = draws.spectrum(d, 0.3);
    const auto t = theoretical_from_eigenvalues(ell, lambda);
    worst = std::max(worst, t.d2_bound_exact - t.d2_bound_simplified);
    if ((lambda.array() > 0.0).count() == 1) worst = std::max(worst, std::abs(t.d2_bound_exact - t.d2_bound_simplified));
  }
  return worst;
}

inline std::vector<SelfCheck> run_selftest(const ExperimentConfig& cfg) {
  using detail::run_check;
  const std::uint64_t seed = cfg.mc.master_seed;
  const auto& st = cfg.selftest;
  std::vector<SelfCheck> checks;

  checks.push_back(run_check("legendre_at_one", "P_l(1) = 1 for l <= 256", 1e-14, [] {
    double worst = 0.0;
    for (double p : legendre_all(256, 1.0).values) worst = std::max(worst, std::abs(p - 1.0));
    return worst;
  }));
  checks.push_back(run_check("legendre_bounded", "|P_l(z)| <= 1 on [-1, 1], l <= 1024", 1e-13, [&] {
    double worst = 0.0;
    for (int i = 0; i <= 400; ++i) {
      for (double p : legendre_all(1024, -1.0 + 2.0 * i / 400).values) worst = std::max(worst, std::abs(p) - 1.0);
    }
    return std::max(worst, 0.0);
  }));
  checks.push_back(run_check("legendre_orthogonality", "int P_l P_l' = 2/(2l+1) delta, l, l' <= 64", 1e-12, [] {
    const auto rule = gauss_legendre(65);
    std::vector<std::vector<double>> p;
    for (double x : rule.nodes) p.push_back(legendre_all(64, x).values);
    double worst = 0.0;
    for (int l = 0; l <= 64; ++l) {
      for (int lp = 0; lp <= l; ++lp) {
        double acc = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) acc += rule.weights[i] * p[i][l] * p[i][lp];
        worst = std::max(worst, std::abs(acc - (l == lp ? 2.0 / (2 * l + 1) : 0.0)));
      }
    }
    return worst;
  }));
  checks.push_back(run_check("addition_formula",
                             "sum_m Y_lm(x) Y_lm(y) = (2l+1)/(4 pi) P_l(<x,y>), l <= " + std::to_string(st.max_degree),
                             1e-10, [&] { return addition_formula_error(st.max_degree, st.pairs, seed); }));
  checks.push_back(run_check("grid_weights", "sum of grid weights = 4 pi, L = 64", 1e-12, [] {
    const SphericalGrid g(64);
    double sum = 0.0;
    for (double w : g.weights()) sum += w;
    return std::abs(sum - 4.0 * std::numbers::pi);
  }));
  checks.push_back(run_check("grid_orthonormality", "grid Gram matrix of Y_lm = identity, L = 16", 1e-12, [] {
    const SphericalGrid g(16);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(harmonic_count(16)));
    for (std::size_t i = 0; i < g.size(); ++i) y.row(static_cast<Eigen::Index>(i)) = sph_harm_all(16, g.nodes()[i]);
    const Eigen::Map<const Eigen::VectorXd> w(g.weights().data(), static_cast<Eigen::Index>(g.size()));
    const Eigen::MatrixXd gram = y.transpose() * w.asDiagonal() * y;
    return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  }));
  checks.push_back(run_check("transform_round_trip", "analyze(synthesize(c)) = c, L = 16, d = 4", 1e-10,
                             [&] { return round_trip_error(16, 4, st.grid_band_deficit, seed); }));
  checks.push_back(run_check("schatten_ordering", "||A||_inf <= ||A||_2 <= ||A||_1", 1e-12, [&] {
    detail::SelftestDraws draws(seed);
    double worst = 0.0;
    for (int i = 0; i < st.random_cases; ++i) {
      const int d = 1 + i % 7;
      const OperatorOnH op(draws.matrix(d, d));
      const double inf = operator_norm(op), two = hilbert_schmidt_norm(op), one = nuclear_norm(op);
      worst = std::max({worst, (inf - two) / two, (two - one) / one});
    }
    return std::max(worst, 0.0);
  }));
  checks.push_back(run_check("trace_equals_nuclear", "Tr(A) = ||A||_1 for PSD A", 1e-10, [&] {
    detail::SelftestDraws draws(seed);
    double worst = 0.0;
    for (int i = 0; i < st.random_cases; ++i) {
      const int d = 1 + i % 7;
      const Eigen::MatrixXd a = draws.matrix(d, d);
      const OperatorOnH op(a * a.transpose(), true);
      worst = std::max(worst, std::abs(trace(op) - nuclear_norm(op)) / std::max(1.0, trace(op)));
    }
    return worst;
  }));
  checks.push_back(run_check("sym_basis_complete", "E_{j,j'} orthonormal and complete on symmetric operators, d = 6",
                             1e-12, [&] {
                               detail::SelftestDraws draws(seed);
                               const Eigen::MatrixXd frame = draws.orthogonal(6);
                               const auto pairs = sym_pairs(6);
                               double worst = 0.0;
                               for (std::size_t a = 0; a < pairs.size(); ++a) {
                                 const auto ea = sym_basis(pairs[a].j, pairs[a].j_prime, frame).op;
                                 for (std::size_t b = 0; b <= a; ++b) {
                                   const auto eb = sym_basis(pairs[b].j, pairs[b].j_prime, frame).op;
                                   worst = std::max(worst, std::abs(hs_inner(ea, eb) - (a == b ? 1.0 : 0.0)));
                                 }
                               }
                               const Eigen::MatrixXd s = draws.matrix(6, 6);
                               const OperatorOnH sym(0.5 * (s + s.transpose()), true);
                               const auto back = from_sym_coordinates(sym_coordinates(sym, frame), frame);
                               return std::max(worst, (back.entries() - sym.entries()).cwiseAbs().maxCoeff());
                             }));
  checks.push_back(run_check("clt_covariance_worked_case", "lambda = (1, 0.5): trace 3.5, squared HS norm 5.25",
                             1e-12, [] {
                               const CltCovariance cov(1, Eigen::Vector2d(1.0, 0.5), Eigen::Matrix2d::Identity());
                               return std::max(std::abs(cov.trace() - 3.5), std::abs(cov.hs_norm_squared() - 5.25));
                             }));
  checks.push_back(run_check("clt_covariance_identities",
                             "Tr S = ||F||_2^2 + C^2 and ||S||_2^2 = 2(||F||_4^4 + ||F||_2^4)", 1e-10,
                             [&] { return clt_covariance_identity_error(st.random_cases, seed); }));
  checks.push_back(run_check("d2_bound_ordering", "d2 exact <= d2 simplified, equal at rank one", 1e-12,
                             [&] { return d2_bound_ordering_error(st.random_cases, seed); }));
  checks.push_back(run_check("d2_bound_values", "d2 simplified bound = 4.1733 at l = 1 and 0.33708 at l = 100", 1e-3,
                             [] {
                               return std::max(std::abs(d2_bound_simplified(1) - 4.1733),
                                               std::abs(d2_bound_simplified(100) - 0.33708));
                             }));
  return checks;
}

}  // namespace sphfield::cli
