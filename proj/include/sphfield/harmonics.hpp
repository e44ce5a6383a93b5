#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/errors.hpp"
#include "sphfield/legendre.hpp"

namespace sphfield {

// Real, fully normalized spherical harmonics:
//
//   Y_{l,0}  =           \bar P_l^0(cos theta)
//   Y_{l,m}  = sqrt(2) * \bar P_l^m(cos theta) cos(m phi)     m > 0
//   Y_{l,-m} = sqrt(2) * \bar P_l^m(cos theta) sin(m phi)     m > 0
//
// with \bar P orthonormalized so that the integral of Y^2 over S^2 is 1 and
// no Condon-Shortley phase. This basis satisfies the addition formula
// sum_m Y_{l,m}(x) Y_{l,m}(y) = (2l+1)/(4 pi) P_l(<x, y>).

using Vec3 = Eigen::Vector3d;

inline constexpr int kMaxBandLimit = 2048;
inline constexpr double kUnitNormTolerance = 1e-10;

/// Degree/order pair (l, m) with |m| <= l.
struct HarmonicIndex {
  int ell;
  int m;

  HarmonicIndex(int ell_, int m_) : ell(ell_), m(m_) {
    if (ell_ < 0 || m_ < -ell_ || m_ > ell_) {
      throw std::domain_error("HarmonicIndex: invalid (l, m) = (" + std::to_string(ell_) + ", " +
                              std::to_string(m_) + ")");
    }
  }

  /// Position in the packed ordering l^2 + l + m.
  constexpr std::size_t offset() const { return static_cast<std::size_t>(ell * ell + ell + m); }

  friend constexpr bool operator==(const HarmonicIndex&, const HarmonicIndex&) = default;
};

/// Number of (l, m) pairs with l <= band_limit.
constexpr std::size_t harmonic_count(int band_limit) {
  return static_cast<std::size_t>(band_limit + 1) * static_cast<std::size_t>(band_limit + 1);
}

constexpr std::size_t harmonic_offset(int ell, int m) {
  return static_cast<std::size_t>(ell * ell + ell + m);
}

/// Colatitude/longitude of a unit vector, as (cos theta, sin theta, phi).
struct SphericalAngles {
  double cos_theta;
  double sin_theta;
  double phi;
};

inline SphericalAngles angles_of(const Vec3& point) {
  const double norm = point.norm();
  if (!(std::abs(norm - 1.0) <= kUnitNormTolerance)) {
    throw std::domain_error("spherical harmonics: point is not on the unit sphere");
  }
  const Vec3 p = point / norm;
  const double s = std::hypot(p.x(), p.y());
  return {std::clamp(p.z(), -1.0, 1.0), s, s > 0.0 ? std::atan2(p.y(), p.x()) : 0.0};
}

inline Vec3 unit_vector(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Y_{l,m}(point).
inline double sph_harm(HarmonicIndex index, const Vec3& point) {
  const auto a = angles_of(point);
  const int am = std::abs(index.m);
  const double p = normalized_legendre_column(index.ell, am, a.cos_theta, a.sin_theta).back();
  if (index.m == 0) return p;
  const double trig = index.m > 0 ? std::cos(am * a.phi) : std::sin(am * a.phi);
  return std::numbers::sqrt2 * p * trig;
}

/// All Y_{l,m}(point) for l <= band_limit in packed order.
inline Eigen::VectorXd sph_harm_all(int band_limit, const Vec3& point) {
  const auto a = angles_of(point);
  const auto table = normalized_legendre_table(band_limit, a.cos_theta, a.sin_theta);
  Eigen::VectorXd y(static_cast<Eigen::Index>(harmonic_count(band_limit)));
  for (int l = 0; l <= band_limit; ++l) {
    y[harmonic_offset(l, 0)] = table[triangular_index(l, 0)];
    for (int m = 1; m <= l; ++m) {
      const double p = std::numbers::sqrt2 * table[triangular_index(l, m)];
      y[harmonic_offset(l, m)] = p * std::cos(m * a.phi);
      y[harmonic_offset(l, -m)] = p * std::sin(m * a.phi);
    }
  }
  return y;
}

/// Gauss-Legendre rings in cos(theta) times equiangular longitudes. With
/// (L+1) rings and (2L+1) longitudes the product rule integrates every
/// product Y_{l,m} Y_{l',m'} with l, l' <= L exactly.
///
/// Node i sits on ring i / (2L+1) at longitude i % (2L+1). Rings run from
/// the north pole southwards.
class SphericalGrid {
 public:
  explicit SphericalGrid(int band_limit) : band_limit_(band_limit) {
    if (band_limit < 0) throw std::domain_error("build_grid: negative band limit");
    if (band_limit > kMaxBandLimit) {
      throw ResourceError("build_grid: band limit " + std::to_string(band_limit) +
                          " exceeds maximum " + std::to_string(kMaxBandLimit));
    }
    const int n_rings = band_limit + 1;
    const int n_phi = 2 * band_limit + 1;
    const auto rule = gauss_legendre(n_rings);
    cos_theta_.resize(n_rings);
    ring_weights_.resize(n_rings);
    for (int i = 0; i < n_rings; ++i) {
      // descending cos(theta): north to south
      cos_theta_[i] = rule.nodes[n_rings - 1 - i];
      ring_weights_[i] = rule.weights[n_rings - 1 - i];
    }
    phi_.resize(n_phi);
    for (int k = 0; k < n_phi; ++k) phi_[k] = 2.0 * std::numbers::pi * k / n_phi;
    const double dphi = 2.0 * std::numbers::pi / n_phi;
    nodes_.reserve(static_cast<std::size_t>(n_rings) * n_phi);
    weights_.reserve(static_cast<std::size_t>(n_rings) * n_phi);
    for (int i = 0; i < n_rings; ++i) {
      const double z = cos_theta_[i];
      const double s = std::sqrt((1.0 - z) * (1.0 + z));
      for (int k = 0; k < n_phi; ++k) {
        nodes_.emplace_back(s * std::cos(phi_[k]), s * std::sin(phi_[k]), z);
        weights_.push_back(ring_weights_[i] * dphi);
      }
    }
  }

  int band_limit() const { return band_limit_; }
  int ring_count() const { return band_limit_ + 1; }
  int longitude_count() const { return 2 * band_limit_ + 1; }
  std::size_t size() const { return nodes_.size(); }

  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& ring_cos_theta() const { return cos_theta_; }
  const std::vector<double>& ring_weights() const { return ring_weights_; }
  const std::vector<double>& longitudes() const { return phi_; }

  double theta(std::size_t node) const { return std::acos(cos_theta_[node / longitude_count()]); }
  double phi(std::size_t node) const { return phi_[node % longitude_count()]; }

  /// Quadrature of sampled values, one per node.
  double integrate(const Eigen::Ref<const Eigen::VectorXd>& samples) const {
    if (static_cast<std::size_t>(samples.size()) != size()) {
      throw std::length_error("SphericalGrid::integrate: sample count does not match node count");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < size(); ++i) acc += weights_[i] * samples[static_cast<Eigen::Index>(i)];
    return acc;
  }

 private:
  int band_limit_;
  std::vector<double> cos_theta_;
  std::vector<double> ring_weights_;
  std::vector<double> phi_;
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
};

inline SphericalGrid build_grid(int band_limit) { return SphericalGrid(band_limit); }

namespace detail {

struct TrigTable {
  Eigen::MatrixXd cos_mphi;  // (L+1) x n_phi
  Eigen::MatrixXd sin_mphi;
};

inline TrigTable trig_table(int band_limit, const std::vector<double>& phi) {
  const auto n_phi = static_cast<Eigen::Index>(phi.size());
  TrigTable t{Eigen::MatrixXd(band_limit + 1, n_phi), Eigen::MatrixXd(band_limit + 1, n_phi)};
  for (int m = 0; m <= band_limit; ++m) {
    for (Eigen::Index k = 0; k < n_phi; ++k) {
      t.cos_mphi(m, k) = std::cos(m * phi[static_cast<std::size_t>(k)]);
      t.sin_mphi(m, k) = std::sin(m * phi[static_cast<std::size_t>(k)]);
    }
  }
  return t;
}

}  // namespace detail

/// Quadrature analysis of column-stacked samples (nodes x columns):
/// row offset(l, m) of the result is sum_i w_i samples(i, :) Y_{l,m}(x_i).
inline Eigen::MatrixXd analyze(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                               const SphericalGrid& grid, int band_limit) {
  if (static_cast<std::size_t>(samples.rows()) != grid.size()) {
    throw std::length_error("analyze: " + std::to_string(samples.rows()) + " samples for " +
                            std::to_string(grid.size()) + " grid nodes");
  }
  if (band_limit < 0 || band_limit > grid.band_limit()) {
    throw std::invalid_argument("analyze: band limit " + std::to_string(band_limit) +
                                " not supported by grid of band limit " +
                                std::to_string(grid.band_limit()));
  }
  const Eigen::Index cols = samples.cols();
  const int n_phi = grid.longitude_count();
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  const auto trig = detail::trig_table(band_limit, grid.longitudes());
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(harmonic_count(band_limit)), cols);
  Eigen::MatrixXd fc(band_limit + 1, cols), fs(band_limit + 1, cols);
  for (int ring = 0; ring < grid.ring_count(); ++ring) {
    const auto block = samples.middleRows(static_cast<Eigen::Index>(ring) * n_phi, n_phi);
    fc.noalias() = trig.cos_mphi * block;
    fs.noalias() = trig.sin_mphi * block;
    const double z = grid.ring_cos_theta()[ring];
    const double s = std::sqrt((1.0 - z) * (1.0 + z));
    const double w = grid.ring_weights()[ring] * dphi;
    const auto table = normalized_legendre_table(band_limit, z, s);
    for (int l = 0; l <= band_limit; ++l) {
      coeffs.row(harmonic_offset(l, 0)) += (w * table[triangular_index(l, 0)]) * fc.row(0);
      for (int m = 1; m <= l; ++m) {
        const double p = w * std::numbers::sqrt2 * table[triangular_index(l, m)];
        coeffs.row(harmonic_offset(l, m)) += p * fc.row(m);
        coeffs.row(harmonic_offset(l, -m)) += p * fs.row(m);
      }
    }
  }
  return coeffs;
}

/// Inverse of analyze on the grid: samples(i, :) = sum_{l,m} coeffs(offset, :) Y_{l,m}(x_i).
inline Eigen::MatrixXd synthesize_on_grid(const Eigen::Ref<const Eigen::MatrixXd>& coeffs,
                                          int band_limit, const SphericalGrid& grid) {
  if (static_cast<std::size_t>(coeffs.rows()) != harmonic_count(band_limit)) {
    throw std::length_error("synthesize: coefficient table does not cover every (l, m) up to " +
                            std::to_string(band_limit));
  }
  if (band_limit > grid.band_limit()) {
    throw std::invalid_argument("synthesize: grid band limit " + std::to_string(grid.band_limit()) +
                                " below coefficient band limit " + std::to_string(band_limit));
  }
  const Eigen::Index cols = coeffs.cols();
  const int n_phi = grid.longitude_count();
  const auto trig = detail::trig_table(band_limit, grid.longitudes());
  Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), cols);
  Eigen::MatrixXd ac(band_limit + 1, cols), as(band_limit + 1, cols);
  for (int ring = 0; ring < grid.ring_count(); ++ring) {
    const double z = grid.ring_cos_theta()[ring];
    const double s = std::sqrt((1.0 - z) * (1.0 + z));
    const auto table = normalized_legendre_table(band_limit, z, s);
    ac.setZero();
    as.setZero();
    for (int l = 0; l <= band_limit; ++l) {
      ac.row(0) += table[triangular_index(l, 0)] * coeffs.row(harmonic_offset(l, 0));
      for (int m = 1; m <= l; ++m) {
        const double p = std::numbers::sqrt2 * table[triangular_index(l, m)];
        ac.row(m) += p * coeffs.row(harmonic_offset(l, m));
        as.row(m) += p * coeffs.row(harmonic_offset(l, -m));
      }
    }
    out.middleRows(static_cast<Eigen::Index>(ring) * n_phi, n_phi).noalias() =
        trig.cos_mphi.transpose() * ac + trig.sin_mphi.transpose() * as;
  }
  return out;
}

/// Evaluation of a band-limited expansion at arbitrary unit vectors.
inline Eigen::MatrixXd synthesize_at(const Eigen::Ref<const Eigen::MatrixXd>& coeffs, int band_limit,
                                     const std::vector<Vec3>& points) {
  if (static_cast<std::size_t>(coeffs.rows()) != harmonic_count(band_limit)) {
    throw std::length_error("synthesize: coefficient table does not cover every (l, m) up to " +
                            std::to_string(band_limit));
  }
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), coeffs.cols());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = sph_harm_all(band_limit, points[i]).transpose() * coeffs;
  }
  return out;
}

/// Scalar harmonic coefficients c_{l,m}, l <= band_limit, packed by HarmonicIndex::offset.
struct ScalarCoefficients {
  int band_limit = 0;
  Eigen::VectorXd values;

  double operator()(int ell, int m) const { return values[harmonic_offset(ell, m)]; }
  double& operator()(int ell, int m) { return values[harmonic_offset(ell, m)]; }
  double operator[](HarmonicIndex index) const { return values[index.offset()]; }

  static ScalarCoefficients zeros(int band_limit) {
    return {band_limit, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(harmonic_count(band_limit)))};
  }
};

inline ScalarCoefficients analyze_scalar(const Eigen::Ref<const Eigen::VectorXd>& samples,
                                         const SphericalGrid& grid, int band_limit) {
  return {band_limit, analyze(samples, grid, band_limit).col(0)};
}

inline Eigen::VectorXd synthesize_scalar(const ScalarCoefficients& coeffs, const std::vector<Vec3>& points) {
  return synthesize_at(coeffs.values, coeffs.band_limit, points).col(0);
}

inline Eigen::VectorXd synthesize_scalar(const ScalarCoefficients& coeffs, const SphericalGrid& grid) {
  return synthesize_on_grid(coeffs.values, coeffs.band_limit, grid).col(0);
}

}  // namespace sphfield
