#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/harmonics.hpp"
#include "sphfield/parallel.hpp"
#include "sphfield/rng.hpp"
#include "sphfield/spectral_model.hpp"

namespace sphfield {

/// Harmonic coefficients a_{l,m} in R^d for every l <= band_limit; row
/// harmonic_offset(l, m) of `vectors` holds a_{l,m}.
struct CoefficientSet {
  int band_limit = 0;
  int dim = 1;
  Eigen::MatrixXd vectors;

  static CoefficientSet zeros(int band_limit, int dim) {
    return {band_limit, dim, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(harmonic_count(band_limit)), dim)};
  }

  auto operator()(int ell, int m) { return vectors.row(static_cast<Eigen::Index>(harmonic_offset(ell, m))); }
  auto operator()(int ell, int m) const {
    return vectors.row(static_cast<Eigen::Index>(harmonic_offset(ell, m)));
  }

  /// The 2l+1 rows a_{l,-l}..a_{l,l}.
  auto degree_block(int ell) const {
    if (ell < 0 || ell > band_limit) {
      throw std::out_of_range("CoefficientSet: degree " + std::to_string(ell) + " outside [0, " +
                              std::to_string(band_limit) + "]");
    }
    return vectors.middleRows(static_cast<Eigen::Index>(ell) * ell, 2 * ell + 1);
  }

  friend bool operator==(const CoefficientSet& a, const CoefficientSet& b) {
    return a.band_limit == b.band_limit && a.dim == b.dim && a.vectors == b.vectors;
  }
};

/// Field values T(x_i) in R^d at every grid node (row i).
struct FieldRealization {
  SphericalGrid grid;
  Eigen::MatrixXd values;
};

/// Draws a_{l,-l}..a_{l,l} for one degree of one replicate:
///   a_{l,m} = sum_j sqrt(lambda_{j;l}) xi_{l,m,j} e_{j;l},
/// xi standard normal keyed by (master_seed, replicate, l, m, j). The same
/// key always yields the same row, whichever degrees are drawn alongside it.
///
/// `lambda_scale` multiplies every eigenvalue; anything but 1 is a
/// deliberate fault used to check that verification catches a wrong sampler.
inline Eigen::MatrixXd draw_degree(const SpectralModel& model, std::uint64_t master_seed,
                                   std::uint32_t replicate, int ell, double lambda_scale = 1.0) {
  const int d = model.dim();
  const Eigen::MatrixXd& e = model.frame(ell);
  Eigen::VectorXd sd(d);
  for (int j = 1; j <= d; ++j) sd[j - 1] = std::sqrt(lambda_scale * model.lambda(j, ell));
  Eigen::MatrixXd xi(2 * ell + 1, d);
  for (int m = -ell; m <= ell; ++m) {
    for (int j = 1; j <= d; ++j) {
      xi(m + ell, j - 1) = sd[j - 1] == 0.0
                               ? 0.0
                               : sd[j - 1] * standard_normal({master_seed, replicate, ell, m, j,
                                                              StreamDomain::coefficients});
    }
  }
  // row m: (E diag(sd) xi_m)^T
  return xi * e.transpose();
}

inline CoefficientSet draw_coefficients(const SpectralModel& model, std::uint64_t master_seed,
                                        std::uint32_t replicate, double lambda_scale = 1.0) {
  auto out = CoefficientSet::zeros(model.band_limit(), model.dim());
  for (int l = 0; l <= model.band_limit(); ++l) {
    out.vectors.middleRows(static_cast<Eigen::Index>(l) * l, 2 * l + 1) =
        draw_degree(model, master_seed, replicate, l, lambda_scale);
  }
  return out;
}

/// Replicates 0..count-1, generated in parallel. Replicate k depends only on
/// (model, master_seed, k).
inline std::vector<CoefficientSet> replicate_stream(const SpectralModel& model, std::uint64_t master_seed,
                                                    int count, unsigned threads = 1) {
  if (count <= 0) throw std::invalid_argument("replicate_stream: replicate count must be positive");
  std::vector<CoefficientSet> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), threads, [&](std::size_t k) {
    out[k] = draw_coefficients(model, master_seed, static_cast<std::uint32_t>(k));
  });
  return out;
}

/// T(x_i) = sum_{l,m} a_{l,m} Y_{l,m}(x_i) at every grid node, one scalar
/// synthesis per coordinate.
inline FieldRealization synthesize_field(const CoefficientSet& coeffs, const SphericalGrid& grid) {
  if (grid.band_limit() < coeffs.band_limit) {
    throw std::invalid_argument("synthesize_field: grid band limit " + std::to_string(grid.band_limit()) +
                                " below coefficient band limit " + std::to_string(coeffs.band_limit));
  }
  return {grid, synthesize_on_grid(coeffs.vectors, coeffs.band_limit, grid)};
}

/// T(x) at arbitrary unit vectors (row per point).
inline Eigen::MatrixXd synthesize_field_at(const CoefficientSet& coeffs, const std::vector<Vec3>& points) {
  return synthesize_at(coeffs.vectors, coeffs.band_limit, points);
}

}  // namespace sphfield
