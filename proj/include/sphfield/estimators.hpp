#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "sphfield/errors.hpp"
#include "sphfield/harmonics.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/sampler.hpp"
#include "sphfield/spectral_model.hpp"

namespace sphfield {

/// a_{l,m} = int T(x) Y_{l,m}(x) dx by grid quadrature, per coordinate.
inline CoefficientSet analyze_field(const FieldRealization& field, int band_limit) {
  if (band_limit > field.grid.band_limit()) {
    throw std::invalid_argument("analyze_field: band limit " + std::to_string(band_limit) +
                                " exceeds grid band limit " + std::to_string(field.grid.band_limit()));
  }
  return {band_limit, static_cast<int>(field.values.cols()), analyze(field.values, field.grid, band_limit)};
}

/// F_hat_l = (2l+1)^{-1} sum_m a_{l,m} (x) a_{l,m}.
struct SamplePowerSpectrum {
  int ell;
  OperatorOnH op;
  int dof;
};

/// Same estimator on a raw (2l+1) x d block of coefficient rows.
inline Eigen::MatrixXd sample_power_spectrum_entries(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  return block.transpose() * block / static_cast<double>(block.rows());
}

inline SamplePowerSpectrum sample_power_spectrum(const CoefficientSet& coeffs, int ell) {
  const Eigen::MatrixXd block = coeffs.degree_block(ell);
  return {ell, OperatorOnH(sample_power_spectrum_entries(block), true), 2 * ell + 1};
}

/// C_hat_l = (2l+1)^{-1} sum_m ||a_{l,m}||^2.
inline double reduced_estimator(const CoefficientSet& coeffs, int ell) {
  const auto block = coeffs.degree_block(ell);
  return block.squaredNorm() / (2.0 * ell + 1.0);
}

/// Normalized deviations at degree l:
///   operator_stat = sqrt((2l+1) / (||F_l||_2^2 + C_l^2)) (F_hat_l - F_l)
///   scalar_stat   = sqrt((2l+1) / (2 ||F_l||_2^2)) (C_hat_l - C_l)
struct NormalizedStatistic {
  int ell;
  OperatorOnH operator_stat;
  double scalar_stat;
};

/// Normalizing constants of NormalizedStatistic; throws DegenerateError when
/// F_l = 0.
struct StatisticScales {
  double operator_scale;
  double scalar_scale;
  double reduced;
  Eigen::MatrixXd truth;
};

inline StatisticScales statistic_scales(const SpectralModel& model, int ell) {
  if (model.degenerate(ell)) {
    throw DegenerateError("normalized statistic undefined at degree " + std::to_string(ell) +
                          ": power spectrum operator is zero");
  }
  const Eigen::VectorXd lambda = model.eigenvalues(ell);
  const double hs2 = lambda.squaredNorm();
  const double c = lambda.sum();
  const double dof = 2.0 * ell + 1.0;
  return {std::sqrt(dof / (hs2 + c * c)), std::sqrt(dof / (2.0 * hs2)), c,
          power_spectrum_operator(model, ell).entries()};
}

inline NormalizedStatistic normalized_statistic(const CoefficientSet& coeffs, const SpectralModel& model, int ell) {
  const auto scales = statistic_scales(model, ell);
  const auto fhat = sample_power_spectrum(coeffs, ell);
  const double chat = reduced_estimator(coeffs, ell);
  return {ell, OperatorOnH(scales.operator_scale * (fhat.op.entries() - scales.truth), true),
          scales.scalar_scale * (chat - scales.reduced)};
}

}  // namespace sphfield
