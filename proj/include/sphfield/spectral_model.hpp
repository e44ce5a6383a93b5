#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/legendre.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/rng.hpp"

namespace sphfield {

enum class FrameMode { canonical, random_orthogonal };

struct FrameSpec {
  FrameMode mode = FrameMode::canonical;
  std::uint64_t seed = 0;
};

/// Haar-distributed orthogonal d x d matrix from seeded Gaussian entries
/// (QR with the sign of diag(R) folded into Q). The stream is keyed by
/// (seed, l) so each degree gets its own frame.
inline Eigen::MatrixXd random_orthogonal_frame(int dim, std::uint64_t seed, int ell) {
  Eigen::MatrixXd g(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      g(r, c) = standard_normal({seed, 0, ell, r, c, StreamDomain::frames});
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < dim; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

/// Ground-truth power spectrum operators F_l = sum_j lambda_{j;l} e_{j;l} (x) e_{j;l}
/// for l = 0..band_limit, band-limited (F_l = 0 beyond).
class SpectralModel {
 public:
  /// `lambda` is (band_limit + 1) x d: row l holds lambda_{1;l}..lambda_{d;l}.
  SpectralModel(Eigen::MatrixXd lambda, std::vector<Eigen::MatrixXd> frames, TruncatedSpace space)
      : lambda_(std::move(lambda)), frames_(std::move(frames)), space_(std::move(space)) {
    if (lambda_.rows() < 1) throw std::invalid_argument("SpectralModel: empty eigenvalue table");
    if (lambda_.cols() != space_.dim()) {
      throw std::length_error("SpectralModel: eigenvalue table width differs from space dimension");
    }
    if (!lambda_.allFinite() || (lambda_.array() < 0.0).any()) {
      throw std::domain_error("SpectralModel: eigenvalues must be finite and nonnegative");
    }
    if (static_cast<Eigen::Index>(frames_.size()) != lambda_.rows()) {
      throw std::length_error("SpectralModel: need one eigenvector frame per degree");
    }
    for (const auto& f : frames_) {
      if (f.rows() != space_.dim() || f.cols() != space_.dim() || !is_orthonormal(f)) {
        throw std::domain_error("SpectralModel: eigenvector frame is not an orthonormal d x d matrix");
      }
    }
  }

  /// Eigenvalue table with frames generated per `spec`.
  static SpectralModel from_table(Eigen::MatrixXd lambda, FrameSpec spec) {
    const int d = static_cast<int>(lambda.cols());
    if (d < 1) throw std::invalid_argument("SpectralModel: dimension must be >= 1");
    std::vector<Eigen::MatrixXd> frames;
    for (Eigen::Index l = 0; l < lambda.rows(); ++l) {
      frames.push_back(spec.mode == FrameMode::canonical
                           ? Eigen::MatrixXd::Identity(d, d).eval()
                           : random_orthogonal_frame(d, spec.seed, static_cast<int>(l)));
    }
    return SpectralModel(std::move(lambda), std::move(frames), TruncatedSpace::shifted_legendre(d));
  }

  int band_limit() const { return static_cast<int>(lambda_.rows()) - 1; }
  int dim() const { return space_.dim(); }
  const TruncatedSpace& space() const { return space_; }
  const Eigen::MatrixXd& lambda_table() const { return lambda_; }

  /// lambda_{j;l}, j 1-based.
  double lambda(int j, int ell) const { return lambda_(check_ell(ell), j - 1); }
  Eigen::VectorXd eigenvalues(int ell) const { return lambda_.row(check_ell(ell)).transpose(); }
  const Eigen::MatrixXd& frame(int ell) const { return frames_[static_cast<std::size_t>(check_ell(ell))]; }

  /// True when F_l is the zero operator.
  bool degenerate(int ell) const { return lambda_.row(check_ell(ell)).maxCoeff() == 0.0; }

 private:
  int check_ell(int ell) const {
    if (ell < 0 || ell > band_limit()) {
      throw std::out_of_range("SpectralModel: degree " + std::to_string(ell) + " outside [0, " +
                              std::to_string(band_limit()) + "]");
    }
    return ell;
  }

  Eigen::MatrixXd lambda_;
  std::vector<Eigen::MatrixXd> frames_;
  TruncatedSpace space_;
};

/// lambda_{j;l} = A (1 + l)^(-alpha) (1 + j)^(-beta).
inline SpectralModel make_powerlaw_model(int band_limit, int dim, double amplitude, double alpha, double beta,
                                         FrameSpec frames = {}) {
  if (band_limit < 0) throw std::invalid_argument("make_powerlaw_model: negative band limit");
  if (dim < 1) throw std::invalid_argument("make_powerlaw_model: dimension must be >= 1");
  if (!(amplitude > 0.0)) throw std::invalid_argument("make_powerlaw_model: amplitude must be positive");
  if (!(alpha > 2.0)) throw std::invalid_argument("make_powerlaw_model: alpha must exceed 2");
  if (!(beta > 1.0)) throw std::invalid_argument("make_powerlaw_model: beta must exceed 1");
  Eigen::MatrixXd lambda(band_limit + 1, dim);
  for (int l = 0; l <= band_limit; ++l) {
    for (int j = 1; j <= dim; ++j) {
      lambda(l, j - 1) = amplitude * std::pow(1.0 + l, -alpha) * std::pow(1.0 + j, -beta);
    }
  }
  return SpectralModel::from_table(std::move(lambda), frames);
}

/// F_l as an operator on the truncated space.
inline OperatorOnH power_spectrum_operator(const SpectralModel& model, int ell) {
  const Eigen::MatrixXd& e = model.frame(ell);
  const Eigen::VectorXd lambda = model.eigenvalues(ell);
  return OperatorOnH(e * lambda.asDiagonal() * e.transpose(), true);
}

/// C_l = ||F_l||_1 = sum_j lambda_{j;l}.
struct ReducedSpectrum {
  std::vector<double> values;
};

inline ReducedSpectrum reduced_spectrum(const SpectralModel& model) {
  ReducedSpectrum out;
  out.values.reserve(static_cast<std::size_t>(model.band_limit()) + 1);
  for (int l = 0; l <= model.band_limit(); ++l) out.values.push_back(model.lambda_table().row(l).sum());
  return out;
}

/// E||T(x)||^2 = ||R_1||_1 = sum_l C_l (2l+1) / (4 pi).
inline double field_variance(const SpectralModel& model) {
  const auto c = reduced_spectrum(model).values;
  double acc = 0.0;
  for (std::size_t l = 0; l < c.size(); ++l) acc += c[l] * (2.0 * l + 1.0) / (4.0 * std::numbers::pi);
  return acc;
}

/// Sum over l > l_trunc of C_l (2l+1)/(4 pi): bound on the nuclear-norm
/// error of the truncated covariance expansion, uniformly in t.
inline double schoenberg_tail_bound(const SpectralModel& model, int l_trunc) {
  const auto c = reduced_spectrum(model).values;
  double acc = 0.0;
  for (int l = std::max(l_trunc + 1, 0); l <= model.band_limit(); ++l) {
    acc += c[static_cast<std::size_t>(l)] * (2.0 * l + 1.0) / (4.0 * std::numbers::pi);
  }
  return acc;
}

/// R_t = sum_{l <= l_trunc} F_l (2l+1)/(4 pi) P_l(t), the covariance between
/// field values at two points with <x, y> = t.
inline OperatorOnH kernel_reconstruct(const SpectralModel& model, double t, int l_trunc) {
  if (!(std::abs(t) <= 1.0)) throw std::domain_error("kernel_reconstruct: t outside [-1, 1]");
  if (l_trunc < 0 || l_trunc > model.band_limit()) {
    throw std::out_of_range("kernel_reconstruct: truncation degree outside [0, L_max]");
  }
  const auto p = legendre_all(l_trunc, t).values;
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  for (int l = 0; l <= l_trunc; ++l) {
    const double w = (2.0 * l + 1.0) / (4.0 * std::numbers::pi) * p[static_cast<std::size_t>(l)];
    const Eigen::MatrixXd& e = model.frame(l);
    r += w * (e * model.eigenvalues(l).asDiagonal() * e.transpose());
  }
  return OperatorOnH(r, true);
}

inline OperatorOnH kernel_reconstruct(const SpectralModel& model, double t) {
  return kernel_reconstruct(model, t, model.band_limit());
}

/// E||T(x) - T(y)||^2 = 2 ||R_1||_1 - 2 Tr(R_t) for <x, y> = t.
inline double mean_square_continuity_modulus(const SpectralModel& model, double t) {
  if (!(std::abs(t) <= 1.0)) throw std::domain_error("mean_square_continuity_modulus: t outside [-1, 1]");
  const double r1 = nuclear_norm(kernel_reconstruct(model, 1.0));
  const double value = 2.0 * r1 - 2.0 * trace(kernel_reconstruct(model, t));
  return std::max(0.0, value);
}

/// n equispaced points on [-1, 1], endpoints included.
inline std::vector<double> t_grid(int n = 201) {
  if (n < 2) throw std::invalid_argument("t_grid: need at least two points");
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[static_cast<std::size_t>(i)] = -1.0 + 2.0 * i / (n - 1);
  t.back() = 1.0;
  return t;
}

}  // namespace sphfield
