#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/legendre.hpp"

namespace sphfield {

/// d-dimensional stand-in for the separable Hilbert space. Coordinates are
/// taken in an orthonormal basis; labels name those basis elements when the
/// space is read as L^2([0,1]).
class TruncatedSpace {
 public:
  explicit TruncatedSpace(int dim, std::vector<std::string> labels = {})
      : dim_(dim), labels_(std::move(labels)) {
    if (dim < 1) throw std::invalid_argument("TruncatedSpace: dimension must be >= 1");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != dim) {
      throw std::length_error("TruncatedSpace: need one label per basis element");
    }
  }

  /// L^2([0,1]) truncated to the first d shifted Legendre functions.
  static TruncatedSpace shifted_legendre(int dim) {
    std::vector<std::string> labels;
    for (int j = 0; j < dim; ++j) labels.push_back("shifted_legendre_" + std::to_string(j));
    return TruncatedSpace(dim, std::move(labels));
  }

  int dim() const { return dim_; }
  const std::vector<std::string>& labels() const { return labels_; }

  friend bool operator==(const TruncatedSpace&, const TruncatedSpace&) = default;

 private:
  int dim_;
  std::vector<std::string> labels_;
};

/// Orthonormal basis phi_j(u) = sqrt(2j - 1) P_{j-1}(2u - 1) of L^2([0,1]),
/// j = 1, 2, ...
inline double shifted_legendre_function(int j, double u) {
  if (j < 1) throw std::domain_error("shifted_legendre_function: index starts at 1");
  if (!(u >= 0.0 && u <= 1.0)) throw std::domain_error("shifted_legendre_function: u outside [0, 1]");
  return std::sqrt(2.0 * j - 1.0) * legendre(j - 1, 2.0 * u - 1.0);
}

/// Linear operator on a truncated space, stored as a d x d matrix in the
/// canonical coordinates.
class OperatorOnH {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit OperatorOnH(Eigen::MatrixXd entries, bool self_adjoint = false)
      : entries_(std::move(entries)), self_adjoint_(self_adjoint) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1) {
      throw std::length_error("OperatorOnH: entries must be a non-empty square matrix");
    }
    if (self_adjoint_) {
      const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
      if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
        throw std::domain_error("OperatorOnH: entries flagged self-adjoint are not symmetric");
      }
      entries_ = 0.5 * (entries_ + entries_.transpose()).eval();
    }
  }

  static OperatorOnH zero(int dim) { return OperatorOnH(Eigen::MatrixXd::Zero(dim, dim), true); }
  static OperatorOnH identity(int dim) { return OperatorOnH(Eigen::MatrixXd::Identity(dim, dim), true); }

  int dim() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }
  bool self_adjoint() const { return self_adjoint_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (f.size() != entries_.cols()) throw std::length_error("OperatorOnH::apply: dimension mismatch");
    return entries_ * f;
  }

 private:
  Eigen::MatrixXd entries_;
  bool self_adjoint_;
};

inline OperatorOnH operator+(const OperatorOnH& a, const OperatorOnH& b) {
  if (a.dim() != b.dim()) throw std::length_error("OperatorOnH: dimension mismatch");
  return OperatorOnH(a.entries() + b.entries(), a.self_adjoint() && b.self_adjoint());
}

inline OperatorOnH operator-(const OperatorOnH& a, const OperatorOnH& b) {
  if (a.dim() != b.dim()) throw std::length_error("OperatorOnH: dimension mismatch");
  return OperatorOnH(a.entries() - b.entries(), a.self_adjoint() && b.self_adjoint());
}

inline OperatorOnH operator*(double s, const OperatorOnH& a) {
  return OperatorOnH(s * a.entries(), a.self_adjoint());
}

/// Singular values in descending order. Self-adjoint operators go through a
/// symmetric eigendecomposition (|eigenvalues|), others through an SVD.
inline Eigen::VectorXd singular_values(const OperatorOnH& op) {
  if (!op.entries().allFinite()) throw std::domain_error("singular_values: non-finite entries");
  Eigen::VectorXd sv;
  if (op.self_adjoint()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(op.entries(), Eigen::EigenvaluesOnly);
    sv = eig.eigenvalues().cwiseAbs();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.entries());
    sv = svd.singularValues();
  }
  std::sort(sv.data(), sv.data() + sv.size(), std::greater<>());
  return sv;
}

/// Schatten p-norm (sum sigma_i^p)^(1/p); p = infinity gives the operator norm.
inline double schatten_norm(const OperatorOnH& op, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("schatten_norm: p must be >= 1");
  const Eigen::VectorXd sv = singular_values(op);
  const double top = sv.size() > 0 ? sv[0] : 0.0;
  if (std::isinf(p)) return top;
  if (p == 2.0) return op.entries().norm();
  if (top == 0.0) return 0.0;
  // eigen-solver noise on (numerically) zero singular values would otherwise
  // leak into low-p norms
  const double floor = p < 2.0 ? 1e-13 * top : 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > floor) acc += std::pow(sv[i] / top, p);
  }
  return top * std::pow(acc, 1.0 / p);
}

inline double nuclear_norm(const OperatorOnH& op) { return schatten_norm(op, 1.0); }
inline double hilbert_schmidt_norm(const OperatorOnH& op) { return schatten_norm(op, 2.0); }
inline double operator_norm(const OperatorOnH& op) {
  return schatten_norm(op, std::numeric_limits<double>::infinity());
}

inline double trace(const OperatorOnH& op) { return op.entries().trace(); }

/// u (x) v : f -> u <f, v>.
inline OperatorOnH outer_product(const Eigen::Ref<const Eigen::VectorXd>& u,
                                 const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (u.size() != v.size()) throw std::length_error("outer_product: dimension mismatch");
  const bool symmetric = (u.array() == v.array()).all();
  return OperatorOnH(u * v.transpose(), symmetric);
}

/// <A, B>_2 = Tr(A B^*) = sum of entrywise products.
inline double hs_inner(const OperatorOnH& a, const OperatorOnH& b) {
  if (a.dim() != b.dim()) throw std::length_error("hs_inner: dimension mismatch");
  return a.entries().cwiseProduct(b.entries()).sum();
}

/// Orthonormality check for the columns of a frame.
inline bool is_orthonormal(const Eigen::Ref<const Eigen::MatrixXd>& frame, double tol = 1e-10) {
  if (frame.rows() != frame.cols()) return false;
  const Eigen::MatrixXd gram = frame.transpose() * frame;
  return (gram - Eigen::MatrixXd::Identity(frame.cols(), frame.cols())).cwiseAbs().maxCoeff() <= tol;
}

/// Element E_{j,j'} of the symmetric Hilbert-Schmidt basis built from an
/// orthonormal frame {e_j} (1-based, j >= j'):
///   E_{j,j}  = e_j (x) e_j
///   E_{j,j'} = (e_j (x) e_j' + e_j' (x) e_j) / sqrt(2)
struct SymBasisElement {
  int j;
  int j_prime;
  OperatorOnH op;
};

namespace detail {

inline Eigen::MatrixXd sym_basis_entries(int j, int jp, const Eigen::Ref<const Eigen::MatrixXd>& frame) {
  const auto ej = frame.col(j - 1);
  const auto ejp = frame.col(jp - 1);
  if (j == jp) return ej * ej.transpose();
  return (ej * ejp.transpose() + ejp * ej.transpose()) / std::numbers::sqrt2;
}

}  // namespace detail

inline SymBasisElement sym_basis(int j, int j_prime, const Eigen::Ref<const Eigen::MatrixXd>& frame) {
  if (j_prime < 1 || j < j_prime) throw std::invalid_argument("sym_basis: need j >= j' >= 1");
  if (j > frame.cols()) throw std::out_of_range("sym_basis: index beyond frame dimension");
  if (!is_orthonormal(frame)) throw std::domain_error("sym_basis: frame is not orthonormal");
  return {j, j_prime, OperatorOnH(detail::sym_basis_entries(j, j_prime, frame), true)};
}

/// Coordinates <A, E_{j,j'}>_2 of a symmetric operator, ordered like
/// sym_pairs(d).
struct SymPair {
  int j;
  int j_prime;
};

inline std::vector<SymPair> sym_pairs(int dim) {
  std::vector<SymPair> pairs;
  pairs.reserve(static_cast<std::size_t>(dim) * (dim + 1) / 2);
  for (int j = 1; j <= dim; ++j) {
    for (int jp = 1; jp <= j; ++jp) pairs.push_back({j, jp});
  }
  return pairs;
}

inline Eigen::VectorXd sym_coordinates(const OperatorOnH& op, const Eigen::Ref<const Eigen::MatrixXd>& frame) {
  const Eigen::MatrixXd rotated = frame.transpose() * op.entries() * frame;
  const auto pairs = sym_pairs(op.dim());
  Eigen::VectorXd coords(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [j, jp] = pairs[k];
    coords[static_cast<Eigen::Index>(k)] =
        j == jp ? rotated(j - 1, j - 1)
                : (rotated(j - 1, jp - 1) + rotated(jp - 1, j - 1)) / std::numbers::sqrt2;
  }
  return coords;
}

inline OperatorOnH from_sym_coordinates(const Eigen::Ref<const Eigen::VectorXd>& coords,
                                        const Eigen::Ref<const Eigen::MatrixXd>& frame) {
  const int dim = static_cast<int>(frame.cols());
  const auto pairs = sym_pairs(dim);
  if (static_cast<std::size_t>(coords.size()) != pairs.size()) {
    throw std::length_error("from_sym_coordinates: need d(d+1)/2 coordinates");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    m += coords[static_cast<Eigen::Index>(k)] * detail::sym_basis_entries(pairs[k].j, pairs[k].j_prime, frame);
  }
  return OperatorOnH(m, true);
}

/// Covariance operator of sqrt(2l+1)(F_hat_l - F_l) on self-adjoint
/// Hilbert-Schmidt operators. Diagonal in the E_{j,j'} basis with
/// eigenvalue 2 lambda_j lambda_j', and kept in that form only.
class CltCovariance {
 public:
  struct Eigenpair {
    int j;
    int j_prime;
    double variance;
  };

  CltCovariance(int ell, Eigen::VectorXd eigenvalues, Eigen::MatrixXd frame)
      : ell_(ell), lambda_(std::move(eigenvalues)), frame_(std::move(frame)) {
    if (lambda_.size() != frame_.cols()) throw std::length_error("CltCovariance: eigenvalue/frame mismatch");
    if ((lambda_.array() < 0.0).any()) throw std::domain_error("CltCovariance: negative eigenvalue");
    if (!is_orthonormal(frame_)) throw std::domain_error("CltCovariance: frame is not orthonormal");
    for (const auto [j, jp] : sym_pairs(static_cast<int>(lambda_.size()))) {
      pairs_.push_back({j, jp, 2.0 * lambda_[j - 1] * lambda_[jp - 1]});
    }
  }

  int ell() const { return ell_; }
  const std::vector<Eigenpair>& eigenpairs() const { return pairs_; }
  const Eigen::MatrixXd& frame() const { return frame_; }

  SymBasisElement basis_element(std::size_t k) const {
    return sym_basis(pairs_.at(k).j, pairs_.at(k).j_prime, frame_);
  }

  double trace() const {
    double acc = 0.0;
    for (const auto& p : pairs_) acc += p.variance;
    return acc;
  }

  double hs_norm_squared() const {
    double acc = 0.0;
    for (const auto& p : pairs_) acc += p.variance * p.variance;
    return acc;
  }

  /// S(B) = sum_k variance_k <B, E_k>_2 E_k.
  OperatorOnH apply(const OperatorOnH& b) const {
    Eigen::VectorXd coords = sym_coordinates(b, frame_);
    for (std::size_t k = 0; k < pairs_.size(); ++k) coords[static_cast<Eigen::Index>(k)] *= pairs_[k].variance;
    return from_sym_coordinates(coords, frame_);
  }

 private:
  int ell_;
  Eigen::VectorXd lambda_;
  Eigen::MatrixXd frame_;
  std::vector<Eigenpair> pairs_;
};

inline CltCovariance clt_covariance(int ell, const Eigen::Ref<const Eigen::VectorXd>& eigenvalues,
                                    const Eigen::Ref<const Eigen::MatrixXd>& frame) {
  return CltCovariance(ell, eigenvalues, frame);
}

/// Integral kernel k(u, v) of an operator on L^2([0,1]) expressed in the
/// shifted Legendre basis: (A g)(u) = int_0^1 k(u, v) g(v) dv.
inline double kernel_value(const OperatorOnH& op, double u, double v) {
  const int d = op.dim();
  Eigen::VectorXd pu(d), pv(d);
  for (int j = 1; j <= d; ++j) {
    pu[j - 1] = shifted_legendre_function(j, u);
    pv[j - 1] = shifted_legendre_function(j, v);
  }
  return pu.dot(op.entries() * pv);
}

}  // namespace sphfield
