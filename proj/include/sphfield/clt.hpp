#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sphfield/errors.hpp"
#include "sphfield/estimators.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/parallel.hpp"
#include "sphfield/rng.hpp"
#include "sphfield/sampler.hpp"
#include "sphfield/spectral_model.hpp"
#include "sphfield/stats.hpp"

namespace sphfield {

/// Closed-form moments, cumulants and CLT bounds at one degree.
struct TheoreticalQuantities {
  int ell = 0;
  double hs_norm_sq = 0.0;      // ||F_l||_2^2
  double trace_sq = 0.0;        // C_l^2
  double s4_norm4 = 0.0;        // ||F_l||_4^4
  double mse = 0.0;             // E||F_hat_l - F_l||_2^2
  double fourth_moment_a = 0.0; // E||a_{l,m}||^4
  double d2_bound_exact = 0.0;
  double d2_bound_simplified = 0.0;
  double tv_bound = 0.0;
  double cum4_reduced = 0.0;    // 4th cumulant of the normalized reduced statistic
};

namespace detail {

// (1 + sqrt 3) / (2 sqrt 3)
inline const double kD2Constant = (1.0 + std::sqrt(3.0)) / (2.0 * std::sqrt(3.0));

}  // namespace detail

/// d_2 bound depending only on l: the worst case over all spectra, attained
/// by rank-one F_l.
inline double d2_bound_simplified(int ell) {
  const double q = 12.0 / (2.0 * ell + 1.0);
  return detail::kD2Constant * std::sqrt((q + 3.0) * q);
}

inline double tv_bound(int ell) { return std::sqrt(8.0 / (2.0 * ell + 1.0)); }

/// (||F_l||_2^2 + C_l^2) / (2l+1).
inline double mse_theoretical(const SpectralModel& model, int ell) {
  const Eigen::VectorXd lambda = model.eigenvalues(ell);
  const double c = lambda.sum();
  return (lambda.squaredNorm() + c * c) / (2.0 * ell + 1.0);
}

/// All quantities from the eigenvalues of F_l. With
///   N   = ||F||_2^2 + C^2
///   q   = 12/(2l+1) (3||F||_4^4 + ||F||_2^4) / N^2
///   b   = q + 1 + 4 (||F||_4^4 + ||F||_2^4) / N^2
/// the exact d_2 bound is c sqrt(b q), c = (1 + sqrt 3)/(2 sqrt 3).
inline TheoreticalQuantities theoretical_from_eigenvalues(int ell, const Eigen::Ref<const Eigen::VectorXd>& lambda) {
  if (ell < 0) throw std::out_of_range("theoretical: negative degree");
  if ((lambda.array() < 0.0).any()) throw std::domain_error("theoretical: negative eigenvalue");
  TheoreticalQuantities t;
  t.ell = ell;
  t.hs_norm_sq = lambda.squaredNorm();
  if (!(t.hs_norm_sq > 0.0)) {
    throw DegenerateError("theoretical: power spectrum operator vanishes at degree " + std::to_string(ell));
  }
  const double c = lambda.sum();
  t.trace_sq = c * c;
  t.s4_norm4 = lambda.array().pow(4).sum();
  const double dof = 2.0 * ell + 1.0;
  const double hs4 = t.hs_norm_sq * t.hs_norm_sq;
  const double norm_sq = (t.hs_norm_sq + t.trace_sq) * (t.hs_norm_sq + t.trace_sq);
  t.mse = (t.hs_norm_sq + t.trace_sq) / dof;
  t.fourth_moment_a = 2.0 * t.hs_norm_sq + t.trace_sq;
  const double q = 12.0 / dof * (3.0 * t.s4_norm4 + hs4) / norm_sq;
  const double bracket = q + 1.0 + 4.0 * (t.s4_norm4 + hs4) / norm_sq;
  t.d2_bound_exact = detail::kD2Constant * std::sqrt(bracket * q);
  t.d2_bound_simplified = d2_bound_simplified(ell);
  t.tv_bound = tv_bound(ell);
  t.cum4_reduced = 12.0 / dof * t.s4_norm4 / hs4;
  return t;
}

inline TheoreticalQuantities theoretical(const SpectralModel& model, int ell) {
  return theoretical_from_eigenvalues(ell, model.eigenvalues(ell));
}

// ---------------------------------------------------------------------------
// d_2 lower proxy
//
// For a unit Hilbert-Schmidt probe B, h_B(A) = cos(<A, B>_2) satisfies
// |h_B| <= 1, ||Dh_B|| <= ||B||_2 = 1 and ||D^2 h_B|| <= ||B||_2^2 = 1, so it
// belongs to the unit ball of C_b^2 whichever of the usual norm conventions
// (max or sum of the three sup-norms, up to a factor 3) is used. Taking the
// max over such a finite dictionary gives a lower bound on d_2 (divide by 3
// under the sum convention; the check below uses the raw value, which is the
// stronger test).
// ---------------------------------------------------------------------------

struct D2ProxyResult {
  double value = 0.0;
  double se = 0.0;
  std::vector<double> per_probe;
};

/// Seeded symmetric probes with unit Hilbert-Schmidt norm.
inline std::vector<Eigen::MatrixXd> unit_hs_probes(int dim, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("d2_proxy: need at least one probe");
  std::vector<Eigen::MatrixXd> probes;
  probes.reserve(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    Eigen::MatrixXd b(dim, dim);
    for (int i = 0; i < dim; ++i) {
      for (int k = 0; k <= i; ++k) {
        b(i, k) = standard_normal({seed, static_cast<std::uint32_t>(p), i, k, 0, StreamDomain::probes});
        b(k, i) = b(i, k);
      }
    }
    probes.push_back(b / b.norm());
  }
  return probes;
}

/// Independent draws of the Gaussian target Z_l: centered, covariance
/// S_l / (||F_l||_2^2 + C_l^2), sampled directly in the E_{j,j'} eigenbasis.
inline std::vector<Eigen::MatrixXd> reference_samples(const SpectralModel& model, int ell, int count,
                                                      std::uint64_t seed, unsigned threads = 1) {
  if (count < 1) throw std::invalid_argument("reference_samples: need at least one sample");
  const auto t = theoretical(model, ell);
  const CltCovariance cov(ell, model.eigenvalues(ell), model.frame(ell));
  const double norm = t.hs_norm_sq + t.trace_sq;
  std::vector<Eigen::MatrixXd> basis;
  std::vector<double> sd;
  for (std::size_t k = 0; k < cov.eigenpairs().size(); ++k) {
    basis.push_back(cov.basis_element(k).op.entries());
    sd.push_back(std::sqrt(cov.eigenpairs()[k].variance / norm));
  }
  std::vector<Eigen::MatrixXd> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(model.dim(), model.dim());
    for (std::size_t k = 0; k < basis.size(); ++k) {
      if (sd[k] == 0.0) continue;
      z += sd[k] * standard_normal({seed, static_cast<std::uint32_t>(r), ell, static_cast<std::int32_t>(k), 0,
                                    StreamDomain::reference}) *
           basis[k];
    }
    out[r] = std::move(z);
  });
  return out;
}

/// max_B |mean h_B(a) - mean h_B(b)| over the probe dictionary, with the
/// standard error of the maximizing probe.
inline D2ProxyResult d2_proxy_between(std::span<const Eigen::MatrixXd> a, std::span<const Eigen::MatrixXd> b,
                                      const std::vector<Eigen::MatrixXd>& probes) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("d2_proxy: need at least two samples per law");
  if (probes.empty()) throw std::invalid_argument("d2_proxy: need at least one probe");
  auto cos_values = [](std::span<const Eigen::MatrixXd> s, const Eigen::MatrixXd& probe) {
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = std::cos(s[i].cwiseProduct(probe).sum());
    return v;
  };
  D2ProxyResult out;
  for (const auto& probe : probes) {
    const auto va = cos_values(a, probe);
    const auto vb = cos_values(b, probe);
    const double gap = std::abs(mean(va) - mean(vb));
    const double se = std::sqrt(central_moment(va, 2) / static_cast<double>(va.size()) +
                                central_moment(vb, 2) / static_cast<double>(vb.size()));
    out.per_probe.push_back(gap);
    if (out.per_probe.size() == 1 || gap > out.value) {
      out.value = gap;
      out.se = se;
    }
  }
  return out;
}

/// Proxy distance between samples of the normalized operator statistic and
/// an equally sized reference sample of Z_l.
inline D2ProxyResult d2_proxy(std::span<const Eigen::MatrixXd> op_stat_samples, const SpectralModel& model,
                              int ell, int probes, std::uint64_t master_seed, unsigned threads = 1) {
  if (probes < 1) throw std::invalid_argument("d2_proxy: need at least one probe");
  const auto reference =
      reference_samples(model, ell, static_cast<int>(op_stat_samples.size()), master_seed, threads);
  return d2_proxy_between(op_stat_samples, reference, unit_hs_probes(model.dim(), probes, master_seed));
}

// ---------------------------------------------------------------------------
// Monte Carlo harness
// ---------------------------------------------------------------------------

struct McOptions {
  int replicates = 20000;
  std::uint64_t master_seed = 0;
  unsigned threads = 1;
  int probes = 16;
  int batches = kDefaultBatches;
  double se_multiplier = 4.0;
  double sampler_lambda_scale = 1.0;  // fault injection; 1 = faithful sampler
};

struct MonteCarloReport {
  int ell = 0;
  int replicates = 0;
  Estimate mse;              // E||F_hat - F||_2^2
  Estimate fourth_moment;    // E||a_{l,m}||^4
  Estimate scalar_variance;  // Var(scalar_stat)
  Estimate cum4;             // Cum_4(scalar_stat)
  double ks_distance = 0.0;
  double d2_proxy = 0.0;
  double d2_proxy_se = 0.0;
  bool mse_pass = false;
  bool fourth_moment_pass = false;
  bool scalar_variance_pass = false;
  bool cum4_pass = false;
  bool ks_pass = false;
  bool d2_pass = false;

  bool pass() const {
    return mse_pass && fourth_moment_pass && scalar_variance_pass && cum4_pass && ks_pass && d2_pass;
  }
};

/// Per-replicate raw statistics at one degree, in replicate order.
struct McSamples {
  std::vector<double> squared_error;  // ||F_hat - F||_2^2
  std::vector<double> fourth_power;   // mean over m of ||a_{l,m}||^4
  std::vector<double> scalar_stat;
  std::vector<Eigen::MatrixXd> operator_stat;
};

inline McSamples mc_samples(const SpectralModel& model, int ell, const McOptions& opt) {
  const auto scales = statistic_scales(model, ell);
  const auto r_count = static_cast<std::size_t>(opt.replicates);
  McSamples s{std::vector<double>(r_count), std::vector<double>(r_count), std::vector<double>(r_count),
              std::vector<Eigen::MatrixXd>(r_count)};
  parallel_for(r_count, opt.threads, [&](std::size_t r) {
    const Eigen::MatrixXd a =
        draw_degree(model, opt.master_seed, static_cast<std::uint32_t>(r), ell, opt.sampler_lambda_scale);
    const Eigen::MatrixXd diff = sample_power_spectrum_entries(a) - scales.truth;
    s.squared_error[r] = diff.squaredNorm();
    s.fourth_power[r] = a.rowwise().squaredNorm().array().square().mean();
    s.scalar_stat[r] = scales.scalar_scale * (a.squaredNorm() / (2.0 * ell + 1.0) - scales.reduced);
    s.operator_stat[r] = scales.operator_scale * diff;
  });
  return s;
}

/// Runs the moment, cumulant, KS and d_2-proxy checks at every degree.
inline std::vector<MonteCarloReport> run_mc(const SpectralModel& model, const std::vector<int>& ells,
                                            const McOptions& opt) {
  if (opt.replicates < 100) throw std::invalid_argument("run_mc: need at least 100 replicates");
  std::vector<MonteCarloReport> reports;
  for (const int ell : ells) {
    const auto theo = theoretical(model, ell);
    const auto s = mc_samples(model, ell, opt);
    MonteCarloReport rep;
    rep.ell = ell;
    rep.replicates = opt.replicates;
    rep.mse = batch_mean(s.squared_error, opt.batches);
    rep.fourth_moment = batch_mean(s.fourth_power, opt.batches);
    rep.scalar_variance = batch_variance(s.scalar_stat, opt.batches);
    rep.cum4 = empirical_cumulant4(s.scalar_stat, opt.batches);
    rep.ks_distance = ks_to_standard_normal(s.scalar_stat);
    const auto d2 = d2_proxy(s.operator_stat, model, ell, opt.probes, opt.master_seed, opt.threads);
    rep.d2_proxy = d2.value;
    rep.d2_proxy_se = d2.se;
    const double k = opt.se_multiplier;
    rep.mse_pass = rep.mse.within(theo.mse, k);
    rep.fourth_moment_pass = rep.fourth_moment.within(theo.fourth_moment_a, k);
    rep.scalar_variance_pass = rep.scalar_variance.within(1.0, k);
    rep.cum4_pass = rep.cum4.within(theo.cum4_reduced, k);
    rep.ks_pass = rep.ks_distance <= theo.tv_bound;
    rep.d2_pass = rep.d2_proxy <= theo.d2_bound_exact;
    reports.push_back(rep);
  }
  return reports;
}

}  // namespace sphfield
