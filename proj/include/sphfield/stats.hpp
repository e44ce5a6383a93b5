#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "sphfield/errors.hpp"

namespace sphfield {

inline constexpr int kDefaultBatches = 100;

/// Neumaier-compensated sum, accumulated in index order.
inline double compensated_sum(std::span<const double> x) {
  double sum = 0.0, comp = 0.0;
  for (const double v : x) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return compensated_sum(x) / static_cast<double>(x.size());
}

/// Population-form central moment of order k.
inline double central_moment(std::span<const double> x, int k) {
  const double mu = mean(x);
  std::vector<double> dev(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dev[i] = std::pow(x[i] - mu, k);
  return mean(dev);
}

/// Estimate of a statistic together with its batch-means standard error.
struct Estimate {
  double value = 0.0;
  double se = 0.0;

  /// |value - target| <= k * se.
  bool within(double target, double k = 4.0) const { return std::abs(value - target) <= k * se; }
};

/// Applies `statistic` to the whole sample and to `batches` contiguous
/// batches; the SE is the standard deviation of the batch values divided by
/// sqrt(batches). Samples shorter than `batches` use one value per batch.
inline Estimate batched(std::span<const double> x, const std::function<double(std::span<const double>)>& statistic,
                        int batches = kDefaultBatches) {
  if (x.size() < 2) throw std::invalid_argument("batched: need at least two samples");
  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), x.size());
  const std::size_t per = x.size() / nb;
  std::vector<double> values(nb);
  for (std::size_t b = 0; b < nb; ++b) values[b] = statistic(x.subspan(b * per, per));
  const double vm = mean(values);
  std::vector<double> sq(nb);
  for (std::size_t b = 0; b < nb; ++b) sq[b] = (values[b] - vm) * (values[b] - vm);
  const double var = compensated_sum(sq) / static_cast<double>(nb - 1);
  return {statistic(x), std::sqrt(var / static_cast<double>(nb))};
}

inline Estimate batch_mean(std::span<const double> x, int batches = kDefaultBatches) {
  return batched(x, [](std::span<const double> s) { return mean(s); }, batches);
}

inline Estimate batch_variance(std::span<const double> x, int batches = kDefaultBatches) {
  return batched(x, [](std::span<const double> s) { return central_moment(s, 2); }, batches);
}

/// m4 - 3 m2^2 on centered samples.
inline double cumulant4(std::span<const double> x) {
  if (x.size() < 4) throw std::invalid_argument("empirical_cumulant4: need at least four samples");
  const double m2 = central_moment(x, 2);
  if (m2 == 0.0) throw DegenerateError("empirical_cumulant4: sample has zero variance");
  return central_moment(x, 4) - 3.0 * m2 * m2;
}

inline Estimate empirical_cumulant4(std::span<const double> x, int batches = kDefaultBatches) {
  if (x.size() < 4) throw std::invalid_argument("empirical_cumulant4: need at least four samples");
  const auto nb = std::min<int>(batches, static_cast<int>(x.size() / 4));
  return batched(x, cumulant4, std::max(nb, 2));
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// sup_x |F_n(x) - Phi(x)| for the empirical CDF F_n, both one-sided gaps
/// at every jump.
inline double ks_to_standard_normal(std::span<const double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("ks_to_standard_normal: need at least two samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double phi = standard_normal_cdf(sorted[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - phi, phi - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

}  // namespace sphfield
