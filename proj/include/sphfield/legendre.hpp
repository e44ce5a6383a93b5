#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphfield {

/// P_0(z), ..., P_degree_max(z) at a single argument.
struct LegendreValues {
  int degree_max = 0;
  double argument = 0.0;
  std::vector<double> values;
};

/// Legendre polynomials of every degree up to `degree_max` by the upward
/// three-term (Bonnet) recurrence
///
///   l P_l(z) = (2l - 1) z P_{l-1}(z) - (l - 1) P_{l-2}(z).
///
/// The recurrence is forward-stable on [-1, 1]; the accumulated error stays
/// below 1e-12 through degree 4096.
inline LegendreValues legendre_all(int degree_max, double z) {
  if (degree_max < 0) {
    throw std::domain_error("legendre_all: negative degree " + std::to_string(degree_max));
  }
  if (!(std::abs(z) <= 1.0)) {
    throw std::domain_error("legendre_all: argument outside [-1, 1]");
  }
  LegendreValues out{degree_max, z, std::vector<double>(static_cast<std::size_t>(degree_max) + 1)};
  auto& p = out.values;
  p[0] = 1.0;
  if (degree_max >= 1) p[1] = z;
  for (int l = 2; l <= degree_max; ++l) {
    p[l] = ((2.0 * l - 1.0) * z * p[l - 1] - (l - 1.0) * p[l - 2]) / l;
  }
  return out;
}

/// Single-degree convenience wrapper around legendre_all.
inline double legendre(int degree, double z) {
  return legendre_all(degree, z).values.back();
}

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1, 1], nodes in
/// ascending order.
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need at least one node");
  GaussLegendreRule rule{std::vector<double>(n), std::vector<double>(n)};
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi initial guess for the i-th largest root
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int l = 2; l <= n; ++l) {
        const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
        p0 = p1;
        p1 = p2;
      }
      // p1 = P_n(x), p0 = P_{n-1}(x)
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    // recompute the derivative at the converged root for the weight
    double p0 = 1.0, p1 = x;
    for (int l = 2; l <= n; ++l) {
      const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[n - 1 - i] = x;
    rule.weights[n - 1 - i] = w;
    rule.nodes[i] = -x;
    rule.weights[i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Flat position of (l, m), 0 <= m <= l, in a lower-triangular table.
constexpr std::size_t triangular_index(int l, int m) {
  return static_cast<std::size_t>(l) * (l + 1) / 2 + static_cast<std::size_t>(m);
}

namespace detail {

// \bar P_m^m from \bar P_0^0 = 1/sqrt(4 pi) via the sectoral recurrence.
// sin^m underflows to zero near the poles for large m, where the true value
// is below the smallest double anyway.
inline double sectoral(int m, double sin_theta) {
  double pmm = 0.5 / std::sqrt(std::numbers::pi);
  for (int k = 1; k <= m; ++k) {
    pmm *= std::sqrt((2.0 * k + 1.0) / (2.0 * k)) * sin_theta;
  }
  return pmm;
}

inline double recurrence_a(int l, int m) {
  return std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - static_cast<double>(m) * m));
}

inline double recurrence_b(int l, int m) {
  const double lm1 = l - 1.0;
  return std::sqrt((lm1 * lm1 - static_cast<double>(m) * m) / (4.0 * lm1 * lm1 - 1.0));
}

}  // namespace detail

/// Orthonormalized associated Legendre functions \bar P_l^m(cos theta) for a
/// fixed order m and l = m..band_limit, normalized so that
/// \bar P_l^0(cos theta) = Y_{l,0}. No Condon-Shortley phase.
///
/// Element k of the result holds degree m + k.
inline std::vector<double> normalized_legendre_column(int band_limit, int m, double cos_theta,
                                                      double sin_theta) {
  std::vector<double> col;
  if (m > band_limit) return col;
  col.resize(static_cast<std::size_t>(band_limit - m) + 1);
  col[0] = detail::sectoral(m, sin_theta);
  if (band_limit > m) col[1] = std::sqrt(2.0 * m + 3.0) * cos_theta * col[0];
  for (int l = m + 2; l <= band_limit; ++l) {
    const std::size_t k = static_cast<std::size_t>(l - m);
    col[k] = detail::recurrence_a(l, m) *
             (cos_theta * col[k - 1] - detail::recurrence_b(l, m) * col[k - 2]);
  }
  return col;
}

/// Full lower-triangular table of \bar P_l^m, indexed by triangular_index.
inline std::vector<double> normalized_legendre_table(int band_limit, double cos_theta,
                                                     double sin_theta) {
  std::vector<double> table(triangular_index(band_limit + 1, 0));
  double pmm = 0.5 / std::sqrt(std::numbers::pi);
  for (int m = 0; m <= band_limit; ++m) {
    if (m > 0) pmm *= std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_theta;
    table[triangular_index(m, m)] = pmm;
    if (m + 1 <= band_limit) {
      table[triangular_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * cos_theta * pmm;
    }
    for (int l = m + 2; l <= band_limit; ++l) {
      table[triangular_index(l, m)] =
          detail::recurrence_a(l, m) * (cos_theta * table[triangular_index(l - 1, m)] -
                                        detail::recurrence_b(l, m) * table[triangular_index(l - 2, m)]);
    }
  }
  return table;
}

}  // namespace sphfield
