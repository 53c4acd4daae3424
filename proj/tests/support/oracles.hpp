#pragma once

// Independent reference computations used only by tests. Nothing here calls
// into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "zsl/core/matrix.hpp"
#include "zsl/distributions.hpp"

namespace zsl::testing {

/// Central difference of f at x[i] with step h (x restored afterwards).
inline double central_difference(const std::function<double()>& f, double& xi, double h = 1e-5) {
  const double saved = xi;
  xi = saved + h;
  const double up = f();
  xi = saved - h;
  const double down = f();
  xi = saved;
  return (up - down) / (2.0 * h);
}

/// |a−b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning round-off into huge relative errors.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Worst relative error between an analytic gradient and central differences
/// of `loss` over every coordinate of `params`.
inline double max_gradient_error(std::span<double> params, std::span<const double> analytic,
                                 const std::function<double()>& loss, double h = 1e-5,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double numeric = central_difference(loss, params[i], h);
    worst = std::max(worst, relative_error(analytic[i], numeric, floor));
  }
  return worst;
}

inline Matrix naive_matmul_transposed(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
      out(i, j) = s;
    }
  return out;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (double& v : m.values()) v = n(rng);
  return m;
}

inline DiagGaussian random_gaussian(std::size_t k, Rng& rng, double mean_scale = 1.0,
                                    double logvar_lo = -2.0, double logvar_hi = 2.0) {
  std::normal_distribution<double> n(0.0, mean_scale);
  std::uniform_real_distribution<double> u(logvar_lo, logvar_hi);
  DiagGaussian g;
  for (std::size_t i = 0; i < k; ++i) {
    g.mean.push_back(n(rng));
    g.log_var.push_back(u(rng));
  }
  return g;
}

// ---------------------------------------------------------------------------
// 1-D quantile-coupling oracle for W2².
//
// For 1-D laws the optimal coupling is monotone, so W2² = ∫₀¹ (F_p⁻¹(t) −
// F_q⁻¹(t))² dt. The integral is evaluated by tanh-sinh quadrature (robust to
// the endpoint singularities of the quantile function), with the standard
// normal quantile obtained by bisection on erfc.

/// Standard normal quantile by bisection on log Φ; handles t down to ~1e-300.
inline double normal_quantile(double t, double one_minus_t) {
  // Work in the smaller tail for accuracy, then mirror.
  const bool upper = one_minus_t < t;
  const double tail = upper ? one_minus_t : t;
  const double log_tail = std::log(tail);
  double lo = -40.0, hi = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double log_phi = std::log(0.5 * std::erfc(-mid / std::sqrt(2.0)));
    if (log_phi < log_tail) lo = mid; else hi = mid;
  }
  const double z = 0.5 * (lo + hi);
  return upper ? -z : z;
}

struct QuantileGrid {
  std::vector<double> z;       // standard normal quantile at each node
  std::vector<double> weight;  // quadrature weight in t
};

inline QuantileGrid make_quantile_grid(double step = 1.0 / 32.0, double u_max = 4.0) {
  QuantileGrid g;
  const double half_pi = std::acos(0.0);
  for (double u = -u_max; u <= u_max + 1e-12; u += step) {
    const double s = half_pi * std::sinh(u);
    // t = 1/(1+e^{-2s}), 1−t = 1/(1+e^{2s}); both formed without cancellation.
    const double t = 1.0 / (1.0 + std::exp(-2.0 * s));
    const double one_minus_t = 1.0 / (1.0 + std::exp(2.0 * s));
    if (t < 1e-300 || one_minus_t < 1e-300) continue;
    const double c = std::cosh(s);
    const double w = step * half_pi * std::cosh(u) / (2.0 * c * c);
    g.z.push_back(normal_quantile(t, one_minus_t));
    g.weight.push_back(w);
  }
  return g;
}

/// Σ_k ∫₀¹ (F_{p,k}⁻¹(t) − F_{q,k}⁻¹(t))² dt with F⁻¹(t) = μ + σ·Φ⁻¹(t).
inline double quantile_w2_squared(const DiagGaussian& p, const DiagGaussian& q,
                                  const QuantileGrid& grid) {
  double total = 0.0;
  for (std::size_t k = 0; k < p.mean.size(); ++k) {
    const double sp = std::exp(0.5 * p.log_var[k]);
    const double sq = std::exp(0.5 * q.log_var[k]);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.z.size(); ++i) {
      const double d = (p.mean[k] + sp * grid.z[i]) - (q.mean[k] + sq * grid.z[i]);
      acc += grid.weight[i] * d * d;
    }
    total += acc;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Brute-force mining: full distance table, then for each anchor the smallest
// (distance, class id) pair among wrong classes.

inline std::vector<int> brute_force_negatives(std::span<const DiagGaussian> images,
                                              std::span<const int> labels,
                                              std::span<const int> class_ids,
                                              std::span<const DiagGaussian> class_embs,
                                              DistanceKind kind) {
  std::vector<int> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::vector<std::pair<double, int>> row;
    for (std::size_t j = 0; j < class_ids.size(); ++j) {
      row.emplace_back(distance(kind, images[i], class_embs[j]), class_ids[j]);
    }
    std::sort(row.begin(), row.end());
    int pick = -1;
    for (const auto& [d, id] : row) {
      if (id != labels[i]) {
        pick = id;
        break;
      }
    }
    out.push_back(pick);
  }
  return out;
}

}  // namespace zsl::testing
