#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "nsquant/curve.hpp"
#include "nsquant/kernels.hpp"
#include "nsquant/numerics.hpp"
#include "nsquant/quantreg.hpp"

namespace nsquant {

// Quantile-specific bandwidths: independence plug-in, dependence correction,
// and the jackknife / ISDT rules derived from them.
struct BandwidthPlan {
  double b_ind = 0.0;
  double rho_star_hat = 1.0;
  double b_star = 0.0;
  double b_jack = 0.0;
  double b_isdt = 0.0;
  std::size_t m_tilde = 0;
};

inline const KernelConstants& epanechnikov_constants() {
  static const KernelConstants c = constants(epanechnikov());
  return c;
}

inline double clamp_bandwidth(double b, std::size_t n) {
  return std::clamp(b, 5.0 / static_cast<double>(n), 0.45);
}

// Normal-reference plug-in bandwidth treating the data as independent: a mean
// regression bandwidth from a global quartic least-squares fit, adjusted by
// the Yu-Jones quantile factor {alpha(1-alpha)/phi(Phi^{-1}(alpha))^2}^{1/5}.
inline double independence_bandwidth(const SeriesSample& sample, QuantileLevel level,
                                     const KernelConstants& kc = epanechnikov_constants()) {
  const std::size_t n = sample.n();
  if (n < 50) throw std::invalid_argument("independence_bandwidth: need n >= 50");
  const double nd = static_cast<double>(n);

  // quartic fit in u = t - 1/2 for the curvature term int (m'')^2
  constexpr std::size_t k = 5;
  std::vector<double> mat(k * k, 0.0), rhs(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = sample.time(i) - 0.5;
    double pw[k];
    pw[0] = 1.0;
    for (std::size_t j = 1; j < k; ++j) pw[j] = pw[j - 1] * u;
    for (std::size_t r = 0; r < k; ++r) {
      rhs[r] += pw[r] * sample.values[i];
      for (std::size_t c = 0; c < k; ++c) mat[r * k + c] += pw[r] * pw[c];
    }
  }
  solve_linear_system(mat, rhs, k);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = sample.time(i) - 0.5;
    const double fitv = rhs[0] + u * (rhs[1] + u * (rhs[2] + u * (rhs[3] + u * rhs[4])));
    const double r = sample.values[i] - fitv;
    rss += r * r;
  }
  const double sigma2_resid = rss / static_cast<double>(n > k ? n - k : 1);
  // m''(u) = 2 c2 + 6 c3 u + 12 c4 u^2 integrated over u in [-1/2, 1/2]
  const double A = 2.0 * rhs[2], B = 6.0 * rhs[3], C = 12.0 * rhs[4];
  const double curvature = std::max(A * A + (B * B + 2.0 * A * C) / 12.0 + C * C / 80.0,
                                    1e-300);
  const double b_mean =
      std::pow(nd, -0.2) * std::pow(sigma2_resid * kc.phi / (kc.mu2 * kc.mu2 * curvature), 0.2);

  const double a = level.alpha;
  const double za = normal_quantile(a);
  const double dens = normal_pdf(za);
  const double factor = std::pow(a * (1.0 - a) / (dens * dens), 0.2);
  return clamp_bandwidth(b_mean * factor, n);
}

// rho_star_hat = (sigma_tilde^2 / alpha(1-alpha))^{1/5}: global subsampling
// variance of the residual scores of the fit at b_ind, block m = floor(n^{1/3}).
// The fit is evaluated on a grid of at most 200 points and interpolated to the
// observation times; the score depends only on the residual sign.
inline double correction_factor(const SeriesSample& sample, QuantileLevel level,
                                double b_ind, const Kernel& kernel = epanechnikov()) {
  const std::size_t n = sample.n();
  const std::size_t m = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n)))));
  if (n < m + 1) throw std::invalid_argument("correction_factor: series too short");

  const std::size_t grid_points = std::min<std::size_t>(200, n);
  const EvalGrid grid = EvalGrid::uniform(b_ind, 1.0 - b_ind, grid_points);
  const QuantileCurve fit = fit_curve(sample, level, b_ind, grid, kernel);

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    prefix[i] = prefix[i - 1] + score(level, sample.values[i - 1] - fit.value_at(t));
  }
  const double mean = prefix[n] / static_cast<double>(n);
  const double md = static_cast<double>(m);
  double acc = 0.0;
  for (std::size_t j = 1; j + m - 1 <= n; ++j) {
    const double bm = (prefix[j + m - 1] - prefix[j - 1]) / md;
    acc += (bm - mean) * (bm - mean);
  }
  const double sigma_tilde2 = md * acc / static_cast<double>(n - m + 1);
  return std::pow(sigma_tilde2 / (level.alpha * (1.0 - level.alpha)), 0.2);
}

// b_star = rho_star_hat * b_ind, b_jack = 2 b_star, b_isdt = b_jack n^{-1/45};
// every stored bandwidth is clamped to [5/n, 0.45].
inline BandwidthPlan plan(const SeriesSample& sample, QuantileLevel level,
                          const Kernel& kernel = epanechnikov(),
                          const KernelConstants& kc = epanechnikov_constants()) {
  const std::size_t n = sample.n();
  BandwidthPlan p;
  p.b_ind = independence_bandwidth(sample, level, kc);
  p.rho_star_hat = correction_factor(sample, level, p.b_ind, kernel);
  p.b_star = clamp_bandwidth(p.rho_star_hat * p.b_ind, n);
  p.b_jack = clamp_bandwidth(2.0 * p.b_star, n);
  p.b_isdt = clamp_bandwidth(p.b_jack * std::pow(static_cast<double>(n), -1.0 / 45.0), n);
  p.m_tilde = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
  return p;
}

}  // namespace nsquant
