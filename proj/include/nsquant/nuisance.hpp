#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "nsquant/curve.hpp"
#include "nsquant/errors.hpp"
#include "nsquant/kernels.hpp"
#include "nsquant/quantreg.hpp"

namespace nsquant {

// sigma2, density and pi_hat = density^2 / sigma2 on the evaluation grid.
struct NuisanceEstimates {
  EvalGrid grid;
  std::vector<double> sigma2;
  std::vector<double> density;
  std::vector<double> pi_hat;
  std::size_t m_n = 0;
  double h_n = 0.0;
};

namespace detail {

// 1-based window N_n(t): s_n(t) = max(floor(nt - nb), 1), l_n(t) = min(floor(nt + nb), n).
struct Window {
  std::size_t s, l;
  std::size_t size() const { return l - s + 1; }
};

inline Window window_at(double t, std::size_t n, double b) {
  const double nd = static_cast<double>(n);
  const double lo = std::floor(nd * t - nd * b);
  const double hi = std::floor(nd * t + nd * b);
  Window w;
  w.s = static_cast<std::size_t>(std::max(1.0, lo));
  w.l = static_cast<std::size_t>(std::min(nd, hi));
  if (w.l < w.s) throw empty_window_error("empty nuisance window");
  return w;
}

}  // namespace detail

// Default block length for the local subsampling variance: cube root of the
// window size 2 n b, at least 2.
inline std::size_t default_block_length(std::size_t n, double b) {
  const double v = std::cbrt(2.0 * static_cast<double>(n) * b);
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(v)));
}

// Local subsampling estimate of the long-run variance of the residual scores
// Z_i = psi_alpha(X_i - Q_hat(t_i)): non-overlapping-mean blocks of length m
// inside the window around each grid point, centered at the window mean.
// Returns the raw (unfloored) values.
inline std::vector<double> long_run_variance(const SeriesSample& sample,
                                             const QuantileCurve& curve,
                                             const EvalGrid& grid,
                                             double window_bandwidth, std::size_t m_n) {
  const std::size_t n = sample.n();
  if (m_n < 2) throw std::invalid_argument("long_run_variance: block length must be >= 2");
  const QuantileLevel level(curve.level);

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    const double z = score(level, sample.values[i - 1] - curve.value_at(t));
    prefix[i] = prefix[i - 1] + z;
  }

  std::vector<double> out(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto win = detail::window_at(grid.points[j], n, window_bandwidth);
    const std::size_t nwin = win.size();
    if (nwin < 4)
      throw window_too_small_error("long_run_variance: window smaller than block");
    const std::size_t m = std::clamp<std::size_t>(m_n, 2, nwin / 2);
    const double md = static_cast<double>(m);
    const double zbar = (prefix[win.l] - prefix[win.s - 1]) / static_cast<double>(nwin);
    double acc = 0.0;
    for (std::size_t start = win.s; start + m - 1 <= win.l; ++start) {
      const double bm = (prefix[start + m - 1] - prefix[start - 1]) / md;
      acc += (bm - zbar) * (bm - zbar);
    }
    out[j] = md * acc / static_cast<double>(nwin - m + 1);
  }
  return out;
}

// Window kernel density of the observations evaluated at Q_hat(t). When
// density_bandwidth is absent the per-window rule 1.06 sd |N| ^ {-1/5} is used.
inline std::vector<double> conditional_density(const SeriesSample& sample,
                                               const QuantileCurve& curve,
                                               const EvalGrid& grid,
                                               double window_bandwidth,
                                               std::optional<double> density_bandwidth,
                                               const Kernel& density_kernel,
                                               std::vector<double>* h_used = nullptr) {
  const std::size_t n = sample.n();
  std::vector<double> out(grid.size());
  if (h_used) h_used->assign(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.points[j];
    const auto win = detail::window_at(t, n, window_bandwidth);
    const std::size_t nwin = win.size();
    const double qt = curve.value_at(t);
    double h;
    if (density_bandwidth && *density_bandwidth > 0.0) {
      h = *density_bandwidth;
    } else {
      double mean = 0.0;
      for (std::size_t i = win.s; i <= win.l; ++i) mean += sample.values[i - 1];
      mean /= static_cast<double>(nwin);
      double ss = 0.0;
      for (std::size_t i = win.s; i <= win.l; ++i) {
        const double d = sample.values[i - 1] - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(nwin));
      const double shrink = std::pow(static_cast<double>(nwin), -0.2);
      h = sd > 0.0 ? 1.06 * sd * shrink : shrink;
    }
    double acc = 0.0;
    for (std::size_t i = win.s; i <= win.l; ++i)
      acc += density_kernel.evaluate((qt - sample.values[i - 1]) / h);
    out[j] = acc / (static_cast<double>(nwin) * h);
    if (h_used) (*h_used)[j] = h;
  }
  return out;
}

// Full nuisance set with positivity floors: sigma2 floored at 1e-8 var(X) and
// density at 1e-8 / range(X), so pi_hat and band widths stay finite.
inline NuisanceEstimates estimate_nuisance(const SeriesSample& sample,
                                           const QuantileCurve& curve,
                                           const EvalGrid& grid, double window_bandwidth,
                                           const Kernel& density_kernel,
                                           std::optional<double> density_bandwidth = {},
                                           std::optional<std::size_t> block = {}) {
  NuisanceEstimates est;
  est.grid = grid;
  est.m_n = block.value_or(default_block_length(sample.n(), window_bandwidth));
  est.sigma2 = long_run_variance(sample, curve, grid, window_bandwidth, est.m_n);
  std::vector<double> h_used;
  est.density = conditional_density(sample, curve, grid, window_bandwidth,
                                    density_bandwidth, density_kernel, &h_used);

  double mean = 0.0;
  for (double v : sample.values) mean += v;
  mean /= static_cast<double>(sample.n());
  double var = 0.0;
  const auto [mn_it, mx_it] = std::minmax_element(sample.values.begin(), sample.values.end());
  for (double v : sample.values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(sample.n());
  const double range = *mx_it - *mn_it;
  const double sigma_floor = var > 0.0 ? 1e-8 * var : 1e-8;
  const double density_floor = range > 0.0 ? 1e-8 / range : 1e-8;

  est.pi_hat.resize(grid.size());
  double h_sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    est.sigma2[j] = std::max(est.sigma2[j], sigma_floor);
    est.density[j] = std::max(est.density[j], density_floor);
    est.pi_hat[j] = est.density[j] * est.density[j] / est.sigma2[j];
    h_sum += h_used[j];
  }
  est.h_n = h_sum / static_cast<double>(grid.size());
  return est;
}

}  // namespace nsquant
