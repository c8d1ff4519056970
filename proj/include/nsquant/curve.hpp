#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsquant/errors.hpp"
#include "nsquant/kernels.hpp"
#include "nsquant/quantreg.hpp"

namespace nsquant {

// Observed series X_1..X_n at rescaled times t_i = i/n.
struct SeriesSample {
  std::vector<double> values;

  std::size_t n() const { return values.size(); }
  double time(std::size_t i) const {  // i is 0-based; t = (i+1)/n
    return static_cast<double>(i + 1) / static_cast<double>(n());
  }
};

// Uniform evaluation grid on an inner interval of [0, 1].
struct EvalGrid {
  std::vector<double> points;
  double inner_lo = 0.0;
  double inner_hi = 1.0;

  static EvalGrid uniform(double lo, double hi, std::size_t count) {
    if (!(lo < hi) || count < 2)
      throw std::invalid_argument("EvalGrid: need lo < hi and count >= 2");
    EvalGrid g;
    g.inner_lo = lo;
    g.inner_hi = hi;
    g.points.resize(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t j = 0; j < count; ++j)
      g.points[j] = lo + step * static_cast<double>(j);
    g.points.back() = hi;
    return g;
  }

  std::size_t size() const { return points.size(); }
  double spacing() const {
    return (inner_hi - inner_lo) / static_cast<double>(points.size() - 1);
  }
};

struct QuantileCurve {
  double level = 0.5;
  double bandwidth = 0.0;
  std::size_t sample_size = 0;
  EvalGrid grid;
  std::vector<double> q;
  std::vector<double> qprime;
  bool jackknifed = false;

  // Linear interpolation between grid nodes, clamped to the end values.
  double value_at(double t) const {
    const auto& p = grid.points;
    if (t <= p.front()) return q.front();
    if (t >= p.back()) return q.back();
    const auto it = std::upper_bound(p.begin(), p.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - p.begin());
    const double w = (t - p[k - 1]) / (p[k] - p[k - 1]);
    return q[k - 1] + w * (q[k] - q[k - 1]);
  }
};

// Local linear quantile fit on the grid: at each grid point t the kernel
// weights K((t_i - t)/b) select the window and the exact solver returns
// (Q_hat(t), Q_hat'(t)).
inline QuantileCurve fit_curve(const SeriesSample& sample, QuantileLevel level,
                               double bandwidth, const EvalGrid& grid,
                               const Kernel& kernel) {
  const std::size_t n = sample.n();
  if (n < 20) throw std::invalid_argument("fit_curve: need n >= 20");
  if (!(bandwidth > 0.0 && bandwidth < 0.5))
    throw std::invalid_argument("fit_curve: bandwidth must lie in (0, 1/2)");
  const double slack = 1e-12;
  if (grid.points.front() < bandwidth - slack ||
      grid.points.back() > 1.0 - bandwidth + slack)
    throw std::invalid_argument("fit_curve: grid outside [b, 1 - b]");

  QuantileCurve curve;
  curve.level = level.alpha;
  curve.bandwidth = bandwidth;
  curve.sample_size = n;
  curve.grid = grid;
  curve.q.resize(grid.size());
  curve.qprime.resize(grid.size());

  std::vector<double> u, x, w;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.points[j];
    // closed support |t_i - t| <= b; weights below 1e-12 dropped
    const double lo = t - bandwidth, hi = t + bandwidth;
    std::size_t i_lo = static_cast<std::size_t>(
        std::max(1.0, std::ceil(lo * static_cast<double>(n) - 1e-9)));
    std::size_t i_hi = static_cast<std::size_t>(
        std::min(static_cast<double>(n), std::floor(hi * static_cast<double>(n) + 1e-9)));
    u.clear();
    x.clear();
    w.clear();
    for (std::size_t i = i_lo; i <= i_hi && i >= 1; ++i) {
      const double ti = static_cast<double>(i) / static_cast<double>(n);
      const double wt = kernel.evaluate((ti - t) / bandwidth);
      if (wt < 1e-12) continue;
      u.push_back(ti - t);
      x.push_back(sample.values[i - 1]);
      w.push_back(wt);
    }
    if (u.empty())
      throw empty_window_error("fit_curve: empty kernel window at t = " + std::to_string(t));
    const WeightedLinearFit fit = solve_weighted_local_linear(level, u, x, w);
    curve.q[j] = fit.beta0;
    curve.qprime[j] = fit.beta1;
  }
  return curve;
}

// Pointwise jackknife combination 2 * fit(b) - fit(sqrt(2) b); slopes likewise.
inline QuantileCurve combine_jackknife(const QuantileCurve& at_b,
                                       const QuantileCurve& at_rt2b) {
  if (at_b.q.size() != at_rt2b.q.size())
    throw std::invalid_argument("combine_jackknife: grid mismatch");
  QuantileCurve out = at_b;
  out.jackknifed = true;
  for (std::size_t j = 0; j < out.q.size(); ++j) {
    out.q[j] = 2.0 * at_b.q[j] - at_rt2b.q[j];
    out.qprime[j] = 2.0 * at_b.qprime[j] - at_rt2b.qprime[j];
  }
  return out;
}

inline QuantileCurve jackknife_curve(const SeriesSample& sample, QuantileLevel level,
                                     double bandwidth, const EvalGrid& grid,
                                     const Kernel& kernel) {
  const double rt2 = std::sqrt(2.0);
  const double slack = 1e-12;
  if (grid.points.front() < rt2 * bandwidth - slack ||
      grid.points.back() > 1.0 - rt2 * bandwidth + slack)
    throw std::invalid_argument("jackknife_curve: grid outside [sqrt(2) b, 1 - sqrt(2) b]");
  const QuantileCurve at_b = fit_curve(sample, level, bandwidth, grid, kernel);
  const QuantileCurve at_rt2b = fit_curve(sample, level, rt2 * bandwidth, grid, kernel);
  return combine_jackknife(at_b, at_rt2b);
}

}  // namespace nsquant
