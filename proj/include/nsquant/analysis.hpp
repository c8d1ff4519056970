#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsquant/bandwidth.hpp"
#include "nsquant/curve.hpp"
#include "nsquant/inference.hpp"
#include "nsquant/nuisance.hpp"
#include "nsquant/quantreg.hpp"

namespace nsquant {

struct AnalysisConfig {
  double beta = 0.05;
  std::size_t bootstrap_B = 2000;
  std::uint64_t seed = 1;
  std::size_t grid_points = 200;
  std::optional<double> bandwidth_override;  // skips the data-driven plan
};

// Largest bandwidth leaving a usable jackknife interval [sqrt(2) b, 1 - sqrt(2) b].
inline double usable_bandwidth(double b, std::size_t n) {
  const double nd = static_cast<double>(n);
  const double hi = (0.5 - 2.0 / nd) / std::sqrt(2.0);
  const double lo = 5.0 / nd;
  if (hi <= lo) throw std::invalid_argument("usable_bandwidth: series too short");
  return std::clamp(b, lo, hi);
}

// Everything the tests consume at one bandwidth: the 200-point grid on the
// inner interval, the raw and jackknife fits, and the nuisance estimates
// computed from the raw fit.
struct FittedLevel {
  double bandwidth = 0.0;
  EvalGrid grid;
  QuantileCurve raw;
  QuantileCurve jack;
  NuisanceEstimates nuisance;
};

inline FittedLevel fit_level(const SeriesSample& sample, QuantileLevel level,
                             double bandwidth, std::size_t grid_points,
                             const Kernel& kernel) {
  FittedLevel fl;
  fl.bandwidth = bandwidth;
  const double rt2 = std::sqrt(2.0);
  fl.grid = EvalGrid::uniform(rt2 * bandwidth, 1.0 - rt2 * bandwidth, grid_points);
  fl.raw = fit_curve(sample, level, bandwidth, fl.grid, kernel);
  const QuantileCurve wide = fit_curve(sample, level, rt2 * bandwidth, fl.grid, kernel);
  fl.jack = combine_jackknife(fl.raw, wide);
  fl.nuisance = estimate_nuisance(sample, fl.raw, fl.grid, bandwidth, kernel);
  return fl;
}

inline std::vector<double> evaluate_null(const BasisFunction& basis, std::size_t dim,
                                         std::span<const double> theta,
                                         const EvalGrid& grid) {
  std::vector<double> out(grid.size());
  std::vector<double> g(dim);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    basis(grid.points[j], g);
    double v = 0.0;
    for (std::size_t k = 0; k < dim; ++k) v += theta[k] * g[k];
    out[j] = v;
  }
  return out;
}

// Tests H0: Q_alpha(t) = theta^T g(t) for some theta. The parametric quantile
// fit converges at root n, faster than either test statistic, so the fitted
// curve stands in for the null in steps (1)-(6).
inline TestReport test_parametric_null(const SeriesSample& sample, QuantileLevel level,
                                       const BasisFunction& basis, std::size_t dim,
                                       double beta, TestMethod method,
                                       const AnalysisConfig& cfg = {},
                                       const Kernel& kernel = epanechnikov(),
                                       const KernelConstants& kc = epanechnikov_constants()) {
  const std::size_t n = sample.n();
  std::vector<double> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = sample.time(i);
  const ParametricFit pf = solve_parametric(level, times, sample.values, basis, dim);

  double bandwidth;
  if (cfg.bandwidth_override) {
    bandwidth = usable_bandwidth(*cfg.bandwidth_override, n);
  } else {
    const BandwidthPlan bp = plan(sample, level, kernel, kc);
    const bool isdt = method == TestMethod::isdt_asymptotic ||
                      method == TestMethod::isdt_bootstrap;
    bandwidth = usable_bandwidth(isdt ? bp.b_isdt : bp.b_jack, n);
  }

  const FittedLevel fl = fit_level(sample, level, bandwidth, cfg.grid_points, kernel);
  const std::vector<double> null_curve = evaluate_null(basis, dim, pf.theta, fl.grid);

  TestReport rep;
  switch (method) {
    case TestMethod::scb_asymptotic:
      rep = scb_asymptotic(fl.jack, fl.nuisance, null_curve, beta, kc);
      break;
    case TestMethod::scb_bootstrap:
      rep = scb_bootstrap(fl.jack, fl.nuisance, null_curve, beta, cfg.bootstrap_B,
                          cfg.seed, second_order_kernel(kernel));
      break;
    case TestMethod::isdt_asymptotic:
      rep = isdt_asymptotic(fl.jack, fl.nuisance, null_curve, beta, kc);
      break;
    case TestMethod::isdt_bootstrap:
      rep = isdt_bootstrap(fl.jack, fl.nuisance, null_curve, beta, cfg.bootstrap_B,
                           cfg.seed, second_order_kernel(kernel));
      break;
  }
  std::ostringstream desc;
  desc << "theta_hat = [";
  for (std::size_t k = 0; k < pf.theta.size(); ++k)
    desc << (k ? ", " : "") << pf.theta[k];
  desc << "]";
  rep.null_description = desc.str();
  return rep;
}

}  // namespace nsquant
