#pragma once

// Brute-force reference solvers used by the test suites; deliberately naive and
// independent of the sweep-based solvers they check.

#include <limits>
#include <span>
#include <vector>

#include "nsquant/numerics.hpp"
#include "nsquant/quantreg.hpp"

namespace oracle {

inline double pair_line_objective(nsquant::QuantileLevel level, std::span<const double> u,
                                  std::span<const double> x, std::span<const double> w,
                                  double b0, double b1) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (w[i] > 0.0) s += w[i] * nsquant::check_loss(level, x[i] - b0 - b1 * u[i]);
  return s;
}

// Minimum objective over every line through two positively weighted points
// with distinct times, plus the degenerate weighted-quantile fit.
inline double best_pair_line(nsquant::QuantileLevel level, std::span<const double> u,
                             std::span<const double> x, std::span<const double> w) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      if (!(w[j] > 0.0) || u[i] == u[j]) continue;
      const double b1 = (x[j] - x[i]) / (u[j] - u[i]);
      const double b0 = x[i] - b1 * u[i];
      best = std::min(best, pair_line_objective(level, u, x, w, b0, b1));
    }
  }
  if (!std::isfinite(best)) {
    // fewer than two distinct weighted times: weighted quantile, zero slope
    std::vector<double> xv, wv;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (w[i] > 0.0) {
        xv.push_back(x[i]);
        wv.push_back(w[i]);
      }
    const double q = nsquant::weighted_quantile(xv, wv, level.alpha);
    best = pair_line_objective(level, u, x, w, q, 0.0);
  }
  return best;
}

inline double parametric_objective(nsquant::QuantileLevel level,
                                   std::span<const double> times,
                                   std::span<const double> values,
                                   const nsquant::BasisFunction& basis, std::size_t dim,
                                   std::span<const double> theta) {
  std::vector<double> g(dim);
  double s = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    basis(times[i], g);
    double fit = 0.0;
    for (std::size_t k = 0; k < dim; ++k) fit += theta[k] * g[k];
    s += nsquant::check_loss(level, values[i] - fit);
  }
  return s;
}

// Minimum objective over all exact interpolations of dim-subsets.
inline double best_parametric_vertex(nsquant::QuantileLevel level,
                                     std::span<const double> times,
                                     std::span<const double> values,
                                     const nsquant::BasisFunction& basis,
                                     std::size_t dim) {
  const std::size_t n = times.size();
  std::vector<std::size_t> pick(dim);
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> g(dim), mat(dim * dim), rhs(dim);

  const auto try_subset = [&]() {
    for (std::size_t r = 0; r < dim; ++r) {
      basis(times[pick[r]], g);
      for (std::size_t c = 0; c < dim; ++c) mat[r * dim + c] = g[c];
      rhs[r] = values[pick[r]];
    }
    try {
      auto m = mat;
      auto th = rhs;
      nsquant::solve_linear_system(m, th, dim);
      for (double v : th)
        if (!std::isfinite(v)) return;
      best = std::min(best, parametric_objective(level, times, values, basis, dim, th));
    } catch (const nsquant::numerical_error&) {
    }
  };

  const auto recurse = [&](auto&& self, std::size_t depth, std::size_t from) -> void {
    if (depth == dim) {
      try_subset();
      return;
    }
    for (std::size_t i = from; i < n; ++i) {
      pick[depth] = i;
      self(self, depth + 1, i + 1);
    }
  };
  recurse(recurse, 0, 0);
  return best;
}

}  // namespace oracle
