#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nsquant/errors.hpp"

namespace nsquant {

inline constexpr double pi_const = 3.14159265358979323846;

namespace detail {

template <class F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm,
                            double fb, double whole, double tol, int depth,
                            double& residual) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) {
    residual += std::fabs(delta);
    return left + right + delta / 15.0;
  }
  if (std::fabs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, residual) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, residual);
}

}  // namespace detail

// Adaptive Simpson quadrature of f over [a, b] with absolute tolerance tol.
// Throws numerical_error with the residual estimate if the recursion depth is
// exhausted before the tolerance is met.
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-10, int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double residual = 0.0;
  const double value =
      detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth, residual);
  if (residual > tol) {
    throw numerical_error("quadrature did not converge, residual estimate " +
                          std::to_string(residual));
  }
  return value;
}

// Trapezoid rule over uniformly spaced samples with spacing h.
inline double trapezoid(std::span<const double> y, double h) {
  if (y.size() < 2) return 0.0;
  double s = 0.5 * (y.front() + y.back());
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi_const);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal cdf: Acklam's rational approximation refined with one
// Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -std::numeric_limits<double>::infinity();
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    throw numerical_error("normal_quantile: p outside [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * pi_const) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// In-place Gaussian elimination with partial pivoting for small dense systems;
// A is row-major k x k, rhs has length k and receives the solution.
inline void solve_linear_system(std::vector<double>& A, std::vector<double>& rhs,
                                std::size_t k) {
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::fabs(A[r * k + col]) > std::fabs(A[piv * k + col])) piv = r;
    if (A[piv * k + col] == 0.0)
      throw numerical_error("solve_linear_system: singular matrix");
    if (piv != col) {
      for (std::size_t c = 0; c < k; ++c) std::swap(A[piv * k + c], A[col * k + c]);
      std::swap(rhs[piv], rhs[col]);
    }
    const double d = A[col * k + col];
    for (std::size_t r = col + 1; r < k; ++r) {
      const double factor = A[r * k + col] / d;
      if (factor == 0.0) continue;
      for (std::size_t c = col; c < k; ++c) A[r * k + c] -= factor * A[col * k + c];
      rhs[r] -= factor * rhs[col];
    }
  }
  for (std::size_t col = k; col-- > 0;) {
    double s = rhs[col];
    for (std::size_t c = col + 1; c < k; ++c) s -= A[col * k + c] * rhs[c];
    rhs[col] = s / A[col * k + col];
  }
}

// Smallest v among values with cumulative weight of {x <= v} >= frac * total.
inline double weighted_quantile(std::span<const double> values,
                                std::span<const double> weights, double frac) {
  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = frac * total;
  double cum = 0.0;
  for (std::size_t k : order) {
    cum += weights[k];
    if (cum >= target) return values[k];
  }
  return values[order.back()];
}

}  // namespace nsquant
