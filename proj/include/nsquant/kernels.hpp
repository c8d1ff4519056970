#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nsquant/numerics.hpp"

namespace nsquant {

// A symmetric kernel with compact support [-support, support]. Condition (K1)
// kernels have support 1; the jackknife second-order kernel has support sqrt(2)
// and takes negative values.
struct Kernel {
  std::function<double(double)> evaluate;
  std::function<double(double)> derivative;
  std::string name;
  double support = 1.0;

  double operator()(double x) const { return evaluate(x); }
};

// Derived constants entering critical values: phi = int K^2, frakC = int K'^2 / phi,
// mu2 = int x^2 K, plus the convolution functionals of the second-order kernel.
struct KernelConstants {
  double phi = 0.0;
  double frakC = 0.0;
  double mu2 = 0.0;
  double kstar_at_zero = 0.0;           // K*conv K* at 0 == int K*^2
  double kstar_conv_sq_integral = 0.0;  // int [K*conv K*(t)]^2 dt
};

inline Kernel epanechnikov() {
  Kernel k;
  k.name = "epanechnikov";
  k.support = 1.0;
  k.evaluate = [](double x) { return 0.75 * std::max(0.0, 1.0 - x * x); };
  k.derivative = [](double x) { return std::fabs(x) < 1.0 ? -1.5 * x : 0.0; };
  return k;
}

// Jackknife second-order kernel K*(x) = 2K(x) - K(x/sqrt(2))/sqrt(2). Its second
// moment vanishes, which is what removes the O(b^2) bias of the local fit.
inline Kernel second_order_kernel(const Kernel& k) {
  const double rt2 = std::sqrt(2.0);
  Kernel s;
  s.name = k.name + "_second_order";
  s.support = rt2 * k.support;
  s.evaluate = [base = k.evaluate, rt2](double x) {
    return 2.0 * base(x) - base(x / rt2) / rt2;
  };
  s.derivative = [der = k.derivative, rt2](double x) {
    return 2.0 * der(x) - der(x / rt2) / 2.0;
  };
  return s;
}

// Evaluates (K*conv K*)(t) = int K*(u) K*(u - t) du by adaptive quadrature.
inline double kstar_convolution(const Kernel& kstar, double t, double tol = 1e-10) {
  const double s = kstar.support;
  const double lo = std::max(-s, t - s);
  const double hi = std::min(s, t + s);
  if (lo >= hi) return 0.0;
  return integrate([&](double u) { return kstar.evaluate(u) * kstar.evaluate(u - t); },
                   lo, hi, tol);
}

// Computes all constants for a kernel k; the convolution functionals refer to
// the second-order kernel derived from k. The convolution is tabulated on a
// 2001-point grid over its support and squared-integrated by trapezoid.
inline KernelConstants constants(const Kernel& k) {
  KernelConstants c;
  const double s = k.support;
  c.phi = integrate([&](double x) { double v = k.evaluate(x); return v * v; }, -s, s);
  const double dsq =
      integrate([&](double x) { double v = k.derivative(x); return v * v; }, -s, s);
  c.frakC = dsq / c.phi;
  c.mu2 = integrate([&](double x) { return x * x * k.evaluate(x); }, -s, s);

  const Kernel kstar = second_order_kernel(k);
  c.kstar_at_zero = kstar_convolution(kstar, 0.0);
  const std::size_t points = 2001;
  const double half = 2.0 * kstar.support;
  std::vector<double> conv_sq(points);
  const double step = 2.0 * half / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = -half + step * static_cast<double>(i);
    const double v = kstar_convolution(kstar, t);
    conv_sq[i] = v * v;
  }
  c.kstar_conv_sq_integral = trapezoid(conv_sq, step);
  return c;
}

}  // namespace nsquant
