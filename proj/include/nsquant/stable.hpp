#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <utility>

#include "nsquant/numerics.hpp"

namespace nsquant {

// One draw from the standard symmetric alpha-stable law with characteristic
// function exp(-|t|^index), by the Chambers-Mallows-Stuck transform.
inline double sas_innovation(double index, std::mt19937_64& rng) {
  if (!(index > 0.0 && index < 2.0))
    throw std::invalid_argument("sas_innovation: index must lie in (0, 2)");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = pi_const * (unif(rng) - 0.5);  // Uniform(-pi/2, pi/2)
  const double w = -std::log(1.0 - unif(rng));    // Exp(1)
  const double a = index;
  return std::sin(a * u) / std::pow(std::cos(u), 1.0 / a) *
         std::pow(std::cos(u - a * u) / w, (1.0 - a) / a);
}

// Gil-Pelaez inversion: F(x) = 1/2 + (1/pi) int_0^inf sin(xt) exp(-t^index)/t dt.
inline double sas_cdf(double x, double index) {
  if (x == 0.0) return 0.5;
  const double cutoff = std::pow(37.0, 1.0 / index);  // exp(-t^index) < 1e-16 beyond
  const double integral = integrate(
      [&](double t) {
        if (t <= 0.0) return x;
        return std::sin(x * t) * std::exp(-std::pow(t, index)) / t;
      },
      0.0, cutoff, 1e-10);
  return 0.5 + integral / pi_const;
}

// Quantile by bisection of sas_cdf to 1e-8; values are cached per (p, index).
inline double sas_quantile(double p, double index) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("sas_quantile: p outside (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -sas_quantile(1.0 - p, index);

  static std::map<std::pair<double, double>, double> cache;
  static std::mutex mu;
  const auto key = std::make_pair(p, index);
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  double lo = 0.0, hi = 1.0;
  while (sas_cdf(hi, index) < p) {
    hi *= 2.0;
    if (hi > 1e9) throw numerical_error("sas_quantile: bracket expansion failed");
  }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (sas_cdf(mid, index) < p ? lo : hi) = mid;
  }
  const double q = 0.5 * (lo + hi);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, q);
  return q;
}

}  // namespace nsquant
