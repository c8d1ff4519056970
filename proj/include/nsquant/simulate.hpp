#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "nsquant/curve.hpp"
#include "nsquant/numerics.hpp"
#include "nsquant/stable.hpp"

namespace nsquant {

enum class InnovationLaw { gaussian, sas };

// Time-varying AR(1): G(t, F_i) = a0(t) + a1(t) G(t, F_{i-1}) + delta(t) eps_i,
// observed as X_i = G(i/n, F_i).
struct TvAR1Model {
  std::function<double(double)> a0;
  std::function<double(double)> a1;
  std::function<double(double)> delta;
  InnovationLaw innovation = InnovationLaw::gaussian;
  double stable_index = 1.8;
};

// Checks sup |a1| < 1 and delta > 0 on a 1000-point grid; returns sup |a1|.
inline double validate_model(const TvAR1Model& model) {
  double sup_a1 = 0.0;
  for (int j = 0; j <= 1000; ++j) {
    const double t = static_cast<double>(j) / 1000.0;
    sup_a1 = std::max(sup_a1, std::fabs(model.a1(t)));
    if (!(model.delta(t) > 0.0))
      throw std::invalid_argument("TvAR1Model: delta must be positive");
  }
  if (!(sup_a1 < 1.0))
    throw std::invalid_argument("TvAR1Model: need sup |a1| < 1");
  return sup_a1;
}

// The simulation design of the accuracy study: a0 = 0, a1(t) = sin(2 pi t)/2,
// delta(t) = exp((t - 1/4)^2), Gaussian ('a') or SaS(1.8) ('b') innovations.
inline TvAR1Model scenario_model(char scenario) {
  if (scenario != 'a' && scenario != 'b')
    throw std::invalid_argument("scenario must be 'a' or 'b'");
  TvAR1Model m;
  m.a0 = [](double) { return 0.0; };
  m.a1 = [](double t) { return 0.5 * std::sin(2.0 * pi_const * t); };
  m.delta = [](double t) { return std::exp((t - 0.25) * (t - 0.25)); };
  m.innovation = scenario == 'a' ? InnovationLaw::gaussian : InnovationLaw::sas;
  m.stable_index = 1.8;
  return m;
}

// The power-study design: the quantile curve is shifted by phi through
// a0(t) = phi(t) (1 - a1(t)); innovations are Gaussian.
inline TvAR1Model shifted_scenario_model(const std::function<double(double)>& phi) {
  TvAR1Model m = scenario_model('a');
  const auto a1 = m.a1;
  m.a0 = [phi, a1](double t) { return phi(t) * (1.0 - a1(t)); };
  return m;
}

// Exact sampling of X_i = zeta_i(i/n) through the frozen-t MA(infinity)
// representation a0/(1-a1) + delta sum_j a1^j eps_{i-j}, truncated where the
// coefficient drops below 1e-12, over one shared innovation stream.
inline SeriesSample generate(const TvAR1Model& model, std::size_t n,
                             std::mt19937_64& rng) {
  const double sup_a1 = validate_model(model);
  std::size_t tail = 0;
  if (sup_a1 > 0.0)
    tail = static_cast<std::size_t>(
        std::ceil(std::log(1e-12) / std::log(sup_a1)));

  std::vector<double> eps(n + tail);
  if (model.innovation == InnovationLaw::gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& e : eps) e = normal(rng);
  } else {
    for (auto& e : eps) e = sas_innovation(model.stable_index, rng);
  }

  SeriesSample sample;
  sample.values.resize(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    const double a1t = model.a1(t);
    double coef = 1.0, acc = 0.0;
    for (std::size_t j = 0; j <= tail; ++j) {
      acc += coef * eps[i - 1 + tail - j];
      coef *= a1t;
      if (coef == 0.0) break;
    }
    sample.values[i - 1] = model.a0(t) / (1.0 - a1t) + model.delta(t) * acc;
  }
  return sample;
}

// Closed-form alpha-quantile curve delta(t) Q_eps / [1 - |a1(t)|^nu]^{1/nu},
// with nu = 2 for Gaussian innovations and nu = stable index for SaS.
struct TrueQuantile {
  double level = 0.5;
  std::function<double(double)> curve;
  double nu = 2.0;
  double eps_quantile = 0.0;
};

inline TrueQuantile true_quantile(const TvAR1Model& model, QuantileLevel level) {
  TrueQuantile tq;
  tq.level = level.alpha;
  if (model.innovation == InnovationLaw::gaussian) {
    tq.nu = 2.0;
    tq.eps_quantile = normal_quantile(level.alpha);
  } else {
    tq.nu = model.stable_index;
    tq.eps_quantile = sas_quantile(level.alpha, model.stable_index);
  }
  const auto a0 = model.a0;
  const auto a1 = model.a1;
  const auto delta = model.delta;
  const double nu = tq.nu;
  const double qe = tq.eps_quantile;
  tq.curve = [a0, a1, delta, nu, qe](double t) {
    const double a = a1(t);
    const double shift = a0(t) / (1.0 - a);
    return shift + delta(t) * qe / std::pow(1.0 - std::pow(std::fabs(a), nu), 1.0 / nu);
  };
  return tq;
}

}  // namespace nsquant
