#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsquant/bandwidth.hpp"
#include "nsquant/curve.hpp"
#include "nsquant/errors.hpp"
#include "nsquant/kernels.hpp"
#include "nsquant/nuisance.hpp"
#include "nsquant/parallel.hpp"
#include "nsquant/quantreg.hpp"
#include "nsquant/rng.hpp"

namespace nsquant {

enum class TestMethod { scb_asymptotic, scb_bootstrap, isdt_asymptotic, isdt_bootstrap };

inline const char* method_name(TestMethod m) {
  switch (m) {
    case TestMethod::scb_asymptotic: return "SCB-asymptotic";
    case TestMethod::scb_bootstrap: return "SCB-bootstrap";
    case TestMethod::isdt_asymptotic: return "ISDT-asymptotic";
    case TestMethod::isdt_bootstrap: return "ISDT-bootstrap";
  }
  return "?";
}

// u_beta = -log log[(1 - beta)^{-1/2}]; satisfies exp(-2 exp(-u)) = 1 - beta.
inline double gumbel_u(double beta) {
  return -std::log(-0.5 * std::log1p(-beta));
}

// B(m*) = (2 log m*)^{1/2} + (2 log m*)^{-1/2} [log C - 2 log pi - 2 log 2]/2.
inline double extreme_value_center(double m_star, double frakC) {
  const double two_log = 2.0 * std::log(m_star);
  if (!(two_log > 0.0))
    throw numerical_error("extreme_value_center: need m* > 1");
  return std::sqrt(two_log) +
         (std::log(frakC) - 2.0 * std::log(pi_const) - 2.0 * std::log(2.0)) /
             (2.0 * std::sqrt(two_log));
}

// Coefficients of the asymptotic SCB at size beta.
struct ScbAsymptotic {
  double m_star = 0.0;
  double b_mstar = 0.0;
  double u_beta = 0.0;
  std::vector<double> half_width;
};

struct BootstrapDistribution {
  std::size_t replicates = 0;
  bool sup_norm = true;  // sup draws for the SCB, integral draws for the ISDT
  std::vector<double> draws;
  double q_hat = 0.0;
  std::uint64_t seed = 0;
};

struct TestReport {
  TestMethod method = TestMethod::scb_bootstrap;
  double level_alpha = 0.5;
  double test_size_beta = 0.05;
  double statistic = 0.0;
  double critical_value = 0.0;
  double p_value = 1.0;
  bool reject = false;
  std::vector<double> grid_t;  // band coordinates (empty for ISDT reports)
  std::vector<double> band_lower;
  std::vector<double> band_upper;
  std::string null_description;
  double bandwidth = 0.0;
};

// ---------------------------------------------------------------------------
// Wild bootstrap reference process X_n(t) = sum_i V_i K*_b(t_i - t)/(n b)

// Window weights of K* at each grid point, precomputed once per (grid, b, n).
struct BandWeights {
  std::size_t n = 0;
  std::vector<std::size_t> first;    // first 1-based observation index per grid point
  std::vector<std::size_t> offset;   // into weights, size grid+1
  std::vector<double> weights;       // K*((t_i - t)/b)/(n b)
};

inline BandWeights band_weights(const EvalGrid& grid, double bandwidth, std::size_t n,
                                const Kernel& kernel_star) {
  BandWeights bw;
  bw.n = n;
  bw.first.resize(grid.size());
  bw.offset.assign(grid.size() + 1, 0);
  const double nd = static_cast<double>(n);
  const double reach = kernel_star.support * bandwidth;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double t = grid.points[j];
    const std::size_t i_lo = static_cast<std::size_t>(
        std::max(1.0, std::ceil((t - reach) * nd - 1e-9)));
    const std::size_t i_hi = static_cast<std::size_t>(
        std::min(nd, std::floor((t + reach) * nd + 1e-9)));
    bw.first[j] = i_lo;
    for (std::size_t i = i_lo; i <= i_hi; ++i) {
      const double ti = static_cast<double>(i) / nd;
      bw.weights.push_back(kernel_star.evaluate((ti - t) / bandwidth) / (nd * bandwidth));
    }
    bw.offset[j + 1] = bw.weights.size();
  }
  return bw;
}

inline void draw_band_process(const BandWeights& bw, std::span<const double> normals,
                              std::span<double> out) {
  for (std::size_t j = 0; j + 1 < bw.offset.size(); ++j) {
    double acc = 0.0;
    const std::size_t from = bw.offset[j], to = bw.offset[j + 1];
    const double* v = normals.data() + (bw.first[j] - 1);
    for (std::size_t k = from; k < to; ++k) acc += bw.weights[k] * v[k - from];
    out[j] = acc;
  }
}

// One draw of X_n on the grid from n fresh standard normals.
inline std::vector<double> gaussian_band_process(const EvalGrid& grid, double bandwidth,
                                                 std::size_t n, const Kernel& kernel_star,
                                                 std::mt19937_64& rng) {
  const BandWeights bw = band_weights(grid, bandwidth, n, kernel_star);
  std::vector<double> v(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& x : v) x = normal(rng);
  std::vector<double> out(grid.size());
  draw_band_process(bw, v, out);
  return out;
}

// Both norms of every bootstrap draw; the SCB and ISDT tests for the same
// (n, b, grid, seed, B) reuse one pass.
struct BootstrapReference {
  std::vector<double> sup_norms;
  std::vector<double> int_norms;
  std::uint64_t seed = 0;
};

inline BootstrapReference draw_bootstrap_reference(const EvalGrid& grid, double bandwidth,
                                                   std::size_t n, const Kernel& kernel_star,
                                                   std::size_t replicates,
                                                   std::uint64_t seed) {
  BootstrapReference ref;
  ref.seed = seed;
  ref.sup_norms.resize(replicates);
  ref.int_norms.resize(replicates);
  const BandWeights bw = band_weights(grid, bandwidth, n, kernel_star);
  const double spacing = grid.spacing();
  parallel_for(replicates, [&](std::size_t r) {
    static thread_local std::vector<double> v, x, xsq;
    v.resize(n);
    x.resize(grid.size());
    xsq.resize(grid.size());
    auto rng = make_engine(seed, r);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& e : v) e = normal(rng);
    draw_band_process(bw, v, x);
    double sup = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      sup = std::max(sup, std::fabs(x[j]));
      xsq[j] = x[j] * x[j];
    }
    ref.sup_norms[r] = sup;
    ref.int_norms[r] = trapezoid(xsq, spacing);
  });
  return ref;
}

// Order statistic at rank ceil((1-beta)(B+1)), clipped to B.
inline double bootstrap_quantile(std::span<const double> draws, double beta) {
  const std::size_t B = draws.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil((1.0 - beta) * static_cast<double>(B + 1)));
  rank = std::clamp<std::size_t>(rank, 1, B);
  std::vector<double> copy(draws.begin(), draws.end());
  std::nth_element(copy.begin(), copy.begin() + (rank - 1), copy.end());
  return copy[rank - 1];
}

inline double bootstrap_p_value(std::span<const double> draws, double statistic) {
  std::size_t count = 0;
  for (double d : draws)
    if (d >= statistic) ++count;
  return static_cast<double>(1 + count) / static_cast<double>(draws.size() + 1);
}

inline BootstrapDistribution make_bootstrap_distribution(std::vector<double> draws,
                                                         bool sup_norm, double beta,
                                                         std::uint64_t seed) {
  BootstrapDistribution d;
  d.replicates = draws.size();
  d.sup_norm = sup_norm;
  d.q_hat = bootstrap_quantile(draws, beta);
  d.draws = std::move(draws);
  d.seed = seed;
  return d;
}

// ---------------------------------------------------------------------------
// Tests

// Asymptotic SCB centered on the jackknife curve (the bias term is removed by
// the jackknife rather than estimated): half width
// sqrt(phi) sigma / (sqrt(n b) f) * (B(m*) + u_beta / sqrt(2 log m*)), p-value
// from the Gumbel law exp(-2 exp(-x)).
inline TestReport scb_asymptotic(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                 std::span<const double> null_curve, double beta,
                                 const KernelConstants& kc) {
  const std::size_t n = curve.sample_size;
  const double b = curve.bandwidth;
  const double root_nb = std::sqrt(static_cast<double>(n) * b);
  const double root_phi = std::sqrt(kc.phi);

  ScbAsymptotic coeff;
  coeff.m_star = 1.0 / b;
  coeff.b_mstar = extreme_value_center(coeff.m_star, kc.frakC);
  coeff.u_beta = gumbel_u(beta);
  const double two_log = 2.0 * std::log(coeff.m_star);
  const double critical = coeff.b_mstar + coeff.u_beta / std::sqrt(two_log);

  TestReport rep;
  rep.method = TestMethod::scb_asymptotic;
  rep.level_alpha = curve.level;
  rep.test_size_beta = beta;
  rep.bandwidth = b;
  rep.critical_value = critical;
  rep.grid_t = curve.grid.points;
  rep.band_lower.resize(curve.q.size());
  rep.band_upper.resize(curve.q.size());
  coeff.half_width.resize(curve.q.size());

  double stat = 0.0;
  for (std::size_t j = 0; j < curve.q.size(); ++j) {
    const double sd = std::sqrt(nuis.sigma2[j]);
    if (!(sd > 0.0) || !(nuis.density[j] > 0.0) || !std::isfinite(sd))
      throw numerical_error("scb_asymptotic: non-positive nuisance estimate");
    const double scale = root_nb * nuis.density[j] / (root_phi * sd);
    stat = std::max(stat, scale * std::fabs(curve.q[j] - null_curve[j]));
    coeff.half_width[j] = critical / scale;
    rep.band_lower[j] = curve.q[j] - coeff.half_width[j];
    rep.band_upper[j] = curve.q[j] + coeff.half_width[j];
  }
  rep.statistic = stat;
  const double x_obs = (stat - coeff.b_mstar) * std::sqrt(two_log);
  rep.p_value = -std::expm1(-2.0 * std::exp(-x_obs));
  rep.reject = stat > critical;
  return rep;
}

inline ScbAsymptotic scb_asymptotic_coefficients(const QuantileCurve& curve,
                                                 const NuisanceEstimates& nuis,
                                                 double beta, const KernelConstants& kc) {
  ScbAsymptotic coeff;
  const std::size_t n = curve.sample_size;
  const double b = curve.bandwidth;
  coeff.m_star = 1.0 / b;
  coeff.b_mstar = extreme_value_center(coeff.m_star, kc.frakC);
  coeff.u_beta = gumbel_u(beta);
  const double critical =
      coeff.b_mstar + coeff.u_beta / std::sqrt(2.0 * std::log(coeff.m_star));
  const double root_nb = std::sqrt(static_cast<double>(n) * b);
  coeff.half_width.resize(curve.q.size());
  for (std::size_t j = 0; j < curve.q.size(); ++j)
    coeff.half_width[j] = critical * std::sqrt(kc.phi * nuis.sigma2[j]) /
                          (root_nb * nuis.density[j]);
  return coeff;
}

// Bootstrap SCB: band Q_tilde +- q_hat / sqrt(pi_hat); the dual statistic is
// sup sqrt(pi_hat) |Q_tilde - Q0| against the sup norms of X_n.
inline TestReport scb_bootstrap(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                std::span<const double> null_curve, double beta,
                                const BootstrapReference& ref) {
  TestReport rep;
  rep.method = TestMethod::scb_bootstrap;
  rep.level_alpha = curve.level;
  rep.test_size_beta = beta;
  rep.bandwidth = curve.bandwidth;
  double stat = 0.0;
  for (std::size_t j = 0; j < curve.q.size(); ++j)
    stat = std::max(stat, std::sqrt(nuis.pi_hat[j]) *
                              std::fabs(curve.q[j] - null_curve[j]));
  rep.statistic = stat;
  rep.critical_value = bootstrap_quantile(ref.sup_norms, beta);
  rep.p_value = bootstrap_p_value(ref.sup_norms, stat);
  rep.reject = stat > rep.critical_value;
  rep.grid_t = curve.grid.points;
  rep.band_lower.resize(curve.q.size());
  rep.band_upper.resize(curve.q.size());
  for (std::size_t j = 0; j < curve.q.size(); ++j) {
    const double hw = rep.critical_value / std::sqrt(nuis.pi_hat[j]);
    rep.band_lower[j] = curve.q[j] - hw;
    rep.band_upper[j] = curve.q[j] + hw;
  }
  return rep;
}

inline TestReport scb_bootstrap(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                std::span<const double> null_curve, double beta,
                                std::size_t replicates, std::uint64_t seed,
                                const Kernel& kernel_star) {
  if (replicates < 200)
    throw std::invalid_argument("scb_bootstrap: need at least 200 replicates");
  const BootstrapReference ref = draw_bootstrap_reference(
      curve.grid, curve.bandwidth, curve.sample_size, kernel_star, replicates, seed);
  return scb_bootstrap(curve, nuis, null_curve, beta, ref);
}

// Asymptotic ISDT: T_n* = int (Q_tilde - Q0)^2 pi over the grid interval,
// centered by K*conv K*(0) int pi* / sqrt(b) and scaled by
// sqrt(2 int [K*conv K*]^2 int pi*^2), pi* = pi sigma^2 / f^2.
inline TestReport isdt_asymptotic(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                  std::span<const double> null_curve, double beta,
                                  const KernelConstants& kc,
                                  std::span<const double> pi_weight = {}) {
  const std::size_t P = curve.q.size();
  const double spacing = curve.grid.spacing();
  std::vector<double> integrand(P), pistar(P), pistar_sq(P);
  for (std::size_t j = 0; j < P; ++j) {
    const double pij = pi_weight.empty() ? 1.0 : pi_weight[j];
    if (pij < 0.0) throw std::invalid_argument("isdt_asymptotic: negative weight");
    const double dev = curve.q[j] - null_curve[j];
    integrand[j] = dev * dev * pij;
    pistar[j] = pij * nuis.sigma2[j] / (nuis.density[j] * nuis.density[j]);
    pistar_sq[j] = pistar[j] * pistar[j];
  }
  const double t_star = trapezoid(integrand, spacing);
  const double int_pistar = trapezoid(pistar, spacing);
  const double int_pistar_sq = trapezoid(pistar_sq, spacing);
  const double b = curve.bandwidth;
  const double n = static_cast<double>(curve.sample_size);
  const double center = kc.kstar_at_zero * int_pistar / std::sqrt(b);
  const double sdev = std::sqrt(2.0 * kc.kstar_conv_sq_integral * int_pistar_sq);

  TestReport rep;
  rep.method = TestMethod::isdt_asymptotic;
  rep.level_alpha = curve.level;
  rep.test_size_beta = beta;
  rep.bandwidth = b;
  rep.statistic = (n * std::sqrt(b) * t_star - center) / sdev;
  rep.critical_value = normal_quantile(1.0 - beta);
  rep.p_value = 1.0 - normal_cdf(rep.statistic);
  rep.reject = rep.statistic > rep.critical_value;
  return rep;
}

// Bootstrap ISDT: statistic int (Q_tilde - Q0)^2 pi_hat dt against the
// integral norms of X_n.
inline TestReport isdt_bootstrap(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                 std::span<const double> null_curve, double beta,
                                 const BootstrapReference& ref) {
  const std::size_t P = curve.q.size();
  std::vector<double> integrand(P);
  for (std::size_t j = 0; j < P; ++j) {
    const double dev = curve.q[j] - null_curve[j];
    integrand[j] = dev * dev * nuis.pi_hat[j];
  }
  TestReport rep;
  rep.method = TestMethod::isdt_bootstrap;
  rep.level_alpha = curve.level;
  rep.test_size_beta = beta;
  rep.bandwidth = curve.bandwidth;
  rep.statistic = trapezoid(integrand, curve.grid.spacing());
  rep.critical_value = bootstrap_quantile(ref.int_norms, beta);
  rep.p_value = bootstrap_p_value(ref.int_norms, rep.statistic);
  rep.reject = rep.statistic > rep.critical_value;
  return rep;
}

inline TestReport isdt_bootstrap(const QuantileCurve& curve, const NuisanceEstimates& nuis,
                                 std::span<const double> null_curve, double beta,
                                 std::size_t replicates, std::uint64_t seed,
                                 const Kernel& kernel_star) {
  if (replicates < 200)
    throw std::invalid_argument("isdt_bootstrap: need at least 200 replicates");
  const BootstrapReference ref = draw_bootstrap_reference(
      curve.grid, curve.bandwidth, curve.sample_size, kernel_star, replicates, seed);
  return isdt_bootstrap(curve, nuis, null_curve, beta, ref);
}

// Pointwise normal band (and its Bonferroni variant with beta/n), used as
// comparators in the simulation study: Q_tilde +- z sqrt(phi*) sigma/(sqrt(nb) f).
inline std::vector<double> pointwise_half_width(const QuantileCurve& curve,
                                                const NuisanceEstimates& nuis,
                                                double beta, double phi_star) {
  const double z = normal_quantile(1.0 - beta / 2.0);
  const double root_nb =
      std::sqrt(static_cast<double>(curve.sample_size) * curve.bandwidth);
  std::vector<double> hw(curve.q.size());
  for (std::size_t j = 0; j < hw.size(); ++j)
    hw[j] = z * std::sqrt(phi_star * nuis.sigma2[j]) / (root_nb * nuis.density[j]);
  return hw;
}

inline bool exits_band(std::span<const double> center, std::span<const double> null_curve,
                       std::span<const double> half_width) {
  for (std::size_t j = 0; j < center.size(); ++j)
    if (std::fabs(center[j] - null_curve[j]) > half_width[j]) return true;
  return false;
}

// ---------------------------------------------------------------------------
// Analytic local power

// SCB local power 1 - (1-beta)^{s(eta)/2} with
// s(eta) = int exp(eta f/(sqrt(phi) sigma)) + int exp(-eta f/(sqrt(phi) sigma)).
inline double scb_power(const std::function<double(double)>& eta,
                        const std::function<double(double)>& sigma_true,
                        const std::function<double(double)>& f_true, double beta,
                        const KernelConstants& kc) {
  const std::size_t P = 2001;
  std::vector<double> plus(P), minus(P);
  const double root_phi = std::sqrt(kc.phi);
  for (std::size_t j = 0; j < P; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(P - 1);
    const double r = eta(t) * f_true(t) / (root_phi * sigma_true(t));
    plus[j] = std::exp(r);
    minus[j] = std::exp(-r);
  }
  const double h = 1.0 / static_cast<double>(P - 1);
  const double s = trapezoid(plus, h) + trapezoid(minus, h);
  return 1.0 - std::pow(1.0 - beta, 0.5 * s);
}

// ISDT local power Phi(int eta^2 pi / sqrt(2 int [K* conv K*]^2 int pi*^2) - z_{1-beta}).
inline double isdt_power(const std::function<double(double)>& eta,
                         const std::function<double(double)>& pi_weight,
                         const std::function<double(double)>& sigma_true,
                         const std::function<double(double)>& f_true, double beta,
                         const KernelConstants& kc) {
  const std::size_t P = 2001;
  std::vector<double> num(P), pistar_sq(P);
  for (std::size_t j = 0; j < P; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(P - 1);
    const double e = eta(t);
    const double pij = pi_weight(t);
    num[j] = e * e * pij;
    const double f = f_true(t);
    const double ps = pij * sigma_true(t) * sigma_true(t) / (f * f);
    pistar_sq[j] = ps * ps;
  }
  const double h = 1.0 / static_cast<double>(P - 1);
  const double shift = trapezoid(num, h) /
                       std::sqrt(2.0 * kc.kstar_conv_sq_integral * trapezoid(pistar_sq, h));
  return normal_cdf(shift - normal_quantile(1.0 - beta));
}

}  // namespace nsquant
