#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsquant/errors.hpp"
#include "nsquant/numerics.hpp"

namespace nsquant {

// Quantile level alpha in (0, 1); carries the check function and its score.
struct QuantileLevel {
  double alpha;
  explicit QuantileLevel(double a) : alpha(a) {
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("quantile level must lie in (0, 1)");
  }
};

// rho_alpha(x) = alpha x^+ + (1 - alpha)(-x)^+
inline double check_loss(QuantileLevel level, double x) {
  return x >= 0.0 ? level.alpha * x : (level.alpha - 1.0) * x;
}

// psi_alpha(x) = alpha - I{x <= 0}
inline double score(QuantileLevel level, double x) {
  return x <= 0.0 ? level.alpha - 1.0 : level.alpha;
}

inline constexpr std::size_t no_partner = static_cast<std::size_t>(-1);

// Exact minimizer of the weighted local linear check loss. The solution is a
// vertex: a line through the data points (anchor, partner), or the weighted
// quantile at a single time point when the slope is unidentified.
struct WeightedLinearFit {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double objective = 0.0;
  std::size_t anchor = 0;
  std::size_t partner = no_partner;
};

struct ParametricFit {
  std::vector<double> theta;
  std::size_t basis_dim = 0;
  double objective = 0.0;
};

namespace detail {

struct Breakpoint {
  double s;
  double mass;
  std::size_t owner;
};

// Smallest breakpoint value s* whose cumulative mass over {s <= s*} reaches
// tau. Quickselect with 3-way partitioning; permutes the array.
inline double select_threshold(std::vector<Breakpoint>& b, double tau) {
  std::size_t lo = 0, hi = b.size();
  int rounds = 0;
  const auto scan = [&](std::size_t from, std::size_t to, double t) {
    std::sort(b.begin() + from, b.begin() + to,
              [](const Breakpoint& p, const Breakpoint& q) { return p.s < q.s; });
    double cum = 0.0;
    for (std::size_t i = from; i < to; ++i) {
      cum += b[i].mass;
      if (cum >= t) return b[i].s;
    }
    return b[to - 1].s;
  };
  for (;;) {
    if (hi - lo <= 24 || ++rounds > 64) return scan(lo, hi, tau);
    const double x = b[lo].s, y = b[lo + (hi - lo) / 2].s, z = b[hi - 1].s;
    const double pivot = std::max(std::min(x, y), std::min(std::max(x, y), z));
    std::size_t lt = lo, i = lo, gt = hi;
    double mass_lt = 0.0, mass_eq = 0.0;
    while (i < gt) {
      if (b[i].s < pivot) {
        if (i != lt) std::swap(b[i], b[lt]);
        mass_lt += b[lt].mass;
        ++lt;
        ++i;
      } else if (b[i].s > pivot) {
        --gt;
        std::swap(b[i], b[gt]);
      } else {
        mass_eq += b[i].mass;
        ++i;
      }
    }
    if (tau <= mass_lt) {
      hi = lt;
    } else if (tau <= mass_lt + mass_eq) {
      return pivot;
    } else {
      tau -= mass_lt + mass_eq;
      lo = gt;
    }
  }
}

struct SweepOutcome {
  std::array<double, 2> s{};
  std::array<std::size_t, 2> owner{};
  int count = 0;
};

// Minimizes h(s) = sum_j w_j rho_alpha(c_j - s d_j) over s. Entries with
// d_j == 0 contribute constants and produce no breakpoint. Returns false when
// no breakpoint exists. The minimum is attained at a breakpoint; when the
// optimum is a flat segment both endpoint breakpoints are reported.
inline bool sweep_minimum(double alpha, std::span<const double> c,
                          std::span<const double> d, std::span<const double> w,
                          std::vector<Breakpoint>& scratch, SweepOutcome& out) {
  scratch.clear();
  double sum_wd = 0.0, mass_neg = 0.0, total_mass = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    const double wj = w[j];
    if (!(wj > 0.0)) continue;
    const double dj = d[j];
    sum_wd += wj * dj;
    if (dj != 0.0) {
      const double mj = wj * std::fabs(dj);
      scratch.push_back({c[j] / dj, mj, j});
      total_mass += mj;
      if (dj < 0.0) mass_neg += mj;
    }
  }
  if (scratch.empty()) return false;

  const double c0 = -alpha * sum_wd - mass_neg;  // h'(s) left of all breakpoints
  double tau = std::clamp(-c0, 0.0, total_mass);
  double s_star = select_threshold(scratch, tau);

  // Finalize against the exact multiset: cumulative mass at s*, neighbors, and
  // owners; correct the selection if accumulated rounding moved it off the
  // subgradient sign change.
  const double slack = 1e-9 * total_mass;
  const double inf = std::numeric_limits<double>::infinity();
  double cum_at = 0.0, mass_at = 0.0, prev = -inf, next = inf;
  std::size_t owner_at = no_partner, owner_next = no_partner;
  const auto finalize = [&]() {
    cum_at = mass_at = 0.0;
    prev = -inf;
    next = inf;
    owner_at = owner_next = no_partner;
    for (const Breakpoint& p : scratch) {
      if (p.s < s_star) {
        cum_at += p.mass;
        prev = std::max(prev, p.s);
      } else if (p.s == s_star) {
        cum_at += p.mass;
        mass_at += p.mass;
        owner_at = std::min(owner_at, p.owner);
      } else if (p.s < next) {
        next = p.s;
        owner_next = p.owner;
      } else if (p.s == next) {
        owner_next = std::min(owner_next, p.owner);
      }
    }
  };
  finalize();
  for (int pass = 0; pass < 2; ++pass) {
    if (c0 + cum_at - mass_at > slack && prev > -inf) {
      s_star = prev;
      finalize();
    } else if (c0 + cum_at < -slack && next < inf) {
      s_star = next;
      finalize();
    } else {
      break;
    }
  }

  out.count = 1;
  out.s[0] = s_star;
  out.owner[0] = owner_at;
  const double flat_tol = 1e-12 * total_mass;
  if (std::fabs(c0 + cum_at) <= flat_tol && next < inf) {
    out.count = 2;
    out.s[1] = next;
    out.owner[1] = owner_next;
  }
  return true;
}

// Tie rule for equal-objective vertices: smallest |beta1|, then smallest beta0.
inline bool fit_improves(double obj, double b1, double b0, double best_obj,
                         double best_b1, double best_b0) {
  const double tol = 1e-12 * std::max(obj, best_obj);
  if (obj < best_obj - tol) return true;
  if (obj > best_obj + tol) return false;
  if (std::fabs(b1) != std::fabs(best_b1)) return std::fabs(b1) < std::fabs(best_b1);
  return b0 < best_b0;
}

}  // namespace detail

// Global minimizer of sum_i w_i rho_alpha(x_i - beta0 - beta1 u_i) over lines.
// Some optimal line interpolates two positively weighted points; for each
// anchor point the optimal slope is a weighted quantile of the pairwise slopes,
// so the enumeration over pairs reduces to one selection per anchor.
inline WeightedLinearFit solve_weighted_local_linear(QuantileLevel level,
                                                     std::span<const double> u,
                                                     std::span<const double> x,
                                                     std::span<const double> w) {
  if (u.size() != x.size() || u.size() != w.size())
    throw std::invalid_argument("solve_weighted_local_linear: length mismatch");

  static thread_local std::vector<double> fu, fx, fw, cs, ds;
  static thread_local std::vector<std::size_t> orig;
  static thread_local std::vector<detail::Breakpoint> scratch;
  fu.clear();
  fx.clear();
  fw.clear();
  orig.clear();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (w[i] > 0.0) {
      fu.push_back(u[i]);
      fx.push_back(x[i]);
      fw.push_back(w[i]);
      orig.push_back(i);
    }
  }
  const std::size_t m = fu.size();
  if (m == 0) throw empty_window_error("no positive weights in window");

  bool one_time = true;
  for (std::size_t j = 1; j < m && one_time; ++j) one_time = (fu[j] == fu[0]);

  const auto objective_at = [&](double b0, double b1) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      s += fw[j] * check_loss(level, fx[j] - b0 - b1 * fu[j]);
    return s;
  };

  WeightedLinearFit fit;
  if (one_time) {
    // Slope unidentified: local-constant limit, weighted alpha-quantile.
    fit.beta1 = 0.0;
    fit.beta0 = weighted_quantile(fx, fw, level.alpha);
    fit.objective = objective_at(fit.beta0, 0.0);
    for (std::size_t j = 0; j < m; ++j)
      if (fx[j] == fit.beta0) {
        fit.anchor = orig[j];
        break;
      }
    fit.partner = no_partner;
    return fit;
  }

  cs.resize(m);
  ds.resize(m);
  double best_obj = std::numeric_limits<double>::infinity();
  double best_b0 = 0.0, best_b1 = 0.0;
  std::size_t best_anchor = 0, best_partner = no_partner;
  detail::SweepOutcome outcome;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t j = 0; j < m; ++j) {
      cs[j] = fx[j] - fx[a];
      ds[j] = fu[j] - fu[a];
    }
    if (!detail::sweep_minimum(level.alpha, cs, ds, fw, scratch, outcome)) continue;
    for (int k = 0; k < outcome.count; ++k) {
      const double b1 = outcome.s[k];
      const double b0 = fx[a] - b1 * fu[a];
      const double obj = objective_at(b0, b1);
      if (best_partner == no_partner ||
          detail::fit_improves(obj, b1, b0, best_obj, best_b1, best_b0)) {
        best_obj = obj;
        best_b0 = b0;
        best_b1 = b1;
        best_anchor = orig[a];
        best_partner = outcome.owner[k] == no_partner ? orig[a] : orig[outcome.owner[k]];
      }
    }
  }
  fit.beta0 = best_b0;
  fit.beta1 = best_b1;
  fit.objective = best_obj;
  fit.anchor = best_anchor;
  fit.partner = best_partner;
  return fit;
}

// Basis evaluator for parametric nulls: writes g(t) into out (size = dim).
using BasisFunction = std::function<void(double, std::span<double>)>;

// (1, t, t^2, ...) up to the given dimension.
inline BasisFunction polynomial_basis(std::size_t dim) {
  return [dim](double t, std::span<double> out) {
    double p = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      out[j] = p;
      p *= t;
    }
  };
}

// Exact parametric quantile regression for k <= 3: the minimizer interpolates
// k data points, so candidates are enumerated as (k-1)-point constraints plus
// a one-dimensional breakpoint sweep along the remaining direction.
inline ParametricFit solve_parametric(QuantileLevel level, std::span<const double> times,
                                      std::span<const double> values,
                                      const BasisFunction& basis, std::size_t dim) {
  const std::size_t n = times.size();
  if (values.size() != n) throw std::invalid_argument("solve_parametric: length mismatch");
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("solve_parametric: basis dimension must be 1..3");
  if (n < dim) throw std::invalid_argument("solve_parametric: need n >= basis dimension");

  std::vector<double> g(n * dim);
  for (std::size_t i = 0; i < n; ++i)
    basis(times[i], std::span<double>(g.data() + i * dim, dim));
  const auto gi = [&](std::size_t i) { return g.data() + i * dim; };

  std::vector<double> unit_w(n, 1.0), cs(n), ds(n);
  std::vector<detail::Breakpoint> scratch;

  std::vector<double> theta(dim), best_theta;
  double best_obj = std::numeric_limits<double>::infinity();
  const auto objective_at = [&](const std::vector<double>& th) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double fitv = 0.0;
      for (std::size_t j = 0; j < dim; ++j) fitv += th[j] * gi(i)[j];
      s += check_loss(level, values[i] - fitv);
    }
    return s;
  };
  const auto consider = [&](const std::vector<double>& th) {
    const double obj = objective_at(th);
    if (best_theta.empty() || obj < best_obj - 1e-12 * std::max(obj, best_obj) ||
        (obj <= best_obj + 1e-12 * std::max(obj, best_obj) &&
         std::lexicographical_compare(th.begin(), th.end(), best_theta.begin(),
                                      best_theta.end()))) {
      best_obj = obj;
      best_theta = th;
    }
  };

  detail::SweepOutcome outcome;
  // theta(s) = base + s * dir; residuals c_i - s * d_i feed the sweep.
  const auto sweep_family = [&](const std::vector<double>& base,
                                const std::vector<double>& dir) {
    for (std::size_t i = 0; i < n; ++i) {
      double fb = 0.0, fd = 0.0;
      for (std::size_t j = 0; j < dim; ++j) {
        fb += base[j] * gi(i)[j];
        fd += dir[j] * gi(i)[j];
      }
      cs[i] = values[i] - fb;
      ds[i] = fd;
    }
    if (!detail::sweep_minimum(level.alpha, cs, ds, unit_w, scratch, outcome)) return;
    for (int k = 0; k < outcome.count; ++k) {
      for (std::size_t j = 0; j < dim; ++j) theta[j] = base[j] + outcome.s[k] * dir[j];
      consider(theta);
    }
  };

  if (dim == 1) {
    sweep_family({0.0}, {1.0});
  } else if (dim == 2) {
    for (std::size_t a = 0; a < n; ++a) {
      const double* ga = gi(a);
      const double q = ga[0] * ga[0] + ga[1] * ga[1];
      if (q <= 0.0) continue;
      const double r = values[a] / q;
      sweep_family({r * ga[0], r * ga[1]}, {-ga[1], ga[0]});
    }
  } else {
    for (std::size_t a = 0; a < n; ++a) {
      const double* ga = gi(a);
      const double qa = ga[0] * ga[0] + ga[1] * ga[1] + ga[2] * ga[2];
      if (qa <= 0.0) continue;
      for (std::size_t b = a + 1; b < n; ++b) {
        const double* gb = gi(b);
        std::vector<double> dir = {ga[1] * gb[2] - ga[2] * gb[1],
                                   ga[2] * gb[0] - ga[0] * gb[2],
                                   ga[0] * gb[1] - ga[1] * gb[0]};
        const double qb = gb[0] * gb[0] + gb[1] * gb[1] + gb[2] * gb[2];
        const double nd = dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2];
        if (nd <= 1e-24 * qa * qb) continue;  // parallel constraints
        // base = A^T (A A^T)^{-1} (X_a, X_b) for A = [g_a; g_b]
        const double aa = qa, bb = qb;
        double ab = ga[0] * gb[0] + ga[1] * gb[1] + ga[2] * gb[2];
        const double det = aa * bb - ab * ab;
        if (det == 0.0) continue;
        const double la = (bb * values[a] - ab * values[b]) / det;
        const double lb = (aa * values[b] - ab * values[a]) / det;
        sweep_family({la * ga[0] + lb * gb[0], la * ga[1] + lb * gb[1],
                      la * ga[2] + lb * gb[2]},
                     dir);
      }
    }
  }

  if (best_theta.empty())
    throw degenerate_basis_error("solve_parametric: all candidate subsets rank-deficient");
  ParametricFit fit;
  fit.theta = std::move(best_theta);
  fit.basis_dim = dim;
  fit.objective = best_obj;
  return fit;
}

}  // namespace nsquant
