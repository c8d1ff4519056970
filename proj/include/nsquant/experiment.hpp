#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nsquant/analysis.hpp"
#include "nsquant/inference.hpp"
#include "nsquant/parallel.hpp"
#include "nsquant/rng.hpp"
#include "nsquant/simulate.hpp"

namespace nsquant {

enum class ExperimentTest { AS, AI, BS, BI, BF, PC };
inline constexpr std::array<ExperimentTest, 6> all_experiment_tests = {
    ExperimentTest::AS, ExperimentTest::AI, ExperimentTest::BS,
    ExperimentTest::BI, ExperimentTest::BF, ExperimentTest::PC};

inline const char* test_name(ExperimentTest t) {
  switch (t) {
    case ExperimentTest::AS: return "AS";
    case ExperimentTest::AI: return "AI";
    case ExperimentTest::BS: return "BS";
    case ExperimentTest::BI: return "BI";
    case ExperimentTest::BF: return "BF";
    case ExperimentTest::PC: return "PC";
  }
  return "?";
}

inline std::optional<ExperimentTest> parse_experiment_test(const std::string& s) {
  for (ExperimentTest t : all_experiment_tests)
    if (s == test_name(t)) return t;
  return std::nullopt;
}

// Quantile-curve shift for the power study: flat phi = c1, or the bump
// phi(t) = c2 exp(-c3 (t - 1/2)^2).
struct Alternative {
  enum class Kind { flat, bump } kind = Kind::flat;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;

  std::function<double(double)> phi() const {
    if (kind == Kind::flat) {
      const double c = c1;
      return [c](double) { return c; };
    }
    const double a = c2, b = c3;
    return [a, b](double t) { return a * std::exp(-b * (t - 0.5) * (t - 0.5)); };
  }
};

struct ExperimentSpec {
  char scenario = 'a';
  std::size_t n = 300;
  std::vector<double> levels = {0.5};
  std::vector<ExperimentTest> tests = {ExperimentTest::BS, ExperimentTest::BI};
  std::size_t replicates = 100;
  std::size_t bootstrap_B = 2000;
  std::uint64_t seed = 1;
  double beta = 0.05;
  std::size_t grid_points = 200;
  std::optional<Alternative> alternative;
};

inline void validate_spec(const ExperimentSpec& spec) {
  if (spec.scenario != 'a' && spec.scenario != 'b')
    throw std::invalid_argument("experiment: scenario must be 'a' or 'b'");
  if (spec.replicates < 1) throw std::invalid_argument("experiment: replicates must be >= 1");
  if (spec.n < 50) throw std::invalid_argument("experiment: n must be >= 50");
  if (spec.levels.empty()) throw std::invalid_argument("experiment: no quantile levels");
  for (double a : spec.levels)
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("experiment: levels must lie in (0, 1)");
  if (spec.tests.empty()) throw std::invalid_argument("experiment: no tests selected");
  if (!(spec.beta > 0.0 && spec.beta < 1.0))
    throw std::invalid_argument("experiment: beta must lie in (0, 1)");
  if (spec.bootstrap_B < 200)
    throw std::invalid_argument("experiment: bootstrap_B must be >= 200");
  if (spec.alternative && spec.scenario != 'a')
    throw std::invalid_argument("experiment: alternatives are defined for scenario 'a'");
}

struct ExperimentCell {
  ExperimentTest test;
  double alpha;
  std::size_t rejections = 0;
  std::size_t completed = 0;
  std::size_t failures = 0;
  double rate = 0.0;
  double mc_se = 0.0;
};

struct ExperimentTable {
  ExperimentSpec spec;
  std::vector<ExperimentCell> cells;
  std::size_t total_failures = 0;
};

namespace detail {

struct ReplicateOutcome {
  std::array<bool, 6> reject{};
  bool failed = false;
};

}  // namespace detail

// Monte Carlo rejection rates per (test, level). Each replicate draws its own
// series, selects bandwidths, fits, and runs the requested tests against the
// closed-form null curve; numerical failures are excluded with a count.
inline ExperimentTable run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  const Kernel kernel = epanechnikov();
  const Kernel kstar = second_order_kernel(kernel);
  const KernelConstants& kc = epanechnikov_constants();

  const TvAR1Model base = scenario_model(spec.scenario);
  const TvAR1Model model =
      spec.alternative ? shifted_scenario_model(spec.alternative->phi()) : base;

  // the hypothesized curve is always the unshifted closed form
  std::vector<std::function<double(double)>> null_curves;
  for (double a : spec.levels)
    null_curves.push_back(true_quantile(base, QuantileLevel(a)).curve);

  std::array<bool, 6> wanted{};
  for (ExperimentTest t : spec.tests) wanted[static_cast<std::size_t>(t)] = true;
  const bool scb_side = wanted[static_cast<std::size_t>(ExperimentTest::AS)] ||
                        wanted[static_cast<std::size_t>(ExperimentTest::BS)] ||
                        wanted[static_cast<std::size_t>(ExperimentTest::BF)] ||
                        wanted[static_cast<std::size_t>(ExperimentTest::PC)];
  const bool isdt_side = wanted[static_cast<std::size_t>(ExperimentTest::AI)] ||
                         wanted[static_cast<std::size_t>(ExperimentTest::BI)];

  const std::size_t L = spec.levels.size();
  std::vector<detail::ReplicateOutcome> results(spec.replicates * L);

  parallel_for(spec.replicates, [&](std::size_t r) {
    auto rng = make_engine(spec.seed, r, 0);
    const SeriesSample sample = generate(model, spec.n, rng);
    for (std::size_t l = 0; l < L; ++l) {
      detail::ReplicateOutcome& out = results[r * L + l];
      const QuantileLevel level(spec.levels[l]);
      try {
        const BandwidthPlan bp = plan(sample, level, kernel, kc);
        const auto null_on = [&](const EvalGrid& grid) {
          std::vector<double> v(grid.size());
          for (std::size_t j = 0; j < grid.size(); ++j)
            v[j] = null_curves[l](grid.points[j]);
          return v;
        };
        if (scb_side) {
          const double b = usable_bandwidth(bp.b_jack, spec.n);
          const FittedLevel fl = fit_level(sample, level, b, spec.grid_points, kernel);
          const std::vector<double> null_curve = null_on(fl.grid);
          if (wanted[static_cast<std::size_t>(ExperimentTest::AS)])
            out.reject[static_cast<std::size_t>(ExperimentTest::AS)] =
                scb_asymptotic(fl.jack, fl.nuisance, null_curve, spec.beta, kc).reject;
          if (wanted[static_cast<std::size_t>(ExperimentTest::BS)]) {
            const BootstrapReference ref =
                draw_bootstrap_reference(fl.grid, b, spec.n, kstar, spec.bootstrap_B,
                                         derive_seed(spec.seed, r, 1000 + l));
            out.reject[static_cast<std::size_t>(ExperimentTest::BS)] =
                scb_bootstrap(fl.jack, fl.nuisance, null_curve, spec.beta, ref).reject;
          }
          if (wanted[static_cast<std::size_t>(ExperimentTest::PC)]) {
            const auto hw =
                pointwise_half_width(fl.jack, fl.nuisance, spec.beta, kc.kstar_at_zero);
            out.reject[static_cast<std::size_t>(ExperimentTest::PC)] =
                exits_band(fl.jack.q, null_curve, hw);
          }
          if (wanted[static_cast<std::size_t>(ExperimentTest::BF)]) {
            const auto hw = pointwise_half_width(
                fl.jack, fl.nuisance, spec.beta / static_cast<double>(spec.n),
                kc.kstar_at_zero);
            out.reject[static_cast<std::size_t>(ExperimentTest::BF)] =
                exits_band(fl.jack.q, null_curve, hw);
          }
        }
        if (isdt_side) {
          const double b = usable_bandwidth(bp.b_isdt, spec.n);
          const FittedLevel fl = fit_level(sample, level, b, spec.grid_points, kernel);
          const std::vector<double> null_curve = null_on(fl.grid);
          if (wanted[static_cast<std::size_t>(ExperimentTest::AI)])
            out.reject[static_cast<std::size_t>(ExperimentTest::AI)] =
                isdt_asymptotic(fl.jack, fl.nuisance, null_curve, spec.beta, kc).reject;
          if (wanted[static_cast<std::size_t>(ExperimentTest::BI)]) {
            const BootstrapReference ref =
                draw_bootstrap_reference(fl.grid, b, spec.n, kstar, spec.bootstrap_B,
                                         derive_seed(spec.seed, r, 2000 + l));
            out.reject[static_cast<std::size_t>(ExperimentTest::BI)] =
                isdt_bootstrap(fl.jack, fl.nuisance, null_curve, spec.beta, ref).reject;
          }
        }
      } catch (const numerical_error&) {
        out.failed = true;
      }
    }
  });

  ExperimentTable table;
  table.spec = spec;
  for (ExperimentTest t : spec.tests) {
    for (std::size_t l = 0; l < L; ++l) {
      ExperimentCell cell;
      cell.test = t;
      cell.alpha = spec.levels[l];
      for (std::size_t r = 0; r < spec.replicates; ++r) {
        const detail::ReplicateOutcome& out = results[r * L + l];
        if (out.failed) {
          ++cell.failures;
        } else {
          ++cell.completed;
          if (out.reject[static_cast<std::size_t>(t)]) ++cell.rejections;
        }
      }
      if (cell.completed > 0) {
        cell.rate = static_cast<double>(cell.rejections) /
                    static_cast<double>(cell.completed);
        cell.mc_se = std::sqrt(cell.rate * (1.0 - cell.rate) /
                               static_cast<double>(cell.completed));
      }
      table.cells.push_back(cell);
    }
  }
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t r = 0; r < spec.replicates; ++r)
      if (results[r * L + l].failed) ++table.total_failures;
  return table;
}

inline void write_experiment_csv(std::ostream& os, const ExperimentTable& table) {
  os << "test,alpha,scenario,n,rejections,replicates,rate,mc_se\n";
  char buf[64];
  for (const ExperimentCell& c : table.cells) {
    os << test_name(c.test) << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.alpha);
    os << buf << ',' << table.spec.scenario << ',' << table.spec.n << ','
       << c.rejections << ',' << c.completed << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.rate);
    os << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17g", c.mc_se);
    os << buf << '\n';
  }
}

}  // namespace nsquant
