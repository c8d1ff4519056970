#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nsquant/quantreg.hpp"
#include "nsquant/rng.hpp"
#include "oracles.hpp"

using namespace nsquant;

TEST_CASE("check loss and score") {
  CHECK(check_loss(QuantileLevel(0.5), -2.0) == Catch::Approx(1.0));
  CHECK(check_loss(QuantileLevel(0.9), 1.0) == Catch::Approx(0.9));
  CHECK(check_loss(QuantileLevel(0.9), -1.0) == Catch::Approx(0.1));
  CHECK(check_loss(QuantileLevel(0.3), 0.0) == 0.0);
  CHECK(check_loss(QuantileLevel(0.3), 5.0) > 0.0);

  CHECK(score(QuantileLevel(0.5), 0.0) == Catch::Approx(-0.5));
  CHECK(score(QuantileLevel(0.9), 3.0) == Catch::Approx(0.9));
  CHECK(score(QuantileLevel(0.25), -1.0) == Catch::Approx(-0.75));

  CHECK_THROWS_AS(QuantileLevel(0.0), std::invalid_argument);
  CHECK_THROWS_AS(QuantileLevel(1.0), std::invalid_argument);
}

TEST_CASE("local linear solver on exact inputs") {
  const QuantileLevel half(0.5);
  std::vector<double> u = {-0.5, -0.25, 0.0, 0.25, 0.5};
  std::vector<double> w = {1.0, 0.5, 2.0, 0.5, 1.0};

  SECTION("constant values interpolate with zero loss") {
    std::vector<double> x(u.size(), 5.0);
    const auto fit = solve_weighted_local_linear(half, u, x, w);
    CHECK(fit.beta0 == 5.0);
    CHECK(fit.beta1 == 0.0);
    CHECK(fit.objective == 0.0);
  }

  SECTION("values on the line 2 + 3u") {
    std::vector<double> x(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) x[i] = 2.0 + 3.0 * u[i];
    const auto fit = solve_weighted_local_linear(half, u, x, w);
    CHECK(fit.beta0 == Catch::Approx(2.0).margin(1e-14));
    CHECK(fit.beta1 == Catch::Approx(3.0).margin(1e-14));
    CHECK(fit.objective == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("three-point example matches grid and pair oracles") {
  const QuantileLevel half(0.5);
  std::vector<double> u = {-0.5, 0.0, 0.5};
  std::vector<double> x = {1.0, 5.0, 2.0};
  std::vector<double> w = {1.0, 1.0, 1.0};
  const auto fit = solve_weighted_local_linear(half, u, x, w);

  const double pair_best = oracle::best_pair_line(half, u, x, w);
  CHECK(fit.objective == Catch::Approx(pair_best).margin(1e-12));

  // dense grid search at resolution 1e-3
  double grid_best = std::numeric_limits<double>::infinity();
  for (double b0 = 0.0; b0 <= 6.0; b0 += 1e-3)
    for (double b1 = -9.0; b1 <= 9.0; b1 += 1e-2)
      grid_best = std::min(grid_best, oracle::pair_line_objective(half, u, x, w, b0, b1));
  CHECK(fit.objective <= grid_best + 1e-12);
  CHECK(grid_best - fit.objective <= 2e-2);
}

TEST_CASE("random small instances equal brute-force pair enumeration") {
  auto rng = make_engine(20240811, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(unif(rng) * 11);
    std::vector<double> u(n), x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = std::round(unif(rng) * 16.0) / 16.0 - 0.5;  // allows repeated times
      x[i] = normal(rng);
      w[i] = unif(rng) < 0.15 ? 0.0 : unif(rng);
    }
    w[0] = std::max(w[0], 0.25);
    const double alpha = 0.05 + 0.9 * unif(rng);
    const QuantileLevel level(alpha);
    const auto fit = solve_weighted_local_linear(level, u, x, w);
    const double best = oracle::best_pair_line(level, u, x, w);
    REQUIRE(fit.objective <= best * (1.0 + 1e-9) + 1e-12);
    REQUIRE(fit.objective >= best * (1.0 - 1e-9) - 1e-12);
    // stored objective equals its recomputation
    const double recomputed =
        oracle::pair_line_objective(level, u, x, w, fit.beta0, fit.beta1);
    REQUIRE(fit.objective == Catch::Approx(recomputed).epsilon(1e-10).margin(1e-13));
  }
}

TEST_CASE("subgradient optimality at the solution") {
  auto rng = make_engine(99, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20;
    std::vector<double> u(n), x(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = unif(rng) - 0.5;
      x[i] = normal(rng);
      w[i] = 0.1 + unif(rng);
    }
    const QuantileLevel level(0.25 + 0.5 * unif(rng));
    const auto fit = solve_weighted_local_linear(level, u, x, w);
    double scale = 0.0;
    for (double v : x) scale = std::max(scale, std::fabs(v));
    double sum0 = 0.0, sum1 = 0.0, interp_mass = 0.0, interp_mass_u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = x[i] - fit.beta0 - fit.beta1 * u[i];
      if (std::fabs(r) <= 1e-9 * (scale + 1.0)) {
        interp_mass += w[i];
        interp_mass_u += w[i] * std::fabs(u[i]);
      } else {
        sum0 += w[i] * score(level, r);
        sum1 += w[i] * u[i] * score(level, r);
      }
    }
    REQUIRE(std::fabs(sum0) <= interp_mass + 1e-9);
    REQUIRE(std::fabs(sum1) <= interp_mass_u + 1e-9);
  }
}

TEST_CASE("scale and shift equivariance") {
  const QuantileLevel level(0.75);
  std::vector<double> u = {-0.5, -0.25, 0.0, 0.25, 0.5, 0.125};
  std::vector<double> x = {1.5, -0.25, 2.0, 0.75, -1.25, 0.5};  // dyadic values
  std::vector<double> w = {1.0, 1.0, 0.5, 1.0, 1.0, 0.25};
  const auto base = solve_weighted_local_linear(level, u, x, w);

  std::vector<double> scaled(x);
  for (auto& v : scaled) v *= 2.0;
  const auto fit2 = solve_weighted_local_linear(level, u, scaled, w);
  CHECK(fit2.beta0 == 2.0 * base.beta0);
  CHECK(fit2.beta1 == 2.0 * base.beta1);
  CHECK(fit2.objective == 2.0 * base.objective);

  std::vector<double> shifted(x);
  for (auto& v : shifted) v += 512.0;
  const auto fit3 = solve_weighted_local_linear(level, u, shifted, w);
  CHECK(fit3.beta0 == base.beta0 + 512.0);
  CHECK(fit3.beta1 == base.beta1);
}

TEST_CASE("tie-breaking picks smallest |beta1| then smallest beta0") {
  const QuantileLevel half(0.5);
  std::vector<double> u = {0.0, 0.0, 1.0, 1.0};
  std::vector<double> x = {0.0, 2.0, 0.0, 2.0};
  std::vector<double> w = {1.0, 1.0, 1.0, 1.0};
  const auto fit = solve_weighted_local_linear(half, u, x, w);
  CHECK(fit.beta1 == 0.0);
  CHECK(fit.beta0 == 0.0);
  CHECK(fit.objective == Catch::Approx(2.0));
  // deterministic across calls
  const auto again = solve_weighted_local_linear(half, u, x, w);
  CHECK(again.beta0 == fit.beta0);
  CHECK(again.beta1 == fit.beta1);
}

TEST_CASE("degenerate windows") {
  const QuantileLevel half(0.5);
  SECTION("all weights zero") {
    std::vector<double> u = {0.0, 0.1};
    std::vector<double> x = {1.0, 2.0};
    std::vector<double> w = {0.0, 0.0};
    CHECK_THROWS_AS(solve_weighted_local_linear(half, u, x, w), empty_window_error);
  }
  SECTION("single distinct time gives the weighted quantile") {
    std::vector<double> u = {0.3, 0.3, 0.3};
    std::vector<double> x = {5.0, 1.0, 3.0};
    std::vector<double> w = {1.0, 1.0, 1.0};
    const auto fit = solve_weighted_local_linear(half, u, x, w);
    CHECK(fit.beta1 == 0.0);
    CHECK(fit.beta0 == 3.0);
    CHECK(fit.objective == Catch::Approx(2.0));
    CHECK(fit.partner == no_partner);
  }
}

TEST_CASE("parametric solver exact cases") {
  SECTION("line recovered exactly") {
    const std::size_t n = 25;
    std::vector<double> t(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i + 1) / n;
      x[i] = 2.0 + 3.0 * t[i];
    }
    const auto fit = solve_parametric(QuantileLevel(0.5), t, x, polynomial_basis(2), 2);
    CHECK(fit.theta[0] == Catch::Approx(2.0).margin(1e-10));
    CHECK(fit.theta[1] == Catch::Approx(3.0).margin(1e-10));
    CHECK(fit.objective == Catch::Approx(0.0).margin(1e-10));
  }
  SECTION("single point median") {
    std::vector<double> t = {0.5};
    std::vector<double> x = {4.25};
    const auto fit = solve_parametric(QuantileLevel(0.5), t, x, polynomial_basis(1), 1);
    CHECK(fit.theta[0] == 4.25);
    CHECK(fit.objective == 0.0);
  }
  SECTION("quadratic recovered exactly") {
    const std::size_t n = 30;
    std::vector<double> t(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i + 1) / n;
      x[i] = 1.0 - t[i] + 0.5 * t[i] * t[i];
    }
    const auto fit = solve_parametric(QuantileLevel(0.7), t, x, polynomial_basis(3), 3);
    CHECK(fit.theta[0] == Catch::Approx(1.0).margin(1e-9));
    CHECK(fit.theta[1] == Catch::Approx(-1.0).margin(1e-9));
    CHECK(fit.theta[2] == Catch::Approx(0.5).margin(1e-9));
  }
}

TEST_CASE("parametric solver equals subset enumeration on random instances") {
  auto rng = make_engine(4242, 0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t dim = 1 + trial % 3;
    const std::size_t n = dim + 1 + static_cast<std::size_t>(unif(rng) * 10);
    std::vector<double> t(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = unif(rng);
      x[i] = normal(rng);
    }
    const QuantileLevel level(0.1 + 0.8 * unif(rng));
    const auto basis = polynomial_basis(dim);
    const auto fit = solve_parametric(level, t, x, basis, dim);
    const double best = oracle::best_parametric_vertex(level, t, x, basis, dim);
    REQUIRE(fit.objective <= best * (1.0 + 1e-9) + 1e-12);
    REQUIRE(fit.objective >= best * (1.0 - 1e-9) - 1e-9);
  }
}

TEST_CASE("parametric solver error paths") {
  std::vector<double> t = {0.1, 0.4, 0.9};
  std::vector<double> x = {1.0, 2.0, 3.0};
  CHECK_THROWS_AS(solve_parametric(QuantileLevel(0.5), t, x, polynomial_basis(4), 4),
                  std::invalid_argument);
  // constant-pair basis: every 2-subset is rank deficient
  const BasisFunction bad = [](double, std::span<double> out) {
    out[0] = 1.0;
    out[1] = 1.0;
  };
  CHECK_THROWS_AS(solve_parametric(QuantileLevel(0.5), t, x, bad, 2),
                  degenerate_basis_error);
}
