#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsquant/numerics.hpp"
#include "nsquant/rng.hpp"

using namespace nsquant;

TEST_CASE("adaptive Simpson integrates polynomials and kinks") {
  CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0) ==
        Catch::Approx(1.0 / 3.0).margin(1e-12));
  CHECK(integrate([](double x) { return std::fabs(x); }, -1.0, 1.0) ==
        Catch::Approx(1.0).margin(1e-9));
  CHECK(integrate([](double x) { return std::exp(-x * x); }, -8.0, 8.0) ==
        Catch::Approx(std::sqrt(pi_const)).margin(1e-9));
}

TEST_CASE("trapezoid rule on a uniform grid") {
  std::vector<double> y = {0.0, 1.0, 2.0, 3.0};
  CHECK(trapezoid(y, 0.5) == Catch::Approx(2.25));  // int of linear ramp
  std::vector<double> c(11, 2.0);
  CHECK(trapezoid(c, 0.1) == Catch::Approx(2.0));
}

TEST_CASE("normal quantile inverts the cdf") {
  for (double p : {1e-8, 1e-4, 0.025, 0.5, 0.9, 0.975, 1.0 - 1e-6}) {
    CHECK(normal_cdf(normal_quantile(p)) == Catch::Approx(p).epsilon(1e-12).margin(1e-14));
  }
  CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-15));
  CHECK(normal_quantile(0.975) == Catch::Approx(1.959963984540054).margin(1e-9));
  CHECK(normal_quantile(0.9) == Catch::Approx(1.2815515655446004).margin(1e-9));
}

TEST_CASE("linear solver handles pivoting") {
  std::vector<double> A = {0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0};
  std::vector<double> b = {5.0, 3.0, 7.0};  // solution x = (2, 2, 1)
  solve_linear_system(A, b, 3);
  CHECK(b[0] == Catch::Approx(2.0).margin(1e-12));
  CHECK(b[1] == Catch::Approx(2.0).margin(1e-12));
  CHECK(b[2] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("weighted quantile picks the smallest value reaching the mass") {
  std::vector<double> v = {3.0, 1.0, 2.0};
  std::vector<double> w = {1.0, 1.0, 1.0};
  CHECK(weighted_quantile(v, w, 0.5) == 2.0);
  CHECK(weighted_quantile(v, w, 0.34) == 2.0);
  CHECK(weighted_quantile(v, w, 1.0 / 3.0) == 1.0);
  std::vector<double> w2 = {5.0, 1.0, 1.0};
  CHECK(weighted_quantile(v, w2, 0.5) == 3.0);
}

TEST_CASE("derived rng streams are deterministic and distinct") {
  auto a1 = make_engine(7, 3);
  auto a2 = make_engine(7, 3);
  auto b = make_engine(7, 4);
  CHECK(a1() == a2());
  CHECK(a1() != b());
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}
