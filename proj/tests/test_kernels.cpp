#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nsquant/kernels.hpp"
#include "nsquant/numerics.hpp"

using namespace nsquant;

TEST_CASE("Epanechnikov kernel values") {
  const Kernel k = epanechnikov();
  CHECK(k.evaluate(0.0) == Catch::Approx(0.75));
  CHECK(k.evaluate(2.0) == 0.0);
  CHECK(k.evaluate(0.5) == Catch::Approx(0.5625));
  CHECK(k.evaluate(0.3) == k.evaluate(-0.3));
  CHECK(integrate([&](double x) { return k.evaluate(x); }, -1.0, 1.0) ==
        Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("kernel derivative matches finite differences") {
  const Kernel k = epanechnikov();
  const double h = 1e-6;
  for (int i = 1; i < 100; ++i) {
    const double x = -0.99 + 1.98 * i / 100.0;
    const double fd = (k.evaluate(x + h) - k.evaluate(x - h)) / (2.0 * h);
    CHECK(k.derivative(x) == Catch::Approx(fd).margin(1e-6));
  }
}

TEST_CASE("second-order kernel") {
  const Kernel k = epanechnikov();
  const Kernel ks = second_order_kernel(k);
  CHECK(ks.evaluate(0.0) == Catch::Approx(2.0 * 0.75 - 0.75 / std::sqrt(2.0)));
  CHECK(ks.evaluate(std::sqrt(2.0) + 0.1) == 0.0);
  CHECK(integrate([&](double x) { return ks.evaluate(x); }, -ks.support, ks.support) ==
        Catch::Approx(1.0).margin(1e-8));
  // the jackknife combination cancels the second moment
  CHECK(integrate([&](double x) { return x * x * ks.evaluate(x); }, -ks.support,
                  ks.support) == Catch::Approx(0.0).margin(1e-8));
}

TEST_CASE("Epanechnikov constants phi, mu2, frakC") {
  const KernelConstants c = constants(epanechnikov());
  CHECK(c.phi == Catch::Approx(0.6).margin(1e-8));
  CHECK(c.mu2 == Catch::Approx(0.2).margin(1e-8));
  CHECK(c.frakC == Catch::Approx(2.5).margin(1e-8));
}

TEST_CASE("convolution functionals of K*") {
  const Kernel ks = second_order_kernel(epanechnikov());
  const KernelConstants c = constants(epanechnikov());
  // K* conv K*(0) equals the squared integral of K*
  const double direct =
      integrate([&](double u) { return ks.evaluate(u) * ks.evaluate(u); }, -ks.support,
                ks.support, 1e-12);
  CHECK(c.kstar_at_zero == Catch::Approx(direct).margin(1e-8));
  CHECK(c.kstar_at_zero == Catch::Approx(0.9150757611).margin(1e-6));
  CHECK(c.kstar_conv_sq_integral > 0.0);
  // the squared convolution integrates below [K* conv K*(0)]^2 times the support length
  CHECK(c.kstar_conv_sq_integral <
        c.kstar_at_zero * c.kstar_at_zero * 4.0 * std::sqrt(2.0));
}
