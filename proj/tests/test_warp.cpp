#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "moveconv/rng.hpp"
#include "moveconv/warp.hpp"
#include "oracles.hpp"

using namespace moveconv;

namespace {
WarpSpec make(double center, double scale, double magnitude) {
  WarpSpec s;
  s.center = center;
  s.scale = scale;
  s.magnitude = magnitude;
  return s;
}
}  // namespace

TEST_CASE("truncated gaussian density normalizes and matches quadrature") {
  WarpSpec flat = make(0.5, 1e6, 0.7);
  for (double t : {0.01, 0.3, 0.5, 0.99})
    CHECK(flat.density_at(t) == doctest::Approx(1.0).epsilon(1e-3));

  WarpSpec bump = make(0.5, 0.04, 0.7);
  const double mass =
      oracles::integrate([&](double t) { return bump.density_at(t); }, 0.0, 1.0, 1e-13);
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));

  // density value against a quadrature-normalized Gaussian
  const double z = oracles::integrate(
      [](double t) { return std::exp(-(t - 0.5) * (t - 0.5) / 0.04); }, 0.0, 1.0, 1e-13);
  CHECK(bump.density_at(0.5) == doctest::Approx(1.0 / z).epsilon(1e-9));

  CHECK_THROWS_AS(bump.density_at(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(bump.density_at(1.1), std::invalid_argument);
}

TEST_CASE("warp is the identity for zero magnitude and for the uniform density") {
  WarpSpec zero = make(0.4, 0.02, 0.0);
  WarpSpec uni = WarpSpec::identity();
  uni.magnitude = 3.7;  // any magnitude with a uniform density
  for (double t = 0.0; t <= 1.0; t += 0.01) {
    CHECK(std::abs(zero.warp(t) - t) < 1e-12);
    CHECK(std::abs(uni.warp(t) - t) < 1e-12);
  }
  CHECK(zero.warp_derivative(0.3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("warp value against a quadrature cumulative oracle") {
  WarpSpec s = make(0.5, 0.04, 0.7);
  for (double t : {0.2, 0.5, 0.85}) {
    const double F =
        oracles::integrate([&](double u) { return s.density_at(u); }, 0.0, t, 1e-13);
    const double want = (0.7 * F + t) / (0.7 + 1.0);
    CHECK(s.warp(t) == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("warp derivative matches finite differences") {
  Rng rng(11);
  WarpSpec s = make(0.45, 0.03, 0.65);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const double t = 0.01 + 0.98 * rng.uniform();
    const double fd = oracles::central_diff([&](double u) { return s.warp(u); }, t, h);
    CHECK(s.warp_derivative(t) == doctest::Approx(fd).epsilon(1e-5));
  }
  // total derivative mass: w(1) - w(0) = 1
  const double total =
      oracles::integrate([&](double t) { return s.warp_derivative(t); }, 0.0, 1.0, 1e-12);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("non-folding and endpoint preservation over random specs") {
  Rng rng(12);
  for (int rep = 0; rep < 2000; ++rep) {
    WarpSpec s = make(0.02 + 0.96 * rng.uniform(), 0.005 + 0.1 * rng.uniform(),
                      2.0 * rng.uniform());
    CHECK(s.warp(0.0) == 0.0);
    CHECK(s.warp(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    const double floor = 1.0 / (s.magnitude + 1.0);
    double prev = s.warp(0.0);
    for (int i = 1; i <= 50; ++i) {
      const double t = i / 50.0;
      const double w = s.warp(t);
      CHECK(w >= prev - 1e-14);
      CHECK(s.warp_derivative(t) >= floor - 1e-12);
      prev = w;
    }
  }
}

TEST_CASE("expansion happens exactly where the density exceeds one") {
  WarpSpec s = make(0.5, 0.02, 0.7);
  for (double t = 0.01; t < 1.0; t += 0.01) {
    const double f = s.density_at(t);
    const double dw = s.warp_derivative(t);
    if (f > 1.0 + 1e-9) CHECK(dw > 1.0);
    if (f < 1.0 - 1e-9) CHECK(dw < 1.0);
  }
}

TEST_CASE("candidate enumeration") {
  const auto scales = default_warp_scales();
  const auto mags = default_warp_magnitudes();
  CHECK(scales.size() == 10);
  CHECK(mags.size() == 10);
  CHECK(scales.front() == doctest::Approx(0.01));
  CHECK(scales.back() == doctest::Approx(0.0625));
  CHECK(mags.front() == doctest::Approx(0.6));
  CHECK(mags.back() == doctest::Approx(0.8));

  const auto full = enumerate_warp_candidates(100, scales, mags);
  CHECK(full.size() == 10000);

  const auto one = enumerate_warp_candidates(1, {0.02}, {0.7});
  CHECK(one.size() == 1);
  CHECK(one[0].center == doctest::Approx(0.5));

  // centers strictly inside the domain with uniform spacing
  const auto line = enumerate_warp_candidates(9, {0.02}, {0.7});
  for (std::size_t i = 0; i < line.size(); ++i) {
    CHECK(line[i].center > 0.0);
    CHECK(line[i].center < 1.0);
    CHECK(line[i].center == doctest::Approx((i + 1) / 10.0));
  }

  CHECK_THROWS_AS(enumerate_warp_candidates(10, {}, {0.7}), std::invalid_argument);
  CHECK_THROWS_AS(enumerate_warp_candidates(10, {0.02}, {}), std::invalid_argument);
}
