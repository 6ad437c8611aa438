#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "qmeas/errors.hpp"
#include "qmeas/measure.hpp"
#include "support/oracles.hpp"

using namespace qmeas;
using doctest::Approx;

namespace {
GridMeasure half01() { return GridMeasure({0.0, 1.0}, {0.5, 0.5}); }
GridMeasure pm1() { return GridMeasure({-1.0, 1.0}, {0.5, 0.5}); }
}  // namespace

TEST_CASE("cdf examples") {
  CHECK(cdf(half01(), 0.5) == 0.5);
  CHECK(cdf(half01(), -0.1) == 0.0);
  CHECK(cdf(half01(), 1.0) == 1.0);
}

TEST_CASE("quantile is the left-continuous inverse") {
  CHECK(quantile(half01(), 0.25) == 0.0);
  CHECK(quantile(half01(), 0.5) == 0.0);
  CHECK(quantile(half01(), 0.75) == 1.0);
  for (double t : {0.1, 0.5, 1.0}) CHECK(quantile(GridMeasure::point(2.5), t) == 2.5);
  CHECK_THROWS_AS(quantile(half01(), 0.0), Error);
}

TEST_CASE("moments") {
  CHECK(moment(GridMeasure::point(3.0), 1) == 3.0);
  CHECK(moment(pm1(), 2) == Approx(1.0));
  CHECK(moment(GridMeasure::uniform(0.0, 1.0, 1001), 1) == Approx(0.5).epsilon(1e-9));
}

TEST_CASE("alpha deviation") {
  CHECK(alpha_deviation(pm1(), 2.0) == Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(alpha_deviation(GridMeasure::uniform(0.0, 1.0, 1001), 1.0) - 0.25) < 1e-3);
  CHECK(std::abs(alpha_deviation(pm1(), 1.0) - oracle::alpha_deviation_scan(pm1(), 1.0)) < 1e-9);
  CHECK(std::abs(alpha_deviation(pm1(), 1.0) - 1.0) < 1e-9);
  CHECK_THROWS_AS(alpha_deviation(pm1(), 0.5), Error);
}

TEST_CASE("alpha deviation against a brute-force scan") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 40; ++k) {
    const GridMeasure m = oracle::random_measure(rng, 12);
    for (double a : {1.0, 1.5, 3.0}) CHECK(alpha_deviation(m, a) == Approx(oracle::alpha_deviation_scan(m, a)).epsilon(1e-7));
  }
}

TEST_CASE("standard deviation") {
  CHECK(std_deviation(GridMeasure::point(1.0)) == 0.0);
  CHECK(std_deviation(pm1()) == Approx(1.0));
  const GridMeasure g = GridMeasure::gaussian(0.0, 2.0, 4096, 16.0);
  CHECK(std::abs(std_deviation(g) - 2.0) < 1e-4);
}

TEST_CASE("overall width examples") {
  CHECK(overall_width(GridMeasure::point(4.0), 0.3) == 0.0);
  CHECK(std::abs(overall_width(GridMeasure::uniform(0.0, 1.0, 10001), 0.1) - 0.9) < 2e-4);
  CHECK(overall_width(half01(), 0.4) == 1.0);
  CHECK(overall_width(half01(), 0.5) == 0.0);
  CHECK(oracle::overall_width_pairs(half01(), 0.4) == 1.0);
  CHECK(oracle::overall_width_pairs(half01(), 0.5) == 0.0);
}

TEST_CASE("overall width matches the pair search") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const GridMeasure m = oracle::random_measure(rng, 15);
    for (double eps : {0.0, 0.05, 0.2, 0.5, 0.9})
      CHECK(overall_width(m, eps) == Approx(oracle::overall_width_pairs(m, eps)).epsilon(1e-12));
  }
}

TEST_CASE("measure invariants on random measures") {
  std::mt19937_64 rng(17);
  for (int k = 0; k < 100; ++k) {
    const GridMeasure m = oracle::random_measure(rng, 20);
    CHECK(overall_width(m, 0.0) == Approx(m.max_atom() - m.min_atom()));
    double prev = overall_width(m, 0.0);
    for (double eps : {0.05, 0.1, 0.3, 0.6, 0.95}) {
      const double w = overall_width(m, eps);
      CHECK(w <= prev + 1e-15);
      prev = w;
    }
    CHECK(std::abs(alpha_deviation(m, 2.0) - std_deviation(m)) < 1e-9);
    const double shift = 1.75;
    const GridMeasure t = translate(m, shift);
    for (double eps : {0.0, 0.1, 0.4}) CHECK(overall_width(t, eps) == Approx(overall_width(m, eps)).epsilon(1e-12));
    CHECK(alpha_deviation(t, 1.0) == Approx(alpha_deviation(m, 1.0)).epsilon(1e-9));
    // Chebyshev
    for (double eps : {0.05, 0.2, 0.5}) CHECK(overall_width(m, eps) <= 2.0 * std_deviation(m) / std::sqrt(eps) + 1e-12);
  }
}

TEST_CASE("convolution") {
  const GridMeasure m = GridMeasure({-1.0, 0.5, 2.0}, {0.2, 0.3, 0.5});
  const GridMeasure c = convolve(GridMeasure::point(1.25), m);
  const GridMeasure t = translate(m, 1.25);
  CHECK(total_variation(c, t) < 1e-12);

  const GridMeasure b = convolve(half01(), half01());
  REQUIRE(b.size() == 3);
  CHECK(b.weights()[0] == Approx(0.25));
  CHECK(b.weights()[1] == Approx(0.5));
  CHECK(b.weights()[2] == Approx(0.25));

  const GridMeasure g = GridMeasure::gaussian(0.0, 1.0, 801, 8.0);
  const GridMeasure gg = convolve(g, g);
  CHECK(std::abs(std_deviation(gg) * std_deviation(gg) - 2.0) < 1e-3);
  CHECK(mean(convolve(m, g)) == Approx(mean(m) + mean(g)).epsilon(1e-12));
}

TEST_CASE("convolution commutes up to binning") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 30; ++k) {
    const GridMeasure a = oracle::random_measure(rng, 10);
    const GridMeasure b = oracle::random_measure(rng, 10);
    const GridMeasure ab = convolve(a, b), ba = convolve(b, a);
    const double h = std::max(ab.spacing(), ba.spacing());
    // compare CDFs shifted by one bin
    for (double x = -7.0; x <= 7.0; x += 0.37) {
      CHECK(cdf(ab, x) <= cdf(ba, x + h) + 1e-12);
      CHECK(cdf(ba, x) <= cdf(ab, x + h) + 1e-12);
    }
    CHECK(mean(ab) == Approx(mean(ba)).epsilon(1e-9));
  }
}

TEST_CASE("translate and pushforward") {
  const GridMeasure t = translate(GridMeasure::point(0.0), 3.0);
  CHECK(t.is_point());
  CHECK(t.atoms()[0] == 3.0);
  const GridMeasure m = GridMeasure({-1.0, 0.5, 2.0}, {0.2, 0.3, 0.5});
  CHECK(total_variation(pushforward(m, RealMap::identity()), m) == 0.0);
  const double pi = std::numbers::pi;
  const GridMeasure p = pushforward(GridMeasure({0.0, pi}, {0.5, 0.5}),
                                    RealMap::identity_plus([](double x) { return 0.5 * std::cos(x); }, 0.5));
  REQUIRE(p.size() == 2);
  CHECK(p.atoms()[0] == Approx(0.5));
  CHECK(p.atoms()[1] == Approx(pi - 0.5));
  CHECK_THROWS_AS(RealMap::table({0.0, 1.0, 0.5}, {0.0, 1.0, 2.0}), Error);
}

TEST_CASE("invalid measures are rejected") {
  CHECK_THROWS_AS(GridMeasure({1.0, 0.0}, {0.5, 0.5}), Error);
  CHECK_THROWS_AS(GridMeasure({0.0, 1.0}, {0.7, 0.7}), Error);
  CHECK_THROWS_AS(GridMeasure({0.0, 1.0}, {-0.1, 1.1}), Error);
  CHECK_THROWS_AS(GridMeasure::normalized({0.0}, {0.0}), Error);
}

TEST_CASE("measure csv round trip") {
  const auto path = std::filesystem::temp_directory_path() / "qmeas_measure_roundtrip.csv";
  const GridMeasure m = GridMeasure({-1.0, 0.5, 2.0}, {0.2, 0.3, 0.5});
  save_measure_csv(m, path.string());
  bool renorm = true;
  const GridMeasure back = load_measure_csv(path.string(), &renorm);
  CHECK_FALSE(renorm);
  CHECK(total_variation(m, back) < 1e-15);

  std::ofstream(path) << "x,w\n0,1\n1,1\n";
  const GridMeasure r = load_measure_csv(path.string(), &renorm);
  CHECK(renorm);
  CHECK(r.weights()[0] == Approx(0.5));
  std::ofstream(path) << "a,b\n0,1\n";
  CHECK_THROWS_AS(load_measure_csv(path.string()), Error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_measure_csv(path.string()), Error);
}
