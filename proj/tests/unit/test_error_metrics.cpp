#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qmeas/error_metrics.hpp"
#include "qmeas/errors.hpp"

using namespace qmeas;
using doctest::Approx;

namespace {

// dx = 1/64 on [-8, 8): every noise atom below sits on the lattice
Grid fine() { return Grid::centered(1.0 / 64.0, 1024); }

ProbeConfig cfg_at(std::vector<double> centers, double eps = 0.1, double delta = 0.0) {
  ProbeConfig c;
  c.x_samples = std::move(centers);
  c.eps = eps;
  c.delta = delta;
  return c;
}

GridMeasure gauss01() { return GridMeasure::gaussian(0.0, 1.0, 513, 4.0); }
GridMeasure two_point() { return GridMeasure({-0.5, 1.5}, {0.3, 0.7}); }

}  // namespace

TEST_CASE("probes are localised") {
  const Grid g = fine();
  ProbeConfig c;
  for (Axis ax : {Axis::Position, Axis::Momentum}) {
    const double step = ax == Axis::Position ? g.dx : g.dp();
    for (double delta : {2.0 * step, 8.0 * step}) {
      const auto probes = make_probes(g, ax, 0.0, delta, c);
      CHECK(probes.size() >= 3);
      for (const auto& p : probes) CHECK(probe_leak(p.state, ax, 0.0, delta) <= 1e-20);
    }
  }
}

TEST_CASE("distance examples") {
  const Grid g = fine();
  const std::vector<MixedState> ens{MixedState(make_point(g, 0.0)), MixedState(make_gaussian(g, 1.0, 0.0, 0.5))};
  CHECK(observable_distance(Observable::sharp_q(), Observable::sharp_q(), 1.0, ens).value == 0.0);
  const WidthEstimate d = observable_distance(Observable::smeared_q(GridMeasure::point(2.0)), Observable::sharp_q(), 1.0, ens);
  CHECK(std::abs(d.value - 2.0) <= g.dx);
  CHECK(d.is_lower_bound);
  CHECK_FALSE(d.infinite_flag);
  CHECK(delta1_smeared_closed_form(GridMeasure::point(-2.0)) == 2.0);
  const WidthEstimate t = observable_distance(Observable::trivial(GridMeasure::point(0.0)), Observable::sharp_q(), 1.0, ens);
  CHECK(t.infinite_flag);
}

TEST_CASE("point probes reach the closed-form distance") {
  const Grid g = fine();
  const std::vector<MixedState> ens{MixedState(make_point(g, 0.0))};
  for (const GridMeasure& mu : {GridMeasure::point(2.0), gauss01(), two_point()}) {
    const double exact = delta1_smeared_closed_form(mu);
    const WidthEstimate est = observable_distance(Observable::smeared_q(mu), Observable::sharp_q(), 1.0, ens);
    CHECK(est.value >= exact - 2.0 * g.dx);
    CHECK(est.value <= exact + 1e-9);
    for (double alpha : {2.0, 3.0}) {
      const WidthEstimate e2 = observable_distance(Observable::smeared_q(mu), Observable::sharp_q(), alpha, ens);
      CHECK(std::abs(e2.value - delta_alpha_smeared_closed_form(mu, alpha)) <= 2.0 * g.dx);
    }
  }
}

TEST_CASE("closed forms") {
  CHECK(delta1_smeared_closed_form(GridMeasure({-1.0, 1.0}, {0.5, 0.5})) == Approx(1.0));
  const double s = 0.7;
  CHECK(std::abs(delta1_smeared_closed_form(GridMeasure::gaussian(0.0, s, 4001, 10.0 * s)) - s * std::sqrt(2.0 / std::numbers::pi)) < 1e-4);
  CHECK(pushforward_delta1_closed_form(0.25) == 0.25);
  CHECK(delta_alpha_smeared_closed_form(GridMeasure({-1.0, 1.0}, {0.5, 0.5}), 2.0) == Approx(1.0));
}

TEST_CASE("pushforward distance is finite") {
  const Grid g = fine();
  const std::vector<MixedState> ens{MixedState(make_point(g, 0.0)), MixedState(make_point(g, std::numbers::pi))};
  const Observable e = Observable::pushforward(Observable::sharp_q(),
                                               RealMap::identity_plus([](double x) { return 0.5 * std::cos(x); }, 0.5));
  const WidthEstimate d = observable_distance(e, Observable::sharp_q(), 1.0, ens);
  CHECK_FALSE(d.infinite_flag);
  CHECK(d.value <= pushforward_delta1_closed_form(0.5) + 1e-12);
  CHECK(d.value >= 0.5 - 1e-3);
}

TEST_CASE("error bars of sharp and shifted observables") {
  const Grid g = fine();
  const ProbeConfig c = cfg_at({-2.0, 0.0, 2.0}, 0.1, 2.0 * g.dx);
  CHECK(error_bar_width(Observable::sharp_q(), Observable::sharp_q(), g, c).value <= c.delta + 1e-12);
  CHECK(bias_free_error(Observable::sharp_q(), Observable::sharp_q(), g, c).value <= c.delta + 1e-12);
  for (double a : {-1.5, 0.75, 2.0}) {
    const Observable e1 = Observable::smeared_q(GridMeasure::point(a));
    CHECK(std::abs(error_bar_width(e1, Observable::sharp_q(), g, c).value - 2.0 * std::abs(a)) <= 2.0 * g.dx);
    CHECK(std::abs(bias_free_error(e1, Observable::sharp_q(), g, c).value) <= 2.0 * g.dx);
    CHECK(std::abs(bias(e1, Observable::sharp_q(), g, c) - 2.0 * std::abs(a)) <= 4.0 * g.dx);
  }
}

TEST_CASE("momentum error bars") {
  const Grid g = Grid::centered(std::sqrt(2.0 * std::numbers::pi / 1024.0), 1024);
  const double a = 16.0 * g.dp();
  const ProbeConfig c = cfg_at({-1.0, 0.0, 1.0}, 0.1, 2.0 * g.dp());
  const WidthEstimate w = error_bar_width(Observable::smeared_p(GridMeasure::point(a)), Observable::sharp_p(), g, c);
  CHECK(std::abs(w.value - 2.0 * a) <= 2.0 * g.dp());
  CHECK(error_bar_width(Observable::sharp_p(), Observable::sharp_p(), g, c).value <= c.delta + 1e-12);
}

TEST_CASE("bounded relabelling has infinite error bars") {
  const Grid g = fine();
  const Observable e1 = Observable::pushforward(Observable::sharp_q(),
                                                RealMap::bounded([](double x) { return std::tanh(x); }, 1.0));
  CHECK(error_bar_width(e1, Observable::sharp_q(), g, ProbeConfig{}).infinite_flag);
}

TEST_CASE("bias-free error of smeared observables") {
  const Grid g = fine();
  for (const GridMeasure& mu : {gauss01(), two_point(), GridMeasure::uniform(-0.5, 0.5, 65)}) {
    for (double eps : {0.05, 0.1, 0.3}) {
      double prev = 0.0;
      for (double k : {8.0, 4.0, 2.0}) {
        const ProbeConfig c = cfg_at({-1.0, 0.0, 1.0}, eps, k * g.dx);
        const double bf = bias_free_error(Observable::smeared_q(mu), Observable::sharp_q(), g, c).value;
        if (k == 2.0) CHECK(std::abs(bf - overall_width(mu, eps)) <= 2.0 * g.dx);
        if (k < 8.0) CHECK(bf <= prev + 1e-12);
        prev = bf;
      }
    }
  }
}

TEST_CASE("resolution width") {
  const Grid g = fine();
  CHECK(resolution_width_estimate(Observable::sharp_q(), 0.1, g, cfg_at({0.0})).value == 0.0);
  const Observable u = Observable::smeared_q(GridMeasure::uniform(-0.5, 0.5, 65));
  const WidthEstimate closed = resolution_width(u, 0.1, g);
  CHECK(closed.is_closed_form);
  CHECK(std::abs(closed.value - 0.9) <= 2.0 * g.dx);
  const WidthEstimate est = resolution_width_estimate(u, 0.1, g, cfg_at({0.0, 1.0}));
  CHECK(std::abs(est.value - 0.9) <= 2.0 * g.dx);
  for (const GridMeasure& mu : {gauss01(), two_point()}) {
    const Observable e = Observable::smeared_q(mu);
    const ProbeConfig c = cfg_at({-1.0, 0.0, 1.0}, 0.1, 2.0 * g.dx);
    CHECK(resolution_width(e, 0.1, g).value <= error_bar_width(e, Observable::sharp_q(), g, c).value + 2.0 * g.dx);
  }
}

TEST_CASE("ordering chain and monotonicity") {
  const Grid g = fine();
  for (const GridMeasure& mu : {gauss01(), two_point(), GridMeasure({0.25, 1.0}, {0.5, 0.5})}) {
    const Observable e = Observable::smeared_q(mu);
    const ProbeConfig c = cfg_at({-1.0, 0.0, 1.5}, 0.1, 2.0 * g.dx);
    const double res = resolution_width(e, 0.1, g).value;
    const double bf = bias_free_error(e, Observable::sharp_q(), g, c).value;
    const double gross = error_bar_width(e, Observable::sharp_q(), g, c).value;
    CHECK(std::abs(res - bf) <= 2.0 * g.dx);
    CHECK(bf <= gross + 1e-12);
    CHECK(bias(e, Observable::sharp_q(), g, c) >= -2.0 * g.dx);

    double prev = 1e300;
    for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4}) {
      const double w = error_bar_width(e, Observable::sharp_q(), g, cfg_at({-1.0, 0.0, 1.5}, eps, 2.0 * g.dx)).value;
      CHECK(w <= prev + 1e-12);
      prev = w;
    }
    prev = 0.0;
    for (double k : {2.0, 4.0, 8.0}) {
      const double w = error_bar_width(e, Observable::sharp_q(), g, cfg_at({-1.0, 0.0, 1.5}, 0.1, k * g.dx)).value;
      CHECK(w >= prev - 1e-12);
      prev = w;
    }
  }
}

TEST_CASE("translation invariance of the estimates") {
  const Grid g = fine();
  const GridMeasure mu = two_point();
  const double shift = 0.75;
  const ProbeConfig c0 = cfg_at({-1.0, 0.5}, 0.1, 4.0 * g.dx);
  const ProbeConfig c1 = cfg_at({-1.0 + shift, 0.5 + shift}, 0.1, 4.0 * g.dx);
  for (auto fn : {error_bar_width, bias_free_error}) {
    const double a = fn(Observable::smeared_q(mu), Observable::sharp_q(), g, c0).value;
    const double b = fn(Observable::smeared_q(translate(mu, 0.0)), Observable::sharp_q(), g, c1).value;
    CHECK(std::abs(a - b) <= g.dx);
  }
}

TEST_CASE("noise-based error") {
  const Grid g = fine();
  const MixedState s(make_gaussian(g, 0.5, 0.0, 1.0));
  CHECK(noise_based_error(Observable::sharp_q(), Observable::sharp_q(), s) == Approx(0.0).epsilon(1e-12));
  CHECK(noise_based_error(Observable::sharp_q(), Observable::smeared_q(GridMeasure::point(-1.25)), s) == Approx(1.25));
  const double m = 0.3, sd = 0.4;
  const Observable c = Observable::smeared_q(GridMeasure::gaussian(m, sd, 2001, 10.0 * sd));
  std::vector<MixedState> states{s,
                                 MixedState(make_box(g, -2.0, 1.0, 0.3)),
                                 MixedState(make_hermite(g, 3)),
                                 MixedState(make_random_localized(g, Interval(1.0, 2.0), 5)),
                                 MixedState(make_gaussian(g, -1.0, 2.0, 0.3))};
  for (const auto& st : states)
    CHECK(std::abs(noise_based_error(Observable::sharp_q(), c, st) - std::sqrt(m * m + sd * sd)) < 1e-6);
  const WidthEstimate gl = global_noise_error(Observable::sharp_q(), c, states);
  CHECK(std::abs(gl.value - std::sqrt(m * m + sd * sd)) < 1e-6);
}

TEST_CASE("connection inequalities for smeared instances") {
  const Grid g = fine();
  const MixedState s(make_gaussian(g, 0.0, 0.0, 1.0));
  for (const GridMeasure& mu : {gauss01(), two_point(), GridMeasure::point(1.0)}) {
    const Observable e = Observable::smeared_q(mu);
    for (double eps : {0.05, 0.1, 0.25}) {
      const double gross = error_bar_width(e, Observable::sharp_q(), g, cfg_at({0.0, 1.0}, eps, 2.0 * g.dx)).value;
      for (double alpha : {1.0, 2.0})
        CHECK(gross <= 2.0 * delta_alpha_smeared_closed_form(mu, alpha) / std::pow(eps, 1.0 / alpha) + 4.0 * g.dx);
      const double no = noise_based_error(Observable::sharp_q(), e, s);
      CHECK(gross <= 2.0 * no * (1.0 + std::sqrt(2.0 / eps)) + 4.0 * g.dx);
    }
  }
}

TEST_CASE("traces") {
  const Grid g = fine();
  ProbeConfig c = cfg_at({0.0}, 0.1, 2.0 * g.dx);
  c.record_trace = true;
  const WidthEstimate w = error_bar_width(Observable::smeared_q(two_point()), Observable::sharp_q(), g, c);
  CHECK_FALSE(w.trace.empty());
  CHECK_FALSE(w.witness_probe.empty());
  const std::string j = trace_to_json(w, "error_bar");
  CHECK(j.find("\"bound\": \"lower\"") != std::string::npos);
}
