#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qmeas/errors.hpp"
#include "qmeas/observables.hpp"
#include "qmeas/transport.hpp"

using namespace qmeas;
using doctest::Approx;

namespace {

Grid self_dual(std::size_t n, double hbar = 1.0) {
  return Grid::centered(std::sqrt(2.0 * std::numbers::pi * hbar / n), n, hbar);
}

std::vector<MixedState> taus(const Grid& g) {
  std::vector<MixedState> out;
  for (double s : {0.5, 1.0, 2.0}) out.emplace_back(make_gaussian(g, 0.0, 0.0, s));
  out.emplace_back(make_gaussian(g, 1.0, 0.5, 0.8));
  out.emplace_back(make_box(g, 0.0, 2.0));
  out.emplace_back(make_hermite(g, 2));
  out.emplace_back(MixedState({{0.3, make_gaussian(g, -1.0, 0.0, 0.7)}, {0.7, make_hermite(g, 1)}}));
  return out;
}

}  // namespace

TEST_CASE("trivial observables ignore the state") {
  const Grid g = self_dual(256);
  const GridMeasure mu({-1.0, 2.0}, {0.25, 0.75});
  const Observable t = Observable::trivial(mu);
  const GridMeasure a = distribution(t, make_gaussian(g, 0.0, 0.0, 1.0));
  const GridMeasure b = distribution(t, make_box(g, 3.0, 1.0));
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.atoms()[i] == b.atoms()[i]);
    CHECK(a.weights()[i] == b.weights()[i]);
  }
  CHECK(total_variation(a, mu) == 0.0);
}

TEST_CASE("smeared observables") {
  const Grid g = Grid::centered(1.0 / 32.0, 1024);
  const MixedState s(make_gaussian(g, 0.5, 0.0, 1.0));
  const GridMeasure shifted = distribution(Observable::smeared_q(GridMeasure::point(1.25)), s);
  CHECK(total_variation(shifted, translate(position_distribution(s), 1.25)) < 1e-12);

  const double ss = 0.8, sm = 0.6;
  const MixedState gs(make_gaussian(g, 0.0, 0.0, ss));
  const GridMeasure out = distribution(Observable::smeared_q(GridMeasure::gaussian(0.0, sm, 513, 8.0 * sm)), gs);
  CHECK(std::abs(std::pow(std_deviation(out), 2) - (ss * ss + sm * sm)) < 1e-3);
}

TEST_CASE("smeared observables are covariant") {
  const Grid g = Grid::centered(1.0 / 32.0, 1024);
  const Observable o = Observable::smeared_q(GridMeasure({-0.3, 0.0, 0.7}, {0.2, 0.5, 0.3}));
  for (const auto& s : taus(g)) {
    for (int m : {-20, 13}) {
      const double q = m * g.dx;
      const GridMeasure lhs = distribution(o, weyl_translate(s, PhasePoint{q, 0.0}));
      const GridMeasure rhs = translate(distribution(o, s), q);
      CHECK(wasserstein(lhs, rhs, 1.0) <= g.dx);
    }
  }
}

TEST_CASE("a relabelled smeared observable is not covariant") {
  const Grid g = Grid::centered(1.0 / 32.0, 1024);
  const Observable o = Observable::pushforward(
      Observable::smeared_q(GridMeasure::point(0.0)),
      RealMap::identity_plus([](double x) { return 0.5 * std::cos(x); }, 0.5));
  double worst = 0.0;
  for (const auto& s : taus(g))
    for (int m : {16, 32, 50}) {
      const double q = m * g.dx;
      worst = std::max(worst, total_variation(distribution(o, weyl_translate(s, PhasePoint{q, 0.0})),
                                              translate(distribution(o, s), q)));
    }
  CHECK(worst > 0.01);
}

TEST_CASE("covariant marginals") {
  const Grid g = self_dual(1024);
  for (double s : {0.5, 1.0, 2.0}) {
    const auto [mu, nu] = covariant_marginals(MixedState(make_gaussian(g, 0.0, 0.0, s)));
    CHECK(std::abs(std_deviation(mu) - s) < 1e-4);
    CHECK(std::abs(std_deviation(nu) - 0.5 / s) < 1e-4);
  }
  const auto [mu2, nu2] = covariant_marginals(MixedState(make_gaussian(g, 2.0, 0.0, 1.0)));
  CHECK(std::abs(mean(mu2) + 2.0) <= g.dx);
  for (const auto& t : taus(g)) {
    const auto [mu, nu] = covariant_marginals(t);
    CHECK(std_deviation(mu) * std_deviation(nu) >= 0.5 - 1e-6);
  }
  CHECK_THROWS_AS(covariant_marginals(MixedState(make_gaussian(Grid{0.3, 0.1, 256, 1.0}, 12.0, 0.0, 1.0))), Error);
}

TEST_CASE("covariant marginal observable uses the state law") {
  const Grid g = self_dual(512);
  const MixedState tau(make_gaussian(g, 0.0, 0.0, 0.7));
  const MixedState s(make_box(g, 1.0, 3.0, 0.5));
  const Observable m = Observable::covariant_marginal(tau, Axis::Momentum);
  CHECK(m.axis() == Axis::Momentum);
  const GridMeasure out = distribution(m, s);
  CHECK(mean(out) == Approx(mean(momentum_distribution(s)) + mean(m.noise())).epsilon(1e-9));
  std::vector<MixedState::Component> many;
  for (int k = 0; k < 17; ++k) many.push_back({1.0 / 17.0, make_gaussian(g, 0.0, 0.0, 0.5 + 0.05 * k)});
  CHECK_THROWS_AS(Observable::covariant_marginal(MixedState(many), Axis::Position), Error);
}

TEST_CASE("joint covariant table of two vacua") {
  const Grid g = self_dual(256);
  const double sigma = std::sqrt(0.5);
  const MixedState vac(make_gaussian(g, 0.0, 0.0, sigma));
  const JointTable t = joint_covariant_distribution(vac, vac);
  CHECK(std::abs(t.total_mass() - 1.0) < 1e-6);
  CHECK(t.q_marginal_tv < 1e-3);
  CHECK(t.p_marginal_tv < 1e-3);
  double vq = 0.0, vp = 0.0, cqp = 0.0;
  for (std::size_t i = 0; i < t.q_atoms.size(); ++i)
    for (std::size_t j = 0; j < t.p_atoms.size(); ++j) {
      vq += t.at(i, j) * t.q_atoms[i] * t.q_atoms[i];
      vp += t.at(i, j) * t.p_atoms[j] * t.p_atoms[j];
      cqp += t.at(i, j) * t.q_atoms[i] * t.p_atoms[j];
    }
  CHECK(std::abs(vq - 2.0 * sigma * sigma) < 1e-6);
  CHECK(std::abs(vp - 2.0 * 0.25 / (sigma * sigma)) < 1e-6);
  CHECK(std::abs(cqp) < 1e-9);
}

TEST_CASE("joint table marginals for general pairs") {
  const Grid g = self_dual(256);
  // smooth taus only: a box tau has sinc^2 momentum tails that alias
  const auto ts = taus(g);
  for (std::size_t k : {0u, 1u, 2u, 3u, 5u, 6u}) {
    const MixedState s(make_random_localized(g, Interval(0.5, 4.0), k + 1));
    const JointTable t = joint_covariant_distribution(ts[k], s);
    CHECK(std::abs(t.total_mass() - 1.0) < 1e-6);
    CHECK(t.q_marginal_tv < 1e-3);
    CHECK(t.p_marginal_tv < 1e-3);
  }
  const MixedState vac(make_gaussian(g, 0.0, 0.0, 1.0));
  const JointTable coarse = joint_covariant_distribution(vac, vac, LatticeSpec{2, 2});
  CHECK(coarse.q_atoms.size() == 128);
  CHECK(std::abs(coarse.total_mass() - 1.0) < 1e-3);
  try {
    joint_covariant_distribution(vac, vac, LatticeSpec{64, 64});
    FAIL("expected AccuracyError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Accuracy);
  }
}

TEST_CASE("moment operators") {
  const Grid g = Grid::centered(1.0 / 32.0, 1024);
  const MixedState s(make_gaussian(g, 1.0, 0.0, 1.0));
  const MomentStats a = moment_stats(Observable::sharp_q(), s);
  CHECK(std::abs(a.first - 1.0) < 1e-3);
  CHECK(std::abs(a.second - 2.0) < 1e-3);
  const MomentStats p = moment_stats(Observable::smeared_q(GridMeasure::point(0.7)), s);
  CHECK(std::abs(p.second - p.first_sq) < 1e-12);
  const double sd = 0.4;
  const Observable c = Observable::smeared_q(GridMeasure::gaussian(0.0, sd, 2001, 10.0 * sd));
  const MixedState s2(make_box(g, -2.0, 3.0, 1.0));
  for (const auto& st : {s, s2}) {
    const MomentStats m = moment_stats(c, st);
    CHECK(std::abs(m.second - m.first_sq - sd * sd) < 1e-6);
  }
  CHECK_THROWS_AS(moment_stats(Observable::trivial(GridMeasure::point(0.0)), s), Error);
}
