#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "qmeas/errors.hpp"
#include "qmeas/quantum_state.hpp"
#include "support/oracles.hpp"

using namespace qmeas;
using doctest::Approx;

namespace {

const double kPi = std::numbers::pi;

Grid grid_pm16() { return Grid::centered(1.0 / 64.0, 2048); }
Grid self_dual(std::size_t n, double hbar = 1.0) { return Grid::centered(std::sqrt(2.0 * kPi * hbar / n), n, hbar); }

std::vector<MixedState> ensemble(const Grid& g) {
  std::vector<MixedState> out;
  for (double s : {0.4, 0.7, 1.0, 1.8}) out.emplace_back(make_gaussian(g, 0.3, -0.2, s));
  for (double w : {1.0, 2.5, 5.0}) out.emplace_back(make_box(g, -0.5, w, 0.4));
  for (int n : {0, 1, 3, 6}) out.emplace_back(make_hermite(g, n));
  for (std::uint64_t seed : {1u, 2u, 3u}) out.emplace_back(make_random_localized(g, Interval(0.0, 6.0), seed));
  out.emplace_back(MixedState({{0.5, make_gaussian(g, -2.0, 0.0, 0.6)}, {0.5, make_gaussian(g, 2.0, 0.5, 0.8)}}));
  return out;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(Grid::centered(0.1, 1000), Error);
  CHECK_THROWS_AS(Grid::centered(-0.1, 1024), Error);
  CHECK_THROWS_AS(Grid::centered(0.1, 1024, 0.0), Error);
  const Grid g = Grid::centered(0.5, 16);
  CHECK(g.symmetric());
  CHECK(g.x(g.mirror(3)) == -g.x(3));
  CHECK(g.mirror(0) == 0);
  CHECK(g.dp() == Approx(2.0 * kPi / 8.0));
  CHECK(g.p(8) == 0.0);
}

TEST_CASE("position distribution examples") {
  const Grid g = grid_pm16();
  const GridMeasure box = position_distribution(make_box(g, 0.0, 1.0));
  double support_mass = 0.0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < box.size(); ++i) {
    const double x = box.atoms()[i];
    if (box.weights()[i] > 0.0) {
      CHECK(std::abs(x) <= 0.5 + 1e-12);
      support_mass += box.weights()[i];
      ++inside;
    }
  }
  CHECK(inside == 65);
  CHECK(support_mass == Approx(1.0));
  for (std::size_t i = 0; i < box.size(); ++i)
    if (box.weights()[i] > 0.0) CHECK(box.weights()[i] == Approx(1.0 / 65.0));

  CHECK(std::abs(std_deviation(position_distribution(make_gaussian(g, 0.0, 0.0, 1.0))) - 1.0) < 1e-4);
  const MixedState mix({{0.5, make_box(g, -2.0, 1.0)}, {0.5, make_box(g, 2.0, 1.0)}});
  CHECK(std::abs(mean(position_distribution(mix))) < 1e-9);
}

TEST_CASE("momentum distribution examples") {
  const Grid g = grid_pm16();
  const WaveFunction a = make_gaussian(g, 0.0, 0.0, 1.0 / std::sqrt(2.0));
  CHECK(std::abs(std_deviation(momentum_distribution(a)) - 1.0 / std::sqrt(2.0)) < 1e-4);
  const WaveFunction b = weyl_translate(make_gaussian(g, 0.0, 0.0, 1.0), PhasePoint{0.0, 10.0 * g.dp()});
  CHECK(std::abs(mean(momentum_distribution(b)) - 10.0 * g.dp()) < 1e-4);
  for (double s : {0.5, 1.0, 2.0}) {
    const MixedState st(make_gaussian(g, 0.0, 0.0, s));
    CHECK(std::abs(std_deviation(position_distribution(st)) * std_deviation(momentum_distribution(st)) - 0.5) < 1e-4);
  }
}

TEST_CASE("normalisation and momentum round trip") {
  const Grid g = self_dual(512);
  for (const auto& s : ensemble(g)) {
    const GridMeasure q = position_distribution(s), p = momentum_distribution(s);
    double mq = 0.0, mp = 0.0;
    for (double w : q.weights()) mq += w;
    for (double w : p.weights()) mp += w;
    CHECK(std::abs(mq - 1.0) < 1e-9);
    CHECK(std::abs(mp - 1.0) < 1e-9);
  }
  const WaveFunction wf = make_random_localized(g, Interval(1.0, 4.0), 9);
  const WaveFunction back = from_momentum_amplitudes(g, momentum_amplitudes(wf));
  for (std::size_t i = 0; i < wf.size(); ++i) CHECK(std::abs(back.amplitudes()[i] - wf.amplitudes()[i]) < 1e-12);
}

TEST_CASE("weyl translations") {
  const Grid g = grid_pm16();
  const WaveFunction s = make_random_localized(g, Interval(0.0, 3.0), 4);
  const WaveFunction id = weyl_translate(s, PhasePoint{0.0, 0.0});
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(id.amplitudes()[i] - s.amplitudes()[i]) < 1e-15);

  const WaveFunction gs = make_gaussian(g, 0.0, 0.0, 1.0);
  CHECK(std::abs(mean(position_distribution(weyl_translate(gs, PhasePoint{1.3, 0.0}))) - 1.3) <= g.dx);

  const GridMeasure before = position_distribution(s);
  const GridMeasure after = position_distribution(weyl_translate(s, PhasePoint{0.0, 3.7}));
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(std::abs(before.weights()[i] - after.weights()[i]) < 1e-15);
}

TEST_CASE("covariance of the sharp laws") {
  const Grid g = self_dual(1024);
  for (const auto& s : ensemble(g)) {
    const int m = 7;
    const GridMeasure q0 = position_distribution(s);
    const GridMeasure q1 = position_distribution(weyl_translate(s, PhasePoint{m * g.dx, 0.0}));
    for (std::size_t i = 0; i + m < q0.size(); ++i) CHECK(std::abs(q1.weights()[i + m] - q0.weights()[i]) < 1e-9);
    const GridMeasure p0 = momentum_distribution(s);
    const GridMeasure p1 = momentum_distribution(weyl_translate(s, PhasePoint{0.0, -m * g.dp()}));
    for (std::size_t i = m; i < p0.size(); ++i) CHECK(std::abs(p1.weights()[i - m] - p0.weights()[i]) < 1e-9);
  }
}

TEST_CASE("parity") {
  const Grid g = grid_pm16();
  const WaveFunction e = make_gaussian(g, 0.0, 0.0, 1.2);
  const WaveFunction pe = parity(e);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(std::abs(pe.amplitudes()[i] - e.amplitudes()[i]) < 1e-12);
  const GridMeasure b = position_distribution(parity(make_box(g, 2.0, 1.0)));
  const GridMeasure ref = position_distribution(make_box(g, -2.0, 1.0));
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.weights()[i] == Approx(ref.weights()[i]));
  const WaveFunction r = make_random_localized(g, Interval(1.0, 3.0), 2);
  const WaveFunction rr = parity(parity(r));
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(std::abs(rr.amplitudes()[i] - r.amplitudes()[i]) < 1e-14);
}

TEST_CASE("state families") {
  const Grid g = grid_pm16();
  CHECK(std::abs(inner_product(make_hermite(g, 0), make_gaussian(g, 0.0, 0.0, std::sqrt(0.5)))) > 1.0 - 1e-6);
  const WaveFunction a = make_random_localized(g, Interval(0.0, 2.0), 42);
  const WaveFunction b = make_random_localized(g, Interval(0.0, 2.0), 42);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.amplitudes()[i] == b.amplitudes()[i]);
  const GridMeasure ra = position_distribution(a);
  for (std::size_t i = 0; i < ra.size(); ++i)
    if (std::abs(ra.atoms()[i]) > 1.0 + 1e-12) CHECK(ra.weights()[i] == 0.0);
  CHECK_THROWS_AS(make_box(g, 0.0, g.dx), Error);
  CHECK_THROWS_AS(make_gaussian(g, 0.0, 0.0, -1.0), Error);
  CHECK(std::abs(inner_product(make_hermite(g, 1), make_hermite(g, 2))) < 1e-10);
}

TEST_CASE("preparation relation on the test ensemble") {
  const Grid g = self_dual(1024);
  for (const auto& s : ensemble(g))
    CHECK(std_deviation(position_distribution(s)) * std_deviation(momentum_distribution(s)) >= 0.5 - 1e-6);
}

TEST_CASE("harmonic ground state") {
  const Grid g = Grid::centered(24.0 / 1024.0, 1024);
  const GroundState gs = ground_state(2.0, 2.0, g);
  CHECK(std::abs(gs.energy - 1.0) < 1e-6);
  CHECK(std::abs(inner_product(gs.state, make_gaussian(g, 0.0, 0.0, std::sqrt(0.5)))) > 1.0 - 1e-8);
}

TEST_CASE("ground state against the dense eigensolver") {
  GroundStateOptions loose;
  loose.boundary_tol = 1.0;
  for (auto [a, b] : {std::pair{1.0, 1.0}, std::pair{1.0, 2.0}, std::pair{2.0, 1.0}, std::pair{1.5, 3.0}}) {
    const Grid g = self_dual(256);
    const double dense = oracle::dense_ground_energy(a, b, g);
    const GroundState gs = ground_state(a, b, g, loose);
    CHECK(std::abs(gs.energy - dense) < 1e-6);
  }
}

TEST_CASE("ground state symmetry for alpha = beta") {
  const Grid g = self_dual(4096);
  for (double a : {1.5, 3.0}) {
    const GroundState gs = ground_state(a, a, g);
    const GridMeasure q = position_distribution(gs.state), p = momentum_distribution(gs.state);
    for (std::size_t i = 0; i < q.size(); ++i) CHECK(std::abs(q.weights()[i] - p.weights()[i]) < 1e-6);
  }
}

TEST_CASE("ground state errors") {
  CHECK_THROWS_AS(ground_state(0.5, 2.0, self_dual(256)), Error);
  try {
    ground_state(1.0, 1.0, self_dual(256));
    FAIL("expected GridTooSmallError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooSmall);
  }
}

TEST_CASE("state csv") {
  const auto path = std::filesystem::temp_directory_path() / "qmeas_state_roundtrip.csv";
  const Grid g = Grid::centered(0.125, 256);
  const WaveFunction wf = make_random_localized(g, Interval(0.5, 4.0), 3);
  save_state_csv(wf, path.string());
  const WaveFunction back = load_state_csv(path.string());
  CHECK(back.grid().same_as(g));
  for (std::size_t i = 0; i < wf.size(); ++i) CHECK(std::abs(back.amplitudes()[i] - wf.amplitudes()[i]) < 1e-14);
  std::ofstream(path) << "x,re,im\n0,1,0\n0.1,0,0\n0.3,0,0\n";
  CHECK_THROWS_AS(load_state_csv(path.string()), Error);
  std::ofstream(path) << "x,re\n0,1\n1,0\n";
  CHECK_THROWS_AS(load_state_csv(path.string()), Error);
  std::filesystem::remove(path);
}
