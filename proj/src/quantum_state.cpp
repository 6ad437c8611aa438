#include "qmeas/quantum_state.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include "qmeas/errors.hpp"

namespace qmeas {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

double power_abs(double d, double a) {
  d = std::abs(d);
  if (a == 1.0) return d;
  if (a == 2.0) return d * d;
  return std::pow(d, a);
}

double norm_sq(std::span<const cplx> a, double dx) {
  double s = 0.0;
  for (const cplx& z : a) s += std::norm(z);
  return s * dx;
}

// Natural-order DFT index -> signed frequency.
long signed_freq(std::size_t j, std::size_t n) {
  return j < n / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
}

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, bool inverse) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    require(plan != nullptr, ErrorKind::Internal, "fftw plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace

void dft(std::span<cplx> data, bool inverse) {
  require(is_power_of_two(data.size()), ErrorKind::Domain, "transform length must be a power of two");
  fftw_plan plan = PlanCache::instance().get(data.size(), inverse);
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, buf, buf);
}

// ---------------------------------------------------------------------------
// Grid

Grid Grid::centered(double dx, std::size_t size, double hbar) {
  Grid g{-static_cast<double>(size / 2) * dx, dx, size, hbar};
  g.validate();
  return g;
}

void Grid::validate() const {
  require(is_power_of_two(size), ErrorKind::Domain, "grid size must be a power of two");
  require(dx > 0.0 && std::isfinite(dx), ErrorKind::Domain, "grid spacing must be positive");
  require(std::isfinite(x0), ErrorKind::Domain, "grid origin must be finite");
  require(hbar > 0.0 && std::isfinite(hbar), ErrorKind::Domain, "hbar must be positive");
}

double Grid::dp() const { return 2.0 * kPi * hbar / (static_cast<double>(size) * dx); }

double Grid::p(std::size_t k) const {
  return (static_cast<double>(k) - static_cast<double>(size / 2)) * dp();
}

bool Grid::symmetric() const {
  const double half = static_cast<double>(size / 2) * dx;
  const double half_odd = 0.5 * static_cast<double>(size - 1) * dx;
  return std::abs(x0 + half) <= 1e-9 * dx || std::abs(x0 + half_odd) <= 1e-9 * dx;
}

std::size_t Grid::mirror(std::size_t n) const {
  require(symmetric(), ErrorKind::Domain, "grid is not symmetric about 0");
  const double half = static_cast<double>(size / 2) * dx;
  if (std::abs(x0 + half) <= 1e-9 * dx) return n == 0 ? 0 : size - n;
  return size - 1 - n;
}

std::size_t Grid::nearest_index(double xv) const {
  const double r = std::round((xv - x0) / dx);
  require(r >= 0.0 && r <= static_cast<double>(size - 1), ErrorKind::Domain, "position lies outside the grid");
  return static_cast<std::size_t>(r);
}

bool Grid::same_as(const Grid& o) const {
  return size == o.size && std::abs(dx - o.dx) <= 1e-12 * dx && std::abs(x0 - o.x0) <= 1e-9 * dx &&
         std::abs(hbar - o.hbar) <= 1e-12 * hbar;
}

// ---------------------------------------------------------------------------
// WaveFunction / MixedState

WaveFunction::WaveFunction(Grid grid, std::vector<cplx> amplitudes) : grid_(grid), amp_(std::move(amplitudes)) {
  grid_.validate();
  require(amp_.size() == grid_.size, ErrorKind::Domain, "amplitude count does not match the grid");
  for (const cplx& z : amp_)
    require(std::isfinite(z.real()) && std::isfinite(z.imag()), ErrorKind::Domain, "amplitudes must be finite");
  require(std::abs(norm_sq(amp_, grid_.dx) - 1.0) <= 1e-9, ErrorKind::Domain, "wave function is not normalised");
}

WaveFunction WaveFunction::normalized(Grid grid, std::vector<cplx> amplitudes) {
  grid.validate();
  require(amplitudes.size() == grid.size, ErrorKind::Domain, "amplitude count does not match the grid");
  const double n2 = norm_sq(amplitudes, grid.dx);
  require(n2 > 0.0 && std::isfinite(n2), ErrorKind::Domain, "cannot normalise a zero wave function");
  const double s = 1.0 / std::sqrt(n2);
  for (cplx& z : amplitudes) z *= s;
  return WaveFunction(grid, std::move(amplitudes));
}

std::vector<cplx> momentum_amplitudes(const WaveFunction& wf) {
  const Grid& g = wf.grid();
  const std::size_t n = g.size;
  std::vector<cplx> buf(wf.amplitudes().begin(), wf.amplitudes().end());
  dft(buf, false);
  const double scale = g.dx / std::sqrt(2.0 * kPi * g.hbar);
  std::vector<cplx> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long k = signed_freq(j, n);
    // exp(-i p x0 / hbar) for the grid offset
    const double phase = -2.0 * kPi * static_cast<double>(k) * g.x0 / (static_cast<double>(n) * g.dx);
    out[static_cast<std::size_t>(k + static_cast<long>(n / 2))] = scale * buf[j] * std::polar(1.0, phase);
  }
  return out;
}

WaveFunction from_momentum_amplitudes(const Grid& g, std::vector<cplx> phat) {
  g.validate();
  require(phat.size() == g.size, ErrorKind::Domain, "momentum amplitude count does not match the grid");
  const std::size_t n = g.size;
  std::vector<cplx> buf(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long k = signed_freq(j, n);
    const double phase = 2.0 * kPi * static_cast<double>(k) * g.x0 / (static_cast<double>(n) * g.dx);
    buf[j] = phat[static_cast<std::size_t>(k + static_cast<long>(n / 2))] * std::polar(1.0, phase);
  }
  dft(buf, true);
  const double scale = g.dp() / std::sqrt(2.0 * kPi * g.hbar);
  for (cplx& z : buf) z *= scale;
  return WaveFunction::normalized(g, std::move(buf));
}

cplx inner_product(const WaveFunction& a, const WaveFunction& b) {
  require(a.grid().same_as(b.grid()), ErrorKind::Domain, "states live on different grids");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a.amplitudes()[i]) * b.amplitudes()[i];
  return s * a.grid().dx;
}

MixedState::MixedState(const WaveFunction& pure) : components_{{1.0, pure}} {}

MixedState::MixedState(std::vector<Component> components) : components_(std::move(components)) {
  require(!components_.empty(), ErrorKind::Domain, "mixed state needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    require(c.weight > 0.0 && std::isfinite(c.weight), ErrorKind::Domain, "mixture weights must be positive");
    require(c.wf.grid().same_as(components_.front().wf.grid()), ErrorKind::Domain,
            "mixture components must share one grid");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::Domain, "mixture weights must sum to one");
}

// ---------------------------------------------------------------------------
// Distributions

namespace {

GridMeasure lattice_measure(std::vector<double> atoms, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  require(total > 0.0, ErrorKind::Internal, "empty distribution");
  for (double& w : weights) w /= total;
  return GridMeasure(std::move(atoms), std::move(weights));
}

}  // namespace

GridMeasure position_distribution(const MixedState& s) {
  const Grid& g = s.grid();
  std::vector<double> atoms(g.size), weights(g.size, 0.0);
  for (std::size_t i = 0; i < g.size; ++i) atoms[i] = g.x(i);
  for (const auto& c : s.components()) {
    const auto a = c.wf.amplitudes();
    for (std::size_t i = 0; i < g.size; ++i) weights[i] += c.weight * std::norm(a[i]) * g.dx;
  }
  return lattice_measure(std::move(atoms), std::move(weights));
}

GridMeasure momentum_distribution(const MixedState& s) {
  const Grid& g = s.grid();
  std::vector<double> atoms(g.size), weights(g.size, 0.0);
  for (std::size_t k = 0; k < g.size; ++k) atoms[k] = g.p(k);
  const double dp = g.dp();
  for (const auto& c : s.components()) {
    const auto phat = momentum_amplitudes(c.wf);
    for (std::size_t k = 0; k < g.size; ++k) weights[k] += c.weight * std::norm(phat[k]) * dp;
  }
  return lattice_measure(std::move(atoms), std::move(weights));
}

// ---------------------------------------------------------------------------
// Weyl operators and parity

WaveFunction weyl_translate(const WaveFunction& wf, PhasePoint pt) {
  const Grid& g = wf.grid();
  require(std::isfinite(pt.q) && std::isfinite(pt.p), ErrorKind::Domain, "phase point must be finite");
  require(std::abs(pt.q) < g.extent(), ErrorKind::Domain, "translation exceeds the grid extent");
  const long n = static_cast<long>(g.size);
  const long cells = std::lround(pt.q / g.dx);
  const double rest = pt.q - static_cast<double>(cells) * g.dx;

  const auto in = wf.amplitudes();
  std::vector<cplx> out(g.size, 0.0);
  double lost = 0.0;
  for (long j = 0; j < n; ++j) {
    const long to = j + cells;
    if (to < 0 || to >= n) {
      lost += std::norm(in[static_cast<std::size_t>(j)]) * g.dx;
    } else {
      out[static_cast<std::size_t>(to)] = in[static_cast<std::size_t>(j)];
    }
  }
  require(lost <= 1e-9, ErrorKind::Domain, "translation pushes mass off the grid");

  if (std::abs(rest) > 1e-12 * g.dx) {
    auto shifted = WaveFunction::normalized(g, std::move(out));
    auto phat = momentum_amplitudes(shifted);
    for (std::size_t k = 0; k < g.size; ++k) phat[k] *= std::polar(1.0, -g.p(k) * rest / g.hbar);
    auto back = from_momentum_amplitudes(g, std::move(phat));
    out.assign(back.amplitudes().begin(), back.amplitudes().end());
  }
  if (pt.p != 0.0) {
    for (std::size_t i = 0; i < g.size; ++i)
      out[i] *= std::polar(1.0, (pt.p * g.x(i) - 0.5 * pt.q * pt.p) / g.hbar);
  }
  return WaveFunction::normalized(g, std::move(out));
}

MixedState weyl_translate(const MixedState& s, PhasePoint pt) {
  std::vector<MixedState::Component> comps;
  for (const auto& c : s.components()) comps.push_back({c.weight, weyl_translate(c.wf, pt)});
  return MixedState(std::move(comps));
}

WaveFunction parity(const WaveFunction& wf) {
  const Grid& g = wf.grid();
  require(g.symmetric(), ErrorKind::Domain, "parity needs a grid symmetric about 0");
  std::vector<cplx> out(g.size);
  for (std::size_t i = 0; i < g.size; ++i) out[g.mirror(i)] = wf.amplitudes()[i];
  return WaveFunction::normalized(g, std::move(out));
}

MixedState parity(const MixedState& s) {
  std::vector<MixedState::Component> comps;
  for (const auto& c : s.components()) comps.push_back({c.weight, parity(c.wf)});
  return MixedState(std::move(comps));
}

// ---------------------------------------------------------------------------
// Families

WaveFunction make_gaussian(const Grid& g, double x0, double p0, double sigma) {
  g.validate();
  require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::Domain, "gaussian width must be positive");
  require(x0 >= g.x0 && x0 <= g.x_max(), ErrorKind::Domain, "gaussian center lies outside the grid");
  std::vector<cplx> a(g.size);
  for (std::size_t i = 0; i < g.size; ++i) {
    const double d = g.x(i) - x0;
    a[i] = std::polar(std::exp(-d * d / (4.0 * sigma * sigma)), p0 * g.x(i) / g.hbar);
  }
  return WaveFunction::normalized(g, std::move(a));
}

WaveFunction make_box(const Grid& g, double center, double width, double p0) {
  g.validate();
  require(width >= 2.0 * g.dx, ErrorKind::Domain, "box width must be at least two grid spacings");
  const Interval j(center, width);
  const double slack = 1e-9 * g.dx;
  require(j.lo() >= g.x0 - slack && j.hi() <= g.x_max() + slack, ErrorKind::Domain,
          "box does not fit on the grid");
  std::vector<cplx> a(g.size, 0.0);
  for (std::size_t i = 0; i < g.size; ++i)
    if (j.contains(g.x(i), slack)) a[i] = std::polar(1.0, p0 * g.x(i) / g.hbar);
  return WaveFunction::normalized(g, std::move(a));
}

WaveFunction make_hermite(const Grid& g, int n) {
  g.validate();
  require(n >= 0, ErrorKind::Domain, "hermite index must be nonnegative");
  const double ell = std::sqrt(g.hbar);
  std::vector<cplx> a(g.size);
  for (std::size_t i = 0; i < g.size; ++i) {
    const double xi = g.x(i) / ell;
    // normalised Hermite functions by their three-term recursion
    double h_prev = 0.0;
    double h = std::exp(-0.5 * xi * xi);
    for (int k = 0; k < n; ++k) {
      const double next = std::sqrt(2.0 / (k + 1)) * xi * h - std::sqrt(static_cast<double>(k) / (k + 1)) * h_prev;
      h_prev = h;
      h = next;
    }
    a[i] = h;
  }
  return WaveFunction::normalized(g, std::move(a));
}

WaveFunction make_random_localized(const Grid& g, const Interval& support, std::uint64_t seed) {
  g.validate();
  require(support.width >= 2.0 * g.dx, ErrorKind::Domain, "support width must be at least two grid spacings");
  const double slack = 1e-9 * g.dx;
  require(support.lo() >= g.x0 - slack && support.hi() <= g.x_max() + slack, ErrorKind::Domain,
          "support does not fit on the grid");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  constexpr int kModes = 4;
  cplx c[kModes];
  for (auto& z : c) {
    const double re = coef(rng);
    z = cplx(re, coef(rng));
  }
  std::vector<cplx> a(g.size, 0.0);
  for (std::size_t i = 0; i < g.size; ++i) {
    const double u = (g.x(i) - support.lo()) / support.width;
    if (u <= 0.0 || u >= 1.0) continue;
    const double s = std::sin(kPi * u);
    cplx series = 1.0;
    for (int k = 0; k < kModes; ++k) series += c[k] / static_cast<double>(k + 1) * std::polar(1.0, 2.0 * kPi * (k + 1) * u);
    a[i] = s * s * series;
  }
  return WaveFunction::normalized(g, std::move(a));
}

WaveFunction make_point(const Grid& g, double at) {
  g.validate();
  std::vector<cplx> a(g.size, 0.0);
  a[g.nearest_index(at)] = 1.0;
  return WaveFunction::normalized(g, std::move(a));
}

// ---------------------------------------------------------------------------
// Ground state of |x|^alpha + |p|^beta

namespace {

struct Hamiltonian {
  Hamiltonian(const Grid& g, double alpha, double beta) : grid(g), v(g.size), t(g.size) {
    for (std::size_t i = 0; i < g.size; ++i) v[i] = power_abs(g.x(i), alpha);
    const double dp = g.dp();
    for (std::size_t j = 0; j < g.size; ++j) t[j] = power_abs(static_cast<double>(signed_freq(j, g.size)) * dp, beta);
  }

  double energy(std::span<const cplx> psi, std::vector<cplx>& scratch) const {
    double ev = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) ev += v[i] * std::norm(psi[i]);
    scratch.assign(psi.begin(), psi.end());
    dft(scratch, false);
    double et = 0.0;
    for (std::size_t j = 0; j < psi.size(); ++j) et += t[j] * std::norm(scratch[j]);
    return ev * grid.dx + et * grid.dx / static_cast<double>(grid.size);
  }

  double residual(std::span<const cplx> psi, double e) const {
    std::vector<cplx> kin(psi.begin(), psi.end());
    dft(kin, false);
    for (std::size_t j = 0; j < kin.size(); ++j) kin[j] *= t[j];
    dft(kin, true);
    const double inv_n = 1.0 / static_cast<double>(grid.size);
    double r = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) r += std::norm(kin[i] * inv_n + (v[i] - e) * psi[i]);
    return std::sqrt(r * grid.dx);
  }

  Grid grid;
  std::vector<double> v, t;
};

void renormalize(std::vector<cplx>& psi, double dx) {
  const double s = 1.0 / std::sqrt(norm_sq(psi, dx));
  for (cplx& z : psi) z *= s;
}

double edge_amplitude(std::span<const cplx> a, double cell) {
  return std::sqrt((std::norm(a.front()) + std::norm(a.back())) * cell);
}

}  // namespace

double hamiltonian_energy(const WaveFunction& wf, double alpha, double beta) {
  Hamiltonian h(wf.grid(), alpha, beta);
  std::vector<cplx> scratch;
  return h.energy(wf.amplitudes(), scratch);
}

double hamiltonian_residual(const WaveFunction& wf, double alpha, double beta, double energy) {
  Hamiltonian h(wf.grid(), alpha, beta);
  return h.residual(wf.amplitudes(), energy);
}

namespace {

double real_dot(std::span<const cplx> a, std::span<const cplx> b, double dx) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s * dx;
}

// Split-step imaginary time until the residual drops below `target` or the
// step gets small. Returns the number of accepted and rejected steps.
std::size_t imaginary_time(const Hamiltonian& h, std::vector<cplx>& psi, double target, std::size_t max_steps) {
  const std::size_t n = psi.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<cplx> cand(n), scratch;
  std::vector<double> half_v(n), full_t(n);
  double e = h.energy(psi, scratch);
  double tau = 0.2;
  double built_for = -1.0;
  std::size_t steps = 0;
  while (steps < max_steps && tau > 1e-4) {
    if (tau != built_for) {
      for (std::size_t i = 0; i < n; ++i) half_v[i] = std::exp(-0.5 * tau * h.v[i]);
      for (std::size_t j = 0; j < n; ++j) full_t[j] = std::exp(-tau * h.t[j]) * inv_n;
      built_for = tau;
    }
    for (std::size_t i = 0; i < n; ++i) cand[i] = psi[i] * half_v[i];
    dft(cand, false);
    for (std::size_t j = 0; j < n; ++j) cand[j] *= full_t[j];
    dft(cand, true);
    for (std::size_t i = 0; i < n; ++i) cand[i] *= half_v[i];
    renormalize(cand, h.grid.dx);
    ++steps;

    const double e_new = h.energy(cand, scratch);
    if (e_new > e + 1e-15 * std::abs(e)) {
      tau *= 0.5;  // splitting bias dominates at this step
      continue;
    }
    const double gain = e - e_new;
    psi.swap(cand);
    e = e_new;
    if (gain <= 1e-13 * std::max(1.0, std::abs(e))) {
      if (h.residual(psi, e) < target) break;
      tau *= 0.5;
    }
  }
  return steps;
}

// Rayleigh-Ritz on span{x, M r, previous direction} with M = (T + c)^-1,
// repeated until ||H x - g x|| < tol. The splitting scheme above leaves a
// residual proportional to its step when the potential has a kink; this
// removes it without shrinking the step further.
std::size_t rayleigh_ritz_polish(const Hamiltonian& h, std::vector<cplx>& x, double tol, std::size_t max_iter) {
  const std::size_t n = x.size();
  const double dx = h.grid.dx;
  const double inv_n = 1.0 / static_cast<double>(n);
  auto apply_h = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
    out = in;
    dft(out, false);
    for (std::size_t j = 0; j < n; ++j) out[j] *= h.t[j] * inv_n;
    dft(out, true);
    for (std::size_t i = 0; i < n; ++i) out[i] += h.v[i] * in[i];
  };

  std::vector<cplx> hx;
  apply_h(x, hx);
  std::vector<cplx> p, hp, w, hw;
  double c = std::max(1.0, real_dot(x, hx, dx));
  for (std::size_t it = 0; it < max_iter; ++it) {
    const double rho = real_dot(x, hx, dx);
    w.resize(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = hx[i] - rho * x[i];
    if (std::sqrt(real_dot(w, w, dx)) < tol) return it;

    dft(w, false);
    for (std::size_t j = 0; j < n; ++j) w[j] /= (h.t[j] + c) * static_cast<double>(n);
    dft(w, true);

    // Orthonormal basis: x, then w and p with x (and each other) projected out.
    std::vector<std::vector<cplx>*> basis{&x};
    std::vector<std::vector<cplx>*> hbasis{&hx};
    auto orthonormalize = [&](std::vector<cplx>& v, std::vector<cplx>& hv, bool have_hv) {
      const double before = std::sqrt(real_dot(v, v, dx));
      for (std::size_t b = 0; b < basis.size(); ++b) {
        const double proj = real_dot(*basis[b], v, dx);
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * (*basis[b])[i];
        if (have_hv)
          for (std::size_t i = 0; i < n; ++i) hv[i] -= proj * (*hbasis[b])[i];
      }
      const double after = std::sqrt(real_dot(v, v, dx));
      if (!(after > 1e-10 * before) || after == 0.0) return false;
      for (auto& z : v) z /= after;
      if (have_hv) {
        for (auto& z : hv) z /= after;
      } else {
        apply_h(v, hv);
      }
      return true;
    };
    if (orthonormalize(w, hw, false)) {
      basis.push_back(&w);
      hbasis.push_back(&hw);
    }
    if (!p.empty() && orthonormalize(p, hp, true)) {
      basis.push_back(&p);
      hbasis.push_back(&hp);
    }
    const auto m = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd a(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = real_dot(*basis[i], *hbasis[j], dx);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
    const Eigen::VectorXd y = eig.eigenvectors().col(0);

    std::vector<cplx> nx(n, 0.0), nhx(n, 0.0), np(n, 0.0), nhp(n, 0.0);
    for (Eigen::Index b = 0; b < m; ++b) {
      for (std::size_t i = 0; i < n; ++i) {
        nx[i] += y(b) * (*basis[b])[i];
        nhx[i] += y(b) * (*hbasis[b])[i];
        if (b > 0) {
          np[i] += y(b) * (*basis[b])[i];
          nhp[i] += y(b) * (*hbasis[b])[i];
        }
      }
    }
    const double norm = std::sqrt(real_dot(nx, nx, dx));
    for (std::size_t i = 0; i < n; ++i) {
      nx[i] /= norm;
      nhx[i] /= norm;
    }
    x.swap(nx);
    hx.swap(nhx);
    p.swap(np);
    hp.swap(nhp);
    if (it % 25 == 24) apply_h(x, hx);  // drift in the running H x
    c = std::max(1.0, rho);
  }
  return max_iter;
}

}  // namespace

GroundState ground_state(double alpha, double beta, Grid grid, const GroundStateOptions& opts) {
  require(alpha >= 1.0 && beta >= 1.0 && std::isfinite(alpha) && std::isfinite(beta), ErrorKind::Domain,
          "ground state needs alpha, beta >= 1");
  require(opts.tol > 0.0, ErrorKind::Domain, "residual tolerance must be positive");
  grid.hbar = 1.0;
  grid.validate();
  require(grid.symmetric(), ErrorKind::Domain, "ground state needs a grid symmetric about 0");

  const Hamiltonian h(grid, alpha, beta);
  const WaveFunction start = make_gaussian(grid, 0.0, 0.0, std::sqrt(0.5));
  std::vector<cplx> psi(start.amplitudes().begin(), start.amplitudes().end());

  std::size_t steps = imaginary_time(h, psi, std::max(opts.tol, 1e-3), opts.max_steps);
  std::vector<cplx> scratch;
  double e = h.energy(psi, scratch);
  double res = h.residual(psi, e);
  if (res >= opts.tol) {
    const std::size_t budget = opts.max_steps > steps ? opts.max_steps - steps : 0;
    steps += rayleigh_ritz_polish(h, psi, opts.tol, std::min<std::size_t>(budget, 20000));
    renormalize(psi, grid.dx);
    e = h.energy(psi, scratch);
    res = h.residual(psi, e);
    require(res < opts.tol, ErrorKind::Convergence,
            "ground state residual " + std::to_string(res) + " above tolerance");
  }

  WaveFunction wf = WaveFunction::normalized(grid, psi);
  const auto phat = momentum_amplitudes(wf);
  const double edge = std::max(edge_amplitude(wf.amplitudes(), grid.dx), edge_amplitude(phat, grid.dp()));
  require(edge < opts.boundary_tol, ErrorKind::GridTooSmall,
          "ground state reaches the grid boundary (edge amplitude " + std::to_string(edge) + ")");
  return GroundState{e, std::move(wf), res, edge, steps};
}

// ---------------------------------------------------------------------------
// CSV

WaveFunction load_state_csv(const std::string& path, double hbar) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Schema, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "x,re,im", ErrorKind::Schema, path + ": expected header x,re,im");
  std::vector<double> xs;
  std::vector<cplx> amps;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    double v[3];
    char sep = 0;
    row >> v[0] >> sep;
    require(static_cast<bool>(row) && sep == ',', ErrorKind::Schema, path + ":" + std::to_string(lineno) + ": bad row");
    row >> v[1] >> sep;
    require(static_cast<bool>(row) && sep == ',', ErrorKind::Schema, path + ":" + std::to_string(lineno) + ": bad row");
    row >> v[2];
    require(static_cast<bool>(row), ErrorKind::Schema, path + ":" + std::to_string(lineno) + ": bad row");
    xs.push_back(v[0]);
    amps.emplace_back(v[1], v[2]);
  }
  require(xs.size() >= 2 && is_power_of_two(xs.size()), ErrorKind::Schema,
          path + ": row count must be a power of two");
  const double dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
  require(dx > 0.0, ErrorKind::Schema, path + ": positions must increase");
  for (std::size_t i = 0; i < xs.size(); ++i)
    require(std::abs(xs[i] - (xs.front() + static_cast<double>(i) * dx)) <= 1e-6 * dx, ErrorKind::Schema,
            path + ": positions are not on a uniform grid");
  return WaveFunction::normalized(Grid{xs.front(), dx, xs.size(), hbar}, std::move(amps));
}

void save_state_csv(const WaveFunction& wf, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out.precision(17);
  out << "x,re,im\n";
  for (std::size_t i = 0; i < wf.size(); ++i)
    out << wf.grid().x(i) << ',' << wf.amplitudes()[i].real() << ',' << wf.amplitudes()[i].imag() << '\n';
}

}  // namespace qmeas
