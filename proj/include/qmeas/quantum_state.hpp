#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qmeas/measure.hpp"

namespace qmeas {

using cplx = std::complex<double>;

// Uniform position grid x_n = x0 + n*dx, n = 0..size-1, size a power of two.
// Momenta live on the reciprocal lattice p = k*dp, dp = 2*pi*hbar/(size*dx),
// k = -size/2 .. size/2-1 (stored in that order).
struct Grid {
  double x0 = 0.0;
  double dx = 1.0;
  std::size_t size = 0;
  double hbar = 1.0;

  // x0 = -size/2 * dx, so the grid contains 0 and mirrors about it.
  static Grid centered(double dx, std::size_t size, double hbar = 1.0);

  void validate() const;  // DomainError on non power of two, dx <= 0, hbar <= 0
  double x(std::size_t n) const { return x0 + static_cast<double>(n) * dx; }
  double x_max() const { return x(size - 1); }
  double extent() const { return dx * static_cast<double>(size); }
  double dp() const;
  double p(std::size_t k) const;  // k in stored (centered) order
  double p_max() const { return p(size - 1); }
  // Either x0 = -size/2*dx (0 is a grid point) or x0 = -(size-1)/2*dx.
  bool symmetric() const;
  // Index of the grid point at -x_n. For the zero-containing layout the left
  // end point has no partner and maps to itself.
  std::size_t mirror(std::size_t n) const;
  std::size_t nearest_index(double x) const;
  bool same_as(const Grid& other) const;
};

// Unnormalised in-place DFT of length data.size() (power of two). Forward uses
// exp(-2 pi i k n / N). Plans are cached and shared between threads.
void dft(std::span<cplx> data, bool inverse);

// Normalised amplitudes: sum |psi_n|^2 dx = 1 within 1e-9.
class WaveFunction {
 public:
  WaveFunction(Grid grid, std::vector<cplx> amplitudes);
  // Rescales to unit norm; DomainError for a zero vector.
  static WaveFunction normalized(Grid grid, std::vector<cplx> amplitudes);

  const Grid& grid() const { return grid_; }
  std::span<const cplx> amplitudes() const { return amp_; }
  std::size_t size() const { return amp_.size(); }

 private:
  Grid grid_;
  std::vector<cplx> amp_;
};

// Momentum amplitudes psi_hat(p_k), p in ascending order, normalised so that
// sum |psi_hat|^2 dp = 1.
std::vector<cplx> momentum_amplitudes(const WaveFunction& wf);
// Inverse of momentum_amplitudes.
WaveFunction from_momentum_amplitudes(const Grid& grid, std::vector<cplx> phat);
// <a, b> = sum conj(a_n) b_n dx
cplx inner_product(const WaveFunction& a, const WaveFunction& b);

// Finite mixture sum_k w_k |psi_k><psi_k| on one grid.
class MixedState {
 public:
  struct Component {
    double weight;
    WaveFunction wf;
  };

  MixedState(const WaveFunction& pure);
  explicit MixedState(std::vector<Component> components);

  const Grid& grid() const { return components_.front().wf.grid(); }
  const std::vector<Component>& components() const { return components_; }
  bool is_pure() const { return components_.size() == 1; }

 private:
  std::vector<Component> components_;
};

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

// All N grid points are atoms (zero weights included).
GridMeasure position_distribution(const MixedState& s);
GridMeasure momentum_distribution(const MixedState& s);

// W(q,p) psi(x) = exp(i p x/hbar - i q p/(2 hbar)) psi(x - q). Whole cells of the
// shift move the array, the remainder is a momentum-space phase ramp. Mass
// pushed off the grid beyond 1e-9 is a DomainError.
WaveFunction weyl_translate(const WaveFunction& wf, PhasePoint pt);
MixedState weyl_translate(const MixedState& s, PhasePoint pt);
WaveFunction parity(const WaveFunction& wf);
MixedState parity(const MixedState& s);

// State families. Each is normalised on the grid.
// psi ~ exp(-(x-x0)^2/(4 sigma^2) + i p0 x/hbar); position std sigma.
WaveFunction make_gaussian(const Grid& grid, double x0, double p0, double sigma);
// Constant modulus on the grid points of [center - width/2, center + width/2];
// exactly zero elsewhere. width < 2 dx is a DomainError.
WaveFunction make_box(const Grid& grid, double center, double width, double p0 = 0.0);
// Oscillator eigenfunction n for unit mass and frequency: length scale sqrt(hbar).
WaveFunction make_hermite(const Grid& grid, int n);
// sin^2 bump on the interval times a random low-order Fourier series; zero
// outside the interval. Same seed, same amplitudes.
WaveFunction make_random_localized(const Grid& grid, const Interval& support, std::uint64_t seed);
// All amplitude on the grid point nearest to `at`.
WaveFunction make_point(const Grid& grid, double at);

struct GroundStateOptions {
  double tol = 1e-6;            // residual ||H psi - g psi||
  std::size_t max_steps = 400000;
  double boundary_tol = 1e-8;   // sqrt of the mass in the outermost cells
};

struct GroundState {
  double energy = 0.0;
  WaveFunction state;
  double residual = 0.0;
  double boundary_amplitude = 0.0;
  std::size_t steps = 0;
};

// <psi, H psi> for H = |x|^alpha + |p|^beta with hbar taken from the grid.
double hamiltonian_energy(const WaveFunction& wf, double alpha, double beta);
double hamiltonian_residual(const WaveFunction& wf, double alpha, double beta, double energy);

// Lowest eigenpair of |x|^alpha + |p|^beta with hbar = 1 by imaginary-time
// split-step propagation. The grid's hbar is ignored.
GroundState ground_state(double alpha, double beta, Grid grid, const GroundStateOptions& opts = {});

// CSV "x,re,im" on a uniform grid. The hbar of the loaded grid is `hbar`.
WaveFunction load_state_csv(const std::string& path, double hbar = 1.0);
void save_state_csv(const WaveFunction& wf, const std::string& path);

}  // namespace qmeas
