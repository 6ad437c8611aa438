#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "qmeas/measure.hpp"

namespace qmeas {

// Joint weight table with prescribed marginals; entry (i, j) pairs
// row_atoms[i] with col_atoms[j]. Stored row-major.
struct Coupling {
  std::vector<double> row_atoms;
  std::vector<double> col_atoms;
  std::vector<double> joint;

  double at(std::size_t i, std::size_t j) const { return joint[i * col_atoms.size() + j]; }
  // Max deviation of row/column sums from the given marginals; negative
  // entries also count as deviation.
  double marginal_error(const GridMeasure& rows, const GridMeasure& cols) const;
  // sum_ij joint(i,j) |x_i - y_j|^alpha
  double cost(double alpha) const;
};

// Kantorovich potentials over the atoms of (first, second) measure.
// Feasible when phi(y) - psi(x) <= |x - y|^alpha for every atom pair.
struct DualPair {
  std::vector<double> psi;  // over atoms of the first measure
  std::vector<double> phi;  // over atoms of the second measure
  double alpha = 1.0;
};

// Wasserstein distance via the monotone (quantile) coupling.
double wasserstein(const GridMeasure& m1, const GridMeasure& m2, double alpha);
// Largest displacement of the monotone coupling.
double wasserstein_inf(const GridMeasure& m1, const GridMeasure& m2);
// The monotone coupling itself, as a dense table.
Coupling quantile_coupling(const GridMeasure& m1, const GridMeasure& m2);

inline constexpr std::size_t kLpCellCap = 10000;

struct LpSolution {
  Coupling coupling;
  double cost = 0.0;        // optimal sum of w_ij |x_i - y_j|^alpha
  DualPair dual;            // optimal potentials from the final basis
  std::size_t pivots = 0;
};

// Exact transportation-problem solve: north-west corner start, then
// cycle-cancelling pivots with Bland's rule. Throws ResourceError when the
// table would exceed kLpCellCap cells.
LpSolution optimal_coupling_lp(const GridMeasure& m1, const GridMeasure& m2, double alpha);

// phi(y_j) = min_i psi(x_i) + |x_i - y_j|^alpha
std::vector<double> c_transform(std::span<const double> x_atoms, std::span<const double> psi,
                                std::span<const double> y_atoms, double alpha);
// psi(x_i) = max_j phi(y_j) - |x_i - y_j|^alpha
std::vector<double> c_transform_reverse(std::span<const double> y_atoms, std::span<const double> phi,
                                        std::span<const double> x_atoms, double alpha);

// Largest constraint violation max(phi(y) - psi(x) - |x - y|^alpha); <= 0 when feasible.
double dual_violation(const GridMeasure& m1, const GridMeasure& m2, const DualPair& pair);
// int phi dm2 - int psi dm1. Throws DomainError when the pair violates the
// constraint by more than 1e-9.
double dual_value(const GridMeasure& m1, const GridMeasure& m2, const DualPair& pair);

struct DualAscentResult {
  DualPair pair;
  double value = 0.0;
  std::size_t rounds = 0;
};

// Alternating c-transforms starting from `start` (phi <- psi^c, psi <- phi^c'),
// stopping when the dual value improves by less than 1e-10 or after
// max_rounds rounds.
DualAscentResult dual_ascent(const GridMeasure& m1, const GridMeasure& m2, DualPair start,
                             std::size_t max_rounds = 1000);
// Dual ascent seeded with the potentials of the exact LP solution.
DualAscentResult dual_ascent_from_lp(const GridMeasure& m1, const GridMeasure& m2, double alpha);

// Piecewise-linear function through (knots[i], values[i]), constant beyond
// the end knots.
struct PiecewiseLinear {
  std::vector<double> knots;
  std::vector<double> values;

  double operator()(double x) const;
  // Largest |slope| between consecutive knots.
  double lipschitz_constant() const;
};

double integrate(const PiecewiseLinear& h, const GridMeasure& m);
// 1-Lipschitz witness built from the LP potentials for alpha = 1:
// h(z) = min_i psi(x_i) + |x_i - z| sampled on the union of atoms.
PiecewiseLinear lipschitz_witness(const GridMeasure& m1, const GridMeasure& m2);
// |int h dm1 - int h dm2|
double witness_gap(const PiecewiseLinear& h, const GridMeasure& m1, const GridMeasure& m2);
// Tent h(x) = max(0, height - |x - peak|); 1-Lipschitz.
PiecewiseLinear tent_function(double peak, double height);

// CSV "i,j,xi,yj,w" listing the nonzero cells.
void save_coupling_csv(const Coupling& c, const std::string& path);

}  // namespace qmeas
