#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmeas/measure.hpp"
#include "qmeas/quantum_state.hpp"

namespace qmeas {

enum class Axis { Position, Momentum };

std::string_view axis_name(Axis a);

// Operational observable: a rule state -> outcome distribution. Values are
// immutable and cheap to copy (shared payload).
class Observable {
 public:
  enum class Kind { SharpQ, SharpP, SmearedQ, SmearedP, Pushforward, Trivial, CovariantMarginal };

  static Observable sharp(Axis axis);
  static Observable sharp_q() { return sharp(Axis::Position); }
  static Observable sharp_p() { return sharp(Axis::Momentum); }
  static Observable smeared(Axis axis, GridMeasure noise);
  static Observable smeared_q(GridMeasure mu) { return smeared(Axis::Position, std::move(mu)); }
  static Observable smeared_p(GridMeasure nu) { return smeared(Axis::Momentum, std::move(nu)); }
  static Observable pushforward(const Observable& inner, RealMap f);
  static Observable trivial(GridMeasure mu, Axis axis = Axis::Position);
  // Marginal of the covariant phase-space observable generated by tau. At
  // most 16 mixture components; tau's grid must be symmetric.
  static Observable covariant_marginal(const MixedState& tau, Axis axis);

  Kind kind() const;
  // Axis of the outcome. Pushforward inherits it from the inner observable.
  Axis axis() const;
  bool is_sharp() const { return kind() == Kind::SharpQ || kind() == Kind::SharpP; }
  // Smeared / covariant-marginal noise measure, or the constant output of a
  // trivial observable. Throws DomainError for other kinds.
  const GridMeasure& noise() const;
  const Observable& inner() const;
  const RealMap& map() const;
  const MixedState& tau() const;
  std::string describe() const;

 private:
  struct Data;
  explicit Observable(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  std::shared_ptr<const Data> d_;
};

inline constexpr std::size_t kMaxTauComponents = 16;

// (mu_tau, nu_tau): position and momentum laws of parity(tau).
std::pair<GridMeasure, GridMeasure> covariant_marginals(const MixedState& tau);

GridMeasure distribution(const Observable& obs, const MixedState& s);

// Phase-space table of the covariant observable on a (q, p) lattice. q runs
// over m*dx for m = -N/2 .. N/2-1 and p over the momentum lattice, each
// thinned by its stride.
struct LatticeSpec {
  std::size_t q_stride = 1;
  std::size_t p_stride = 1;
};

struct JointTable {
  std::vector<double> q_atoms;
  std::vector<double> p_atoms;
  std::vector<double> weights;  // row-major, q rows
  double q_marginal_tv = 0.0;   // against the CovariantMarginal outputs
  double p_marginal_tv = 0.0;

  double at(std::size_t i, std::size_t j) const { return weights[i * p_atoms.size() + j]; }
  GridMeasure q_marginal() const;
  GridMeasure p_marginal() const;
  double total_mass() const;
};

inline constexpr std::size_t kJointCellCap = std::size_t{1} << 22;

// Throws AccuracyError when either marginal is more than 1e-2 in total
// variation from the exact marginal (after binning onto the lattice).
JointTable joint_covariant_distribution(const MixedState& tau, const MixedState& s, LatticeSpec lattice = {});

// Total variation after splitting each atom of `ref` linearly between the two
// neighbouring atoms of the (uniform) lattice `coarse`; atoms beyond the
// lattice ends count as lost.
double binned_total_variation(const GridMeasure& coarse, const GridMeasure& ref);

// Expectations of the first and second moment operators C[x], C[x^2]:
// first = <C[x]>, first_sq = <C[x]^2>, second = <C[x^2]>. Also the target
// mean <A> of the matching sharp observable.
struct MomentStats {
  double first = 0.0;
  double first_sq = 0.0;
  double second = 0.0;
  double sharp_mean = 0.0;
};

// Supported for sharp, smeared and covariant-marginal observables; other
// kinds are a DomainError.
MomentStats moment_stats(const Observable& obs, const MixedState& s);

}  // namespace qmeas
