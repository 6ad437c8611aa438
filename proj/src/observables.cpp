#include "qmeas/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmeas/errors.hpp"

namespace qmeas {

std::string_view axis_name(Axis a) { return a == Axis::Position ? "position" : "momentum"; }

struct Observable::Data {
  Kind kind;
  Axis axis;
  std::optional<GridMeasure> noise;
  std::optional<Observable> inner;
  std::optional<RealMap> map;
  std::optional<MixedState> tau;
};

Observable Observable::sharp(Axis axis) {
  return Observable(std::make_shared<const Data>(
      Data{axis == Axis::Position ? Kind::SharpQ : Kind::SharpP, axis, std::nullopt, std::nullopt, std::nullopt, std::nullopt}));
}

Observable Observable::smeared(Axis axis, GridMeasure noise) {
  return Observable(std::make_shared<const Data>(Data{axis == Axis::Position ? Kind::SmearedQ : Kind::SmearedP, axis,
                                                      std::move(noise), std::nullopt, std::nullopt, std::nullopt}));
}

Observable Observable::pushforward(const Observable& inner, RealMap f) {
  return Observable(std::make_shared<const Data>(
      Data{Kind::Pushforward, inner.axis(), std::nullopt, inner, std::move(f), std::nullopt}));
}

Observable Observable::trivial(GridMeasure mu, Axis axis) {
  return Observable(
      std::make_shared<const Data>(Data{Kind::Trivial, axis, std::move(mu), std::nullopt, std::nullopt, std::nullopt}));
}

Observable Observable::covariant_marginal(const MixedState& tau, Axis axis) {
  require(tau.components().size() <= kMaxTauComponents, ErrorKind::Domain,
          "tau may have at most 16 mixture components");
  auto [mu, nu] = covariant_marginals(tau);
  return Observable(std::make_shared<const Data>(Data{Kind::CovariantMarginal, axis,
                                                      axis == Axis::Position ? std::move(mu) : std::move(nu),
                                                      std::nullopt, std::nullopt, tau}));
}

Observable::Kind Observable::kind() const { return d_->kind; }
Axis Observable::axis() const { return d_->axis; }

const GridMeasure& Observable::noise() const {
  require(d_->noise.has_value(), ErrorKind::Domain, "observable has no noise measure");
  return *d_->noise;
}

const Observable& Observable::inner() const {
  require(d_->inner.has_value(), ErrorKind::Domain, "observable is not a pushforward");
  return *d_->inner;
}

const RealMap& Observable::map() const {
  require(d_->map.has_value(), ErrorKind::Domain, "observable is not a pushforward");
  return *d_->map;
}

const MixedState& Observable::tau() const {
  require(d_->tau.has_value(), ErrorKind::Domain, "observable is not a covariant marginal");
  return *d_->tau;
}

std::string Observable::describe() const {
  std::ostringstream os;
  switch (kind()) {
    case Kind::SharpQ: return "sharp_q";
    case Kind::SharpP: return "sharp_p";
    case Kind::SmearedQ:
    case Kind::SmearedP:
      os << (kind() == Kind::SmearedQ ? "smeared_q" : "smeared_p") << "(" << noise().size() << " atoms)";
      return os.str();
    case Kind::Pushforward:
      os << "pushforward(" << inner().describe() << ", " << map().label() << ")";
      return os.str();
    case Kind::Trivial:
      os << "trivial(" << noise().size() << " atoms)";
      return os.str();
    case Kind::CovariantMarginal:
      os << "covariant_marginal(" << axis_name(axis()) << ", " << tau().components().size() << " components)";
      return os.str();
  }
  return "unknown";
}

std::pair<GridMeasure, GridMeasure> covariant_marginals(const MixedState& tau) {
  require(tau.grid().symmetric(), ErrorKind::Domain, "tau needs a grid symmetric about 0");
  const MixedState flipped = parity(tau);
  return {position_distribution(flipped), momentum_distribution(flipped)};
}

GridMeasure distribution(const Observable& obs, const MixedState& s) {
  switch (obs.kind()) {
    case Observable::Kind::SharpQ: return position_distribution(s);
    case Observable::Kind::SharpP: return momentum_distribution(s);
    case Observable::Kind::SmearedQ: return convolve(position_distribution(s), obs.noise());
    case Observable::Kind::SmearedP: return convolve(momentum_distribution(s), obs.noise());
    case Observable::Kind::Pushforward: return pushforward(distribution(obs.inner(), s), obs.map());
    case Observable::Kind::Trivial: return obs.noise();
    case Observable::Kind::CovariantMarginal:
      require(obs.tau().grid().same_as(s.grid()), ErrorKind::Domain, "tau and the state live on different grids");
      return convolve(obs.axis() == Axis::Position ? position_distribution(s) : momentum_distribution(s), obs.noise());
  }
  fail(ErrorKind::Internal, "unhandled observable kind");
}

// ---------------------------------------------------------------------------
// Joint covariant table

GridMeasure JointTable::q_marginal() const {
  std::vector<double> w(q_atoms.size(), 0.0);
  for (std::size_t i = 0; i < q_atoms.size(); ++i)
    for (std::size_t j = 0; j < p_atoms.size(); ++j) w[i] += at(i, j);
  return GridMeasure::normalized(q_atoms, std::move(w));
}

GridMeasure JointTable::p_marginal() const {
  std::vector<double> w(p_atoms.size(), 0.0);
  for (std::size_t i = 0; i < q_atoms.size(); ++i)
    for (std::size_t j = 0; j < p_atoms.size(); ++j) w[j] += at(i, j);
  return GridMeasure::normalized(p_atoms, std::move(w));
}

double JointTable::total_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double binned_total_variation(const GridMeasure& coarse, const GridMeasure& ref) {
  const auto xs = coarse.atoms();
  const double h = coarse.size() > 1 ? (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1) : 1.0;
  const double last = static_cast<double>(xs.size() - 1);
  std::vector<double> binned(xs.size(), 0.0);
  double lost = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double t = (ref.atoms()[i] - xs.front()) / h;
    const double w = ref.weights()[i];
    if (t < -1e-9 || t > last + 1e-9) {
      lost += w;
      continue;
    }
    // linear split between the bracketing lattice atoms
    const double lo = std::clamp(std::floor(t), 0.0, last);
    const double frac = std::clamp(t - lo, 0.0, 1.0);
    const auto k = static_cast<std::size_t>(lo);
    binned[k] += w * (1.0 - frac);
    if (frac > 0.0) binned[k + 1] += w * frac;
  }
  double acc = lost;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += std::abs(binned[i] - coarse.weights()[i]);
  return 0.5 * acc;
}

JointTable joint_covariant_distribution(const MixedState& tau, const MixedState& s, LatticeSpec lattice) {
  require(tau.grid().same_as(s.grid()), ErrorKind::Domain, "tau and the state live on different grids");
  require(tau.components().size() <= kMaxTauComponents, ErrorKind::Domain,
          "tau may have at most 16 mixture components");
  require(lattice.q_stride >= 1 && lattice.p_stride >= 1, ErrorKind::Domain, "lattice strides must be positive");
  const Grid& g = s.grid();
  const std::size_t n = g.size;
  require(n % lattice.q_stride == 0 && n % lattice.p_stride == 0, ErrorKind::Domain,
          "lattice strides must divide the grid size");
  const std::size_t nq = n / lattice.q_stride;
  const std::size_t np = n / lattice.p_stride;
  require(nq * np <= kJointCellCap, ErrorKind::Resource, "phase-space lattice exceeds the cell cap");

  JointTable table;
  table.q_atoms.resize(nq);
  table.p_atoms.resize(np);
  const long half = static_cast<long>(n / 2);
  for (std::size_t i = 0; i < nq; ++i)
    table.q_atoms[i] = static_cast<double>(static_cast<long>(i * lattice.q_stride) - half) * g.dx;
  for (std::size_t j = 0; j < np; ++j) table.p_atoms[j] = g.p(j * lattice.p_stride);
  table.weights.assign(nq * np, 0.0);

  // |<psi, W(q,p) phi>|^2 / (2 pi hbar) dq dp; for fixed q the p dependence is
  // one DFT of conj(psi_n) phi_{n-m}.
  const double dq = g.dx * static_cast<double>(lattice.q_stride);
  const double dp = g.dp() * static_cast<double>(lattice.p_stride);
  const double cell = g.dx * g.dx * dq * dp / (2.0 * std::numbers::pi * g.hbar);
  std::vector<cplx> buf(n);
  for (const auto& sc : s.components()) {
    const auto psi = sc.wf.amplitudes();
    for (const auto& tc : tau.components()) {
      const auto phi = tc.wf.amplitudes();
      const double w = sc.weight * tc.weight * cell;
      for (std::size_t i = 0; i < nq; ++i) {
        const long m = static_cast<long>(i * lattice.q_stride) - half;
        bool any = false;
        for (long k = 0; k < static_cast<long>(n); ++k) {
          const long src = k - m;
          if (src < 0 || src >= static_cast<long>(n)) {
            buf[static_cast<std::size_t>(k)] = 0.0;
          } else {
            buf[static_cast<std::size_t>(k)] = std::conj(psi[static_cast<std::size_t>(k)]) * phi[static_cast<std::size_t>(src)];
            any = any || buf[static_cast<std::size_t>(k)] != cplx(0.0);
          }
        }
        if (!any) continue;
        dft(buf, true);  // sum_n f_n exp(+2 pi i k n / N)
        for (std::size_t j = 0; j < np; ++j) {
          const std::size_t kc = j * lattice.p_stride;  // centered index
          const long kk = static_cast<long>(kc) - half;
          const std::size_t nat = static_cast<std::size_t>(kk < 0 ? kk + static_cast<long>(n) : kk);
          table.weights[i * np + j] += w * std::norm(buf[nat]);
        }
      }
    }
  }

  const GridMeasure q_exact = distribution(Observable::covariant_marginal(tau, Axis::Position), s);
  const GridMeasure p_exact = distribution(Observable::covariant_marginal(tau, Axis::Momentum), s);
  table.q_marginal_tv = binned_total_variation(table.q_marginal(), q_exact);
  table.p_marginal_tv = binned_total_variation(table.p_marginal(), p_exact);
  require(table.q_marginal_tv <= 1e-2 && table.p_marginal_tv <= 1e-2, ErrorKind::Accuracy,
          "phase-space lattice too coarse: marginal mismatch " +
              std::to_string(std::max(table.q_marginal_tv, table.p_marginal_tv)));
  return table;
}

// ---------------------------------------------------------------------------
// Moment operators

MomentStats moment_stats(const Observable& obs, const MixedState& s) {
  const Axis axis = obs.axis();
  double m1 = 0.0, m2 = 0.0;
  switch (obs.kind()) {
    case Observable::Kind::SharpQ:
    case Observable::Kind::SharpP: break;
    case Observable::Kind::SmearedQ:
    case Observable::Kind::SmearedP:
    case Observable::Kind::CovariantMarginal:
      if (obs.kind() == Observable::Kind::CovariantMarginal)
        require(obs.tau().grid().same_as(s.grid()), ErrorKind::Domain, "tau and the state live on different grids");
      m1 = moment(obs.noise(), 1);
      m2 = moment(obs.noise(), 2);
      break;
    default:
      fail(ErrorKind::Domain, "moment operators are only available for sharp, smeared and covariant observables");
  }
  const GridMeasure sharp = axis == Axis::Position ? position_distribution(s) : momentum_distribution(s);
  const double a1 = moment(sharp, 1);
  const double a2 = moment(sharp, 2);
  MomentStats out;
  out.sharp_mean = a1;
  out.first = a1 + m1;                          // C[x] = A + mu[x]
  out.first_sq = a2 + 2.0 * m1 * a1 + m1 * m1;  // <(A + mu[x])^2>
  out.second = a2 + 2.0 * m1 * a1 + m2;         // C[x^2] = A^2 + 2 mu[x] A + mu[x^2]
  return out;
}

}  // namespace qmeas
