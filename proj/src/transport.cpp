#include "qmeas/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>

#include "qmeas/errors.hpp"

namespace qmeas {

namespace {

double cost_fn(double x, double y, double alpha) {
  const double d = std::abs(x - y);
  if (alpha == 1.0) return d;
  if (alpha == 2.0) return d * d;
  return std::pow(d, alpha);
}

void check_alpha(double alpha) {
  require(alpha >= 1.0 && std::isfinite(alpha), ErrorKind::Domain,
          "transport exponent must satisfy 1 <= alpha < infinity");
}

// Cells of the monotone coupling: consecutive pieces of [0, 1] on which both
// quantile functions are constant. Mass below this is treated as roundoff.
constexpr double kCellMassFloor = 1e-14;

template <typename Visit>
void for_each_quantile_cell(const GridMeasure& m1, const GridMeasure& m2, Visit&& visit) {
  const auto x = m1.atoms();
  const auto wx = m1.weights();
  const auto y = m2.atoms();
  const auto wy = m2.weights();
  std::size_t i = 0, j = 0;
  double cum_x = wx[0], cum_y = wy[0];
  double level = 0.0;
  while (i < x.size() && j < y.size()) {
    const double next = std::min(cum_x, cum_y);
    const double mass = next - level;
    if (mass > 0.0) visit(i, j, mass);
    level = std::max(level, next);
    const bool adv_x = cum_x <= next + 1e-15;
    const bool adv_y = cum_y <= next + 1e-15;
    if (adv_x && ++i < x.size()) cum_x += wx[i];
    if (adv_y && ++j < y.size()) cum_y += wy[j];
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Coupling

double Coupling::marginal_error(const GridMeasure& rows, const GridMeasure& cols) const {
  const std::size_t n = row_atoms.size(), m = col_atoms.size();
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      s += at(i, j);
      err = std::max(err, -at(i, j));
    }
    err = std::max(err, std::abs(s - rows.weights()[i]));
  }
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += at(i, j);
    err = std::max(err, std::abs(s - cols.weights()[j]));
  }
  return err;
}

double Coupling::cost(double alpha) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < row_atoms.size(); ++i)
    for (std::size_t j = 0; j < col_atoms.size(); ++j)
      acc += at(i, j) * cost_fn(row_atoms[i], col_atoms[j], alpha);
  return acc;
}

// ---------------------------------------------------------------------------
// Quantile coupling

double wasserstein(const GridMeasure& m1, const GridMeasure& m2, double alpha) {
  check_alpha(alpha);
  const auto x = m1.atoms();
  const auto y = m2.atoms();
  double acc = 0.0;
  for_each_quantile_cell(m1, m2, [&](std::size_t i, std::size_t j, double mass) {
    acc += mass * cost_fn(x[i], y[j], alpha);
  });
  return std::pow(acc, 1.0 / alpha);
}

double wasserstein_inf(const GridMeasure& m1, const GridMeasure& m2) {
  const auto x = m1.atoms();
  const auto y = m2.atoms();
  double worst = 0.0;
  for_each_quantile_cell(m1, m2, [&](std::size_t i, std::size_t j, double mass) {
    if (mass > kCellMassFloor) worst = std::max(worst, std::abs(x[i] - y[j]));
  });
  return worst;
}

Coupling quantile_coupling(const GridMeasure& m1, const GridMeasure& m2) {
  Coupling c;
  c.row_atoms.assign(m1.atoms().begin(), m1.atoms().end());
  c.col_atoms.assign(m2.atoms().begin(), m2.atoms().end());
  c.joint.assign(m1.size() * m2.size(), 0.0);
  for_each_quantile_cell(m1, m2, [&](std::size_t i, std::size_t j, double mass) {
    c.joint[i * m2.size() + j] += mass;
  });
  return c;
}

// ---------------------------------------------------------------------------
// Transportation simplex

namespace {

class TransportSimplex {
 public:
  TransportSimplex(const GridMeasure& m1, const GridMeasure& m2, double alpha)
      : n_(m1.size()), m_(m2.size()), cost_(n_ * m_), flow_(n_ * m_, 0.0), basic_(n_ * m_, false) {
    double max_cost = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < m_; ++j) {
        cost_[i * m_ + j] = cost_fn(m1.atoms()[i], m2.atoms()[j], alpha);
        max_cost = std::max(max_cost, cost_[i * m_ + j]);
      }
    tol_ = 1e-12 * std::max(1.0, max_cost);
    north_west_start(m1.weights(), m2.weights());
  }

  std::size_t solve() {
    const std::size_t max_pivots = 50 * (n_ + m_) * (n_ + m_) + 1000;
    std::size_t pivots = 0;
    for (;;) {
      compute_potentials();
      const auto entering = bland_entering();
      if (!entering) break;
      pivot(*entering);
      require(++pivots <= max_pivots, ErrorKind::Internal, "transportation simplex did not terminate");
    }
    return pivots;
  }

  const std::vector<double>& flow() const { return flow_; }
  const std::vector<double>& row_potential() const { return u_; }
  const std::vector<double>& col_potential() const { return v_; }

 private:
  // Staircase path from (0,0) to (n-1,m-1): always n+m-1 basic cells forming
  // a spanning tree, zero-valued cells included.
  void north_west_start(std::span<const double> supply_in, std::span<const double> demand_in) {
    std::vector<double> supply(supply_in.begin(), supply_in.end());
    std::vector<double> demand(demand_in.begin(), demand_in.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      const std::size_t cell = i * m_ + j;
      const double x = (i == n_ - 1 && j == m_ - 1) ? std::max(0.0, std::min(supply[i], demand[j]))
                                                    : std::min(supply[i], demand[j]);
      flow_[cell] = std::max(0.0, x);
      basic_[cell] = true;
      basis_.push_back(cell);
      supply[i] -= x;
      demand[j] -= x;
      if (i == n_ - 1 && j == m_ - 1) break;
      if (i == n_ - 1) {
        ++j;
      } else if (j == m_ - 1) {
        ++i;
      } else if (supply[i] <= demand[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  // Tree nodes: rows 0..n-1, columns n..n+m-1.
  void build_adjacency() {
    adjacency_.assign(n_ + m_, {});
    for (std::size_t cell : basis_) {
      const std::size_t i = cell / m_, j = cell % m_;
      adjacency_[i].push_back(cell);
      adjacency_[n_ + j].push_back(cell);
    }
  }

  std::size_t other_end(std::size_t node, std::size_t cell) const {
    const std::size_t i = cell / m_, j = cell % m_;
    return node < n_ ? n_ + j : i;
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(n_, 0.0);
    v_.assign(m_, 0.0);
    std::vector<bool> seen(n_ + m_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t cell : adjacency_[node]) {
        const std::size_t next = other_end(node, cell);
        if (seen[next]) continue;
        seen[next] = true;
        const std::size_t i = cell / m_, j = cell % m_;
        if (next < n_) {
          u_[i] = cost_[cell] - v_[j];
        } else {
          v_[j] = cost_[cell] - u_[i];
        }
        stack.push_back(next);
      }
    }
    for (bool s : seen) require(s, ErrorKind::Internal, "transportation basis is not a spanning tree");
  }

  std::optional<std::size_t> bland_entering() const {
    for (std::size_t cell = 0; cell < n_ * m_; ++cell) {
      if (basic_[cell]) continue;
      const double reduced = cost_[cell] - u_[cell / m_] - v_[cell % m_];
      if (reduced < -tol_) return cell;
    }
    return std::nullopt;
  }

  // Tree path from row node `from` to column node `to`, as a list of cells.
  std::vector<std::size_t> tree_path(std::size_t from, std::size_t to) const {
    std::vector<std::size_t> parent_cell(n_ + m_, SIZE_MAX);
    std::vector<bool> seen(n_ + m_, false);
    std::vector<std::size_t> queue{from};
    seen[from] = true;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t node = queue[head];
      if (node == to) break;
      for (std::size_t cell : adjacency_[node]) {
        const std::size_t next = other_end(node, cell);
        if (seen[next]) continue;
        seen[next] = true;
        parent_cell[next] = cell;
        queue.push_back(next);
      }
    }
    std::vector<std::size_t> path;
    for (std::size_t node = to; node != from;) {
      const std::size_t cell = parent_cell[node];
      require(cell != SIZE_MAX, ErrorKind::Internal, "no tree path for entering cell");
      path.push_back(cell);
      node = other_end(node, cell);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  void pivot(std::size_t entering) {
    const std::size_t i = entering / m_, j = entering % m_;
    // Cells along the path alternate -, +, -, ... starting at row i.
    const auto path = tree_path(i, n_ + j);
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < path.size(); k += 2) theta = std::min(theta, flow_[path[k]]);
    std::size_t leaving = SIZE_MAX;
    for (std::size_t k = 0; k < path.size(); k += 2)
      if (flow_[path[k]] == theta) leaving = std::min(leaving, path[k]);

    for (std::size_t k = 0; k < path.size(); ++k) {
      if (k % 2 == 0) {
        flow_[path[k]] -= theta;
      } else {
        flow_[path[k]] += theta;
      }
    }
    flow_[leaving] = 0.0;
    flow_[entering] += theta;
    basic_[leaving] = false;
    basic_[entering] = true;
    std::replace(basis_.begin(), basis_.end(), leaving, entering);
  }

  std::size_t n_, m_;
  std::vector<double> cost_;
  std::vector<double> flow_;
  std::vector<bool> basic_;
  std::vector<std::size_t> basis_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> u_, v_;
  double tol_ = 0.0;
};

}  // namespace

LpSolution optimal_coupling_lp(const GridMeasure& m1, const GridMeasure& m2, double alpha) {
  check_alpha(alpha);
  require(m1.size() * m2.size() <= kLpCellCap, ErrorKind::Resource,
          "transportation problem exceeds the cell cap");
  TransportSimplex simplex(m1, m2, alpha);
  LpSolution out;
  out.pivots = simplex.solve();
  out.coupling.row_atoms.assign(m1.atoms().begin(), m1.atoms().end());
  out.coupling.col_atoms.assign(m2.atoms().begin(), m2.atoms().end());
  out.coupling.joint = simplex.flow();
  out.cost = out.coupling.cost(alpha);
  out.dual.alpha = alpha;
  out.dual.psi = simplex.row_potential();
  for (double& p : out.dual.psi) p = -p;
  out.dual.phi = simplex.col_potential();
  return out;
}

// ---------------------------------------------------------------------------
// Kantorovich duality

std::vector<double> c_transform(std::span<const double> x_atoms, std::span<const double> psi,
                                std::span<const double> y_atoms, double alpha) {
  check_alpha(alpha);
  require(x_atoms.size() == psi.size(), ErrorKind::Domain, "potential length mismatch");
  std::vector<double> phi(y_atoms.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < y_atoms.size(); ++j)
    for (std::size_t i = 0; i < x_atoms.size(); ++i)
      phi[j] = std::min(phi[j], psi[i] + cost_fn(x_atoms[i], y_atoms[j], alpha));
  return phi;
}

std::vector<double> c_transform_reverse(std::span<const double> y_atoms, std::span<const double> phi,
                                        std::span<const double> x_atoms, double alpha) {
  check_alpha(alpha);
  require(y_atoms.size() == phi.size(), ErrorKind::Domain, "potential length mismatch");
  std::vector<double> psi(x_atoms.size(), -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < x_atoms.size(); ++i)
    for (std::size_t j = 0; j < y_atoms.size(); ++j)
      psi[i] = std::max(psi[i], phi[j] - cost_fn(x_atoms[i], y_atoms[j], alpha));
  return psi;
}

double dual_violation(const GridMeasure& m1, const GridMeasure& m2, const DualPair& pair) {
  require(pair.psi.size() == m1.size() && pair.phi.size() == m2.size(), ErrorKind::Domain,
          "dual pair does not match the measures");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m1.size(); ++i)
    for (std::size_t j = 0; j < m2.size(); ++j)
      worst = std::max(worst, pair.phi[j] - pair.psi[i] - cost_fn(m1.atoms()[i], m2.atoms()[j], pair.alpha));
  return worst;
}

double dual_value(const GridMeasure& m1, const GridMeasure& m2, const DualPair& pair) {
  check_alpha(pair.alpha);
  require(dual_violation(m1, m2, pair) <= 1e-9, ErrorKind::Domain,
          "dual pair violates phi(y) - psi(x) <= |x - y|^alpha");
  double acc = 0.0;
  for (std::size_t j = 0; j < m2.size(); ++j) acc += m2.weights()[j] * pair.phi[j];
  for (std::size_t i = 0; i < m1.size(); ++i) acc -= m1.weights()[i] * pair.psi[i];
  return acc;
}

DualAscentResult dual_ascent(const GridMeasure& m1, const GridMeasure& m2, DualPair start,
                             std::size_t max_rounds) {
  check_alpha(start.alpha);
  require(start.psi.size() == m1.size(), ErrorKind::Domain, "starting potential length mismatch");
  DualAscentResult out;
  out.pair = std::move(start);
  out.pair.phi = c_transform(m1.atoms(), out.pair.psi, m2.atoms(), out.pair.alpha);
  out.value = dual_value(m1, m2, out.pair);
  while (out.rounds < max_rounds) {
    DualPair next;
    next.alpha = out.pair.alpha;
    next.psi = c_transform_reverse(m2.atoms(), out.pair.phi, m1.atoms(), next.alpha);
    next.phi = c_transform(m1.atoms(), next.psi, m2.atoms(), next.alpha);
    const double value = dual_value(m1, m2, next);
    ++out.rounds;
    const double gain = value - out.value;
    if (gain > 0.0) {
      out.pair = std::move(next);
      out.value = value;
    }
    if (gain < 1e-10) break;
  }
  return out;
}

DualAscentResult dual_ascent_from_lp(const GridMeasure& m1, const GridMeasure& m2, double alpha) {
  auto lp = optimal_coupling_lp(m1, m2, alpha);
  return dual_ascent(m1, m2, std::move(lp.dual));
}

// ---------------------------------------------------------------------------
// Lipschitz witnesses

double PiecewiseLinear::operator()(double x) const {
  if (x <= knots.front()) return values.front();
  if (x >= knots.back()) return values.back();
  const auto k = static_cast<std::size_t>(std::upper_bound(knots.begin(), knots.end(), x) - knots.begin()) - 1;
  const double t = (x - knots[k]) / (knots[k + 1] - knots[k]);
  return values[k] + t * (values[k + 1] - values[k]);
}

double PiecewiseLinear::lipschitz_constant() const {
  double l = 0.0;
  for (std::size_t k = 0; k + 1 < knots.size(); ++k)
    l = std::max(l, std::abs(values[k + 1] - values[k]) / (knots[k + 1] - knots[k]));
  return l;
}

double integrate(const PiecewiseLinear& h, const GridMeasure& m) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) acc += m.weights()[i] * h(m.atoms()[i]);
  return acc;
}

PiecewiseLinear lipschitz_witness(const GridMeasure& m1, const GridMeasure& m2) {
  const auto lp = optimal_coupling_lp(m1, m2, 1.0);
  std::vector<double> knots(m1.atoms().begin(), m1.atoms().end());
  knots.insert(knots.end(), m2.atoms().begin(), m2.atoms().end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
  PiecewiseLinear h;
  h.values = c_transform(m1.atoms(), lp.dual.psi, knots, 1.0);
  h.knots = std::move(knots);
  if (h.knots.size() == 1) {
    h.knots.push_back(h.knots.front() + 1.0);
    h.values.push_back(h.values.front());
  }
  return h;
}

double witness_gap(const PiecewiseLinear& h, const GridMeasure& m1, const GridMeasure& m2) {
  return std::abs(integrate(h, m1) - integrate(h, m2));
}

PiecewiseLinear tent_function(double peak, double height) {
  require(height > 0.0, ErrorKind::Domain, "tent height must be positive");
  return PiecewiseLinear{{peak - height, peak, peak + height}, {0.0, height, 0.0}};
}

void save_coupling_csv(const Coupling& c, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out.precision(17);
  out << "i,j,xi,yj,w\n";
  for (std::size_t i = 0; i < c.row_atoms.size(); ++i)
    for (std::size_t j = 0; j < c.col_atoms.size(); ++j)
      if (c.at(i, j) > 0.0)
        out << i << ',' << j << ',' << c.row_atoms[i] << ',' << c.col_atoms[j] << ',' << c.at(i, j) << '\n';
}

}  // namespace qmeas
