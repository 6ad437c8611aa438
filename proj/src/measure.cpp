#include "qmeas/measure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "qmeas/errors.hpp"

namespace qmeas {

namespace {

double power_abs(double d, double alpha) {
  d = std::abs(d);
  if (alpha == 1.0) return d;
  if (alpha == 2.0) return d * d;
  return std::pow(d, alpha);
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

}  // namespace

Interval::Interval(double c, double w) : center(c), width(w) {
  require(w >= 0.0 && std::isfinite(w) && std::isfinite(c), ErrorKind::Domain,
          "interval width must be finite and nonnegative");
}

// ---------------------------------------------------------------------------
// GridMeasure

GridMeasure::GridMeasure(std::vector<double> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  require(!atoms_.empty(), ErrorKind::Domain, "measure needs at least one atom");
  require(atoms_.size() == weights_.size(), ErrorKind::Domain,
          "atom and weight counts differ");
  require(strictly_increasing(atoms_), ErrorKind::Domain,
          "atoms must be strictly increasing");
  double total = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    require(std::isfinite(atoms_[i]), ErrorKind::Domain, "atoms must be finite");
    require(weights_[i] >= 0.0 && std::isfinite(weights_[i]), ErrorKind::Domain,
            "weights must be finite and nonnegative");
    total += weights_[i];
  }
  require(std::abs(total - 1.0) <= kMassTolerance, ErrorKind::Domain,
          "weights must sum to one (got " + std::to_string(total) + ")");
}

GridMeasure GridMeasure::normalized(std::vector<double> atoms, std::vector<double> weights) {
  require(!atoms.empty(), ErrorKind::Domain, "measure needs at least one atom");
  require(atoms.size() == weights.size(), ErrorKind::Domain, "atom and weight counts differ");

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  GridMeasure out;
  double total = 0.0;
  for (std::size_t idx : order) {
    const double x = atoms[idx];
    const double w = weights[idx];
    require(std::isfinite(x), ErrorKind::Domain, "atoms must be finite");
    require(w >= 0.0 && std::isfinite(w), ErrorKind::Domain,
            "weights must be finite and nonnegative");
    total += w;
    if (!out.atoms_.empty() && out.atoms_.back() == x) {
      out.weights_.back() += w;
    } else {
      out.atoms_.push_back(x);
      out.weights_.push_back(w);
    }
  }
  require(total > 0.0, ErrorKind::Domain, "measure has zero total mass");
  for (double& w : out.weights_) w /= total;
  return out;
}

GridMeasure GridMeasure::point(double at) { return GridMeasure({at}, {1.0}); }

GridMeasure GridMeasure::uniform(double a, double b, std::size_t n) {
  require(n >= 1, ErrorKind::Domain, "uniform measure needs at least one atom");
  if (n == 1) return point(a);
  require(b > a, ErrorKind::Domain, "uniform measure needs a < b");
  std::vector<double> xs(n), ws(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return normalized(std::move(xs), std::move(ws));
}

GridMeasure GridMeasure::gaussian(double mean, double sd, std::size_t n, double extent) {
  require(sd >= 0.0, ErrorKind::Domain, "standard deviation must be nonnegative");
  if (sd == 0.0 || n == 1) return point(mean);
  require(n >= 2 && extent > 0.0, ErrorKind::Domain, "gaussian grid needs n >= 2, extent > 0");
  std::vector<double> xs(n), ws(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    xs[i] = mean + extent * u;
    const double z = (xs[i] - mean) / sd;
    ws[i] = std::exp(-0.5 * z * z);
  }
  return normalized(std::move(xs), std::move(ws));
}

double GridMeasure::spacing() const {
  if (atoms_.size() < 2) return 0.0;
  double h = atoms_[1] - atoms_[0];
  for (std::size_t i = 2; i < atoms_.size(); ++i) h = std::min(h, atoms_[i] - atoms_[i - 1]);
  return h;
}

// ---------------------------------------------------------------------------
// RealMap

RealMap::RealMap(Kind kind, std::function<double(double)> fn, double bound, std::string label)
    : kind_(kind), fn_(std::move(fn)), bound_(bound), label_(std::move(label)) {}

RealMap RealMap::table(std::vector<double> xs, std::vector<double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, ErrorKind::Domain,
          "map table needs at least two breakpoints of matching length");
  require(strictly_increasing(xs), ErrorKind::Domain, "map table abscissae must increase");
  bool up = true, down = true;
  for (std::size_t i = 1; i < ys.size(); ++i) {
    up = up && ys[i] > ys[i - 1];
    down = down && ys[i] < ys[i - 1];
  }
  require(up || down, ErrorKind::Domain, "map table is not strictly monotone");
  auto fn = [xs = std::move(xs), ys = std::move(ys)](double x) {
    const std::size_t n = xs.size();
    std::size_t k;
    if (x <= xs.front()) {
      k = 0;
    } else if (x >= xs.back()) {
      k = n - 2;
    } else {
      k = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
    }
    const double slope = (ys[k + 1] - ys[k]) / (xs[k + 1] - xs[k]);
    return ys[k] + slope * (x - xs[k]);
  };
  return RealMap(Kind::Table, std::move(fn), 0.0, "table");
}

RealMap RealMap::identity_plus(std::function<double(double)> g, double g_sup, std::string label) {
  require(g_sup >= 0.0 && std::isfinite(g_sup), ErrorKind::Domain,
          "perturbation bound must be finite and nonnegative");
  auto fn = [g = std::move(g)](double x) { return x + g(x); };
  return RealMap(Kind::Perturbation, std::move(fn), g_sup, std::move(label));
}

RealMap RealMap::bounded(std::function<double(double)> f, double range_bound, std::string label) {
  require(range_bound >= 0.0 && std::isfinite(range_bound), ErrorKind::Domain,
          "range bound must be finite and nonnegative");
  return RealMap(Kind::Bounded, std::move(f), range_bound, std::move(label));
}

RealMap RealMap::identity() {
  return RealMap(Kind::Perturbation, [](double x) { return x; }, 0.0, "identity");
}

// ---------------------------------------------------------------------------
// Scalar functionals

double cdf(const GridMeasure& m, double x) {
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  const auto end = static_cast<std::size_t>(std::upper_bound(atoms.begin(), atoms.end(), x) - atoms.begin());
  double acc = 0.0;
  for (std::size_t i = 0; i < end; ++i) acc += weights[i];
  return std::min(acc, 1.0);
}

double quantile(const GridMeasure& m, double t) {
  require(t > 0.0 && t <= 1.0, ErrorKind::Domain, "quantile level must lie in (0, 1]");
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    acc += weights[i];
    if (acc >= t - 1e-14) return atoms[i];
  }
  return atoms.back();
}

double moment(const GridMeasure& m, int k) {
  require(k >= 1, ErrorKind::Domain, "moment order must be positive");
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    double p = 1.0;
    for (int j = 0; j < k; ++j) p *= atoms[i];
    acc += weights[i] * p;
  }
  return acc;
}

double absolute_moment(const GridMeasure& m, double p) {
  require(p > 0.0, ErrorKind::Domain, "absolute moment order must be positive");
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) acc += weights[i] * power_abs(atoms[i], p);
  return acc;
}

double mean(const GridMeasure& m) { return moment(m, 1); }

double alpha_deviation(const GridMeasure& m, double alpha) {
  require(alpha >= 1.0 && std::isfinite(alpha), ErrorKind::Domain,
          "alpha-deviation needs 1 <= alpha < infinity");
  if (m.is_point()) return 0.0;
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  auto objective = [&](double y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) acc += weights[i] * power_abs(atoms[i] - y, alpha);
    return acc;
  };

  // Golden-section search; the objective is convex in y for alpha >= 1.
  constexpr double kInvPhi = 0.6180339887498949;
  constexpr double kTol = 1e-10;
  double lo = m.min_atom(), hi = m.max_atom();
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = objective(c), fd = objective(d);
  while (hi - lo > kTol) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = objective(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = objective(d);
    }
  }
  const double best = std::min({fc, fd, objective(0.5 * (lo + hi))});
  return std::pow(std::max(best, 0.0), 1.0 / alpha);
}

double std_deviation(const GridMeasure& m) {
  const double mu = mean(m);
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  double var = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double d = atoms[i] - mu;
    var += weights[i] * d * d;
  }
  return std::sqrt(var);
}

double overall_width(const GridMeasure& m, double eps) {
  require(eps >= 0.0 && eps < 1.0, ErrorKind::Domain, "overall width needs eps in [0, 1)");
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  const double target = 1.0 - eps - kMassTolerance;
  const std::size_t n = atoms.size();

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + weights[i];

  // Two-pointer sweep: an optimal interval has atoms at both ends.
  double best = atoms.back() - atoms.front();
  std::size_t j = 0;  // window covers atoms [i, j)
  for (std::size_t i = 0; i < n; ++i) {
    j = std::max(j, i);
    while (j < n && prefix[j] - prefix[i] < target) ++j;
    if (prefix[j] - prefix[i] < target) break;
    if (j > i) best = std::min(best, atoms[j - 1] - atoms[i]);
  }
  return best;
}

double interval_mass(const GridMeasure& m, const Interval& j) {
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  const auto first = static_cast<std::size_t>(std::lower_bound(atoms.begin(), atoms.end(), j.lo()) - atoms.begin());
  double acc = 0.0;
  for (std::size_t i = first; i < atoms.size() && atoms[i] <= j.hi(); ++i) acc += weights[i];
  return acc;
}

double centered_width(const GridMeasure& m, double center, double eps) {
  require(eps >= 0.0 && eps < 1.0, ErrorKind::Domain, "centered width needs eps in [0, 1)");
  const auto atoms = m.atoms();
  const auto weights = m.weights();
  const double target = 1.0 - eps - kMassTolerance;

  // Walk outward from the center, always taking the nearer of the two frontier
  // atoms; the window reaches the target at the first such atom.
  auto right = static_cast<std::ptrdiff_t>(std::lower_bound(atoms.begin(), atoms.end(), center) - atoms.begin());
  auto left = right - 1;
  const auto n = static_cast<std::ptrdiff_t>(atoms.size());
  double acc = 0.0;
  double radius = 0.0;
  while (left >= 0 || right < n) {
    const double dl = left >= 0 ? center - atoms[left] : INFINITY;
    const double dr = right < n ? atoms[right] - center : INFINITY;
    if (dl <= dr) {
      radius = dl;
      acc += weights[left--];
    } else {
      radius = dr;
      acc += weights[right++];
    }
    if (acc >= target) return 2.0 * radius;
  }
  return 2.0 * radius;
}

// ---------------------------------------------------------------------------
// Measure transformations

GridMeasure translate(const GridMeasure& m, double shift) {
  std::vector<double> xs(m.atoms().begin(), m.atoms().end());
  for (double& x : xs) x += shift;
  std::vector<double> ws(m.weights().begin(), m.weights().end());
  if (strictly_increasing(xs)) return GridMeasure(std::move(xs), std::move(ws));
  return GridMeasure::normalized(std::move(xs), std::move(ws));
}

GridMeasure pushforward(const GridMeasure& m, const RealMap& f) {
  std::vector<double> xs(m.atoms().size());
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = f(m.atoms()[i]);
  std::vector<double> ws(m.weights().begin(), m.weights().end());
  return GridMeasure::normalized(std::move(xs), std::move(ws));
}

GridMeasure convolve(const GridMeasure& a, const GridMeasure& b, std::size_t max_atoms) {
  if (a.is_point()) return translate(b, a.min_atom());
  if (b.is_point()) return translate(a, b.min_atom());

  const double h = std::min(a.spacing(), b.spacing());
  const double origin = a.min_atom() + b.min_atom();
  const double span = a.max_atom() + b.max_atom() - origin;
  const double cells = std::ceil(span / h - 1e-9);
  require(cells + 2.0 <= static_cast<double>(max_atoms), ErrorKind::Resource,
          "convolution output exceeds the atom cap");
  const auto count = static_cast<std::size_t>(cells) + 2;

  std::vector<double> bins(count, 0.0);
  const auto xa = a.atoms();
  const auto wa = a.weights();
  const auto xb = b.atoms();
  const auto wb = b.weights();
  for (std::size_t i = 0; i < xa.size(); ++i) {
    if (wa[i] == 0.0) continue;
    const double base = xa[i] - origin;
    for (std::size_t j = 0; j < xb.size(); ++j) {
      const double w = wa[i] * wb[j];
      if (w == 0.0) continue;
      const double t = (base + xb[j]) / h;
      double k = std::floor(t);
      double frac = t - k;
      if (frac > 1.0 - 1e-9) {
        k += 1.0;
        frac = 0.0;
      }
      const auto idx = static_cast<std::size_t>(k);
      if (frac < 1e-9) {
        bins[idx] += w;
      } else {
        bins[idx] += (1.0 - frac) * w;
        bins[idx + 1] += frac * w;
      }
    }
  }

  std::vector<double> xs, ws;
  xs.reserve(count);
  ws.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (bins[k] <= 0.0) continue;
    xs.push_back(origin + static_cast<double>(k) * h);
    ws.push_back(bins[k]);
  }
  return GridMeasure::normalized(std::move(xs), std::move(ws));
}

double total_variation(const GridMeasure& a, const GridMeasure& b) {
  const auto xa = a.atoms();
  const auto wa = a.weights();
  const auto xb = b.atoms();
  const auto wb = b.weights();
  std::size_t i = 0, j = 0;
  double acc = 0.0;
  while (i < xa.size() || j < xb.size()) {
    if (j == xb.size() || (i < xa.size() && xa[i] < xb[j])) {
      acc += wa[i++];
    } else if (i == xa.size() || xb[j] < xa[i]) {
      acc += wb[j++];
    } else {
      acc += std::abs(wa[i++] - wb[j++]);
    }
  }
  return 0.5 * acc;
}

// ---------------------------------------------------------------------------
// CSV

GridMeasure load_measure_csv(const std::string& path, bool* renormalized) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open measure file " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::Schema, "empty measure file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == "x,w", ErrorKind::Schema, "measure file must start with header x,w: " + path);

  std::vector<double> xs, ws;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string xf, wf;
    require(std::getline(fields, xf, ',') && std::getline(fields, wf, ','), ErrorKind::Schema,
            path + ":" + std::to_string(row) + ": expected two fields");
    try {
      std::size_t used = 0;
      const double x = std::stod(xf, &used);
      require(used == xf.size(), ErrorKind::Schema, "trailing characters");
      const double w = std::stod(wf, &used);
      require(used == wf.size(), ErrorKind::Schema, "trailing characters");
      xs.push_back(x);
      ws.push_back(w);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Schema, path + ":" + std::to_string(row) + ": not a number");
    }
  }
  require(!xs.empty(), ErrorKind::Schema, "measure file has no rows: " + path);
  require(strictly_increasing(xs), ErrorKind::Schema, "measure rows must be sorted ascending: " + path);
  for (double w : ws) require(w >= 0.0, ErrorKind::Schema, "negative weight in " + path);
  const double total = std::accumulate(ws.begin(), ws.end(), 0.0);
  require(total > 0.0, ErrorKind::Schema, "measure file has zero mass: " + path);
  if (renormalized != nullptr) *renormalized = std::abs(total - 1.0) > 1e-9;
  return GridMeasure::normalized(std::move(xs), std::move(ws));
}

void save_measure_csv(const GridMeasure& m, const std::string& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path);
  out.precision(17);
  out << "x,w\n";
  for (std::size_t i = 0; i < m.size(); ++i) out << m.atoms()[i] << ',' << m.weights()[i] << '\n';
}

}  // namespace qmeas
