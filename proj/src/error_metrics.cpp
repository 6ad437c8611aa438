#include "qmeas/error_metrics.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "qmeas/errors.hpp"
#include "qmeas/transport.hpp"

namespace qmeas {

namespace {

constexpr double kLeakThreshold = 1e-20;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t bits(double v) {
  std::uint64_t b = 0;
  std::memcpy(&b, &v, sizeof b);
  return b;
}

// The lattice a probe lives on: the position grid itself, or the momentum
// lattice dressed up as a grid so the position-space builders can be reused.
Grid axis_grid(const Grid& g, Axis axis) {
  if (axis == Axis::Position) return g;
  return Grid{g.p(0), g.dp(), g.size, g.hbar};
}

double half_extent(const Grid& ag) { return 0.5 * ag.extent(); }
double mid(const Grid& ag) { return ag.x0 + 0.5 * ag.extent(); }

WaveFunction lift(const Grid& g, Axis axis, const WaveFunction& on_axis) {
  if (axis == Axis::Position) return on_axis;
  return from_momentum_amplitudes(g, std::vector<cplx>(on_axis.amplitudes().begin(), on_axis.amplitudes().end()));
}

std::vector<double> default_centers(const Grid& ag) {
  std::vector<double> out;
  const double reach = 0.9 * half_extent(ag);
  for (int k = -4; k <= 4; ++k) {
    const double x = mid(ag) + reach * k / 4.0;
    out.push_back(ag.x(ag.nearest_index(x)));
  }
  return out;
}

double cutoff_or_default(double w_cutoff, const Grid& ag) { return w_cutoff > 0.0 ? w_cutoff : 0.4 * ag.extent(); }

void check_config(const ProbeConfig& cfg) {
  require(cfg.eps > 0.0 && cfg.eps < 1.0, ErrorKind::Domain, "eps must lie in (0, 1)");
  require(cfg.probes_per_center >= 3, ErrorKind::Domain, "probes_per_center must be at least 3");
  require(cfg.bisection_tol > 0.0, ErrorKind::Domain, "bisection_tol must be positive");
  require(cfg.flat_box || cfg.phase_ramped || cfg.random_envelope, ErrorKind::Domain, "no probe kind enabled");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Probes supported on J_{c;w} of the axis lattice: a flat box, boxes with
// phase ramps exp(i pi j (x - c)/w), and random envelopes, taken round-robin.
void base_family(const Grid& ag, double c, double w, const ProbeConfig& cfg, std::vector<Probe>& out) {
  const std::size_t want = cfg.probes_per_center;
  std::size_t made = 0;
  if (cfg.flat_box) {
    out.push_back({"flat/w=" + fmt(w), make_box(ag, c, w, 0.0)});
    ++made;
  }
  const int max_ramp = static_cast<int>(std::floor(w / ag.dx + 1e-9));
  int ramp = 0;  // sequence +1, -1, +2, -2, ...
  std::size_t random_index = 0;
  bool toggle = true;
  while (made < want) {
    const bool ramps_left = cfg.phase_ramped && (ramp / 2 + 1) <= max_ramp;
    if ((toggle || !cfg.random_envelope) && ramps_left) {
      const int j = (ramp / 2 + 1) * (ramp % 2 == 0 ? 1 : -1);
      ++ramp;
      const double p0 = std::numbers::pi * ag.hbar * j / w;
      // shift the phase origin to the box center
      auto box = make_box(ag, c, w, p0);
      std::vector<cplx> a(box.amplitudes().begin(), box.amplitudes().end());
      const cplx rot = std::polar(1.0, -p0 * c / ag.hbar);
      for (auto& z : a) z *= rot;
      out.push_back({"ramp" + std::to_string(j) + "/w=" + fmt(w), WaveFunction::normalized(ag, std::move(a))});
      ++made;
    } else if (cfg.random_envelope) {
      std::uint64_t s = splitmix(cfg.seed ^ splitmix(bits(c) ^ splitmix(bits(w) + random_index)));
      out.push_back({"random" + std::to_string(random_index) + "/w=" + fmt(w),
                     make_random_localized(ag, Interval(c, w), s)});
      ++random_index;
      ++made;
    } else {
      break;
    }
    toggle = !toggle;
  }
}

double window_width(const GridMeasure& m, double center, double eps) { return centered_width(m, center, eps); }

struct Accumulator {
  WidthEstimate est;
  bool first = true;
  bool record = false;

  void offer(double center, const std::string& probe, double width) {
    if (record) est.trace.push_back({center, probe, width});
    if (first || width > est.value) {
      est.value = width;
      est.witness_center = center;
      est.witness_probe = probe;
      first = false;
    }
  }
};

template <typename Measure>
WidthEstimate probe_sup(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg,
                        Measure&& measure) {
  check_config(cfg);
  require(e.is_sharp(), ErrorKind::Domain, "error bars are defined for approximations of a sharp observable");
  require(e1.axis() == e.axis(), ErrorKind::Domain, "approximator and target measure different axes");
  const Grid ag = axis_grid(grid, e.axis());
  const double delta = cfg.delta > 0.0 ? cfg.delta : 4.0 * ag.dx;
  require(delta >= 2.0 * ag.dx * (1.0 - 1e-9), ErrorKind::Domain, "delta must be at least two grid spacings");
  const auto centers = cfg.x_samples.empty() ? default_centers(ag) : cfg.x_samples;

  Accumulator acc;
  acc.record = cfg.record_trace;
  for (double x : centers) {
    for (const auto& probe : make_probes(grid, e.axis(), x, delta, cfg)) {
      const double leak = probe_leak(probe.state, e.axis(), x, delta);
      require(leak <= kLeakThreshold, ErrorKind::Internal, "probe " + probe.id + " leaks outside its interval");
      const GridMeasure out = distribution(e1, MixedState(probe.state));
      acc.offer(x, probe.id, measure(out, x));
    }
  }
  const double cutoff = cutoff_or_default(cfg.w_cutoff, ag);
  acc.est.is_lower_bound = true;
  acc.est.infinite_flag = acc.est.value >= cutoff;
  return acc.est;
}

}  // namespace

std::vector<Probe> make_probes(const Grid& grid, Axis axis, double center, double delta, const ProbeConfig& cfg) {
  check_config(cfg);
  const Grid ag = axis_grid(grid, axis);
  require(delta >= 2.0 * ag.dx * (1.0 - 1e-9), ErrorKind::Domain, "delta must be at least two grid spacings");
  std::vector<Probe> on_axis;
  // Dyadic ladder of sub-intervals: the family for delta contains the family
  // for delta/2, which makes the estimates monotone along dyadic sweeps.
  for (double w = delta; w >= 2.0 * ag.dx * (1.0 - 1e-9); w *= 0.5) {
    base_family(ag, center, w, cfg, on_axis);
    if (w < delta) {
      const double off = 0.5 * (delta - w);
      on_axis.push_back({"flat/w=" + fmt(w) + "@left", make_box(ag, center - off, w)});
      on_axis.push_back({"flat/w=" + fmt(w) + "@right", make_box(ag, center + off, w)});
    }
  }
  std::vector<Probe> out;
  out.reserve(on_axis.size());
  for (auto& p : on_axis) out.push_back({p.id, lift(grid, axis, p.state)});
  return out;
}

double probe_leak(const WaveFunction& probe, Axis axis, double center, double delta) {
  const GridMeasure m = axis == Axis::Position ? position_distribution(probe) : momentum_distribution(probe);
  const double spacing = axis == Axis::Position ? probe.grid().dx : probe.grid().dp();
  const Interval j(center, delta);
  double leak = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!j.contains(m.atoms()[i], 1e-9 * spacing)) leak += m.weights()[i];
  return leak;
}

std::string trace_to_json(const WidthEstimate& est, const std::string& estimator) {
  nlohmann::ordered_json j;
  j["estimator"] = estimator;
  j["value"] = est.value;
  j["bound"] = est.is_closed_form ? "exact" : (est.is_lower_bound ? "lower" : "upper");
  j["infinite"] = est.infinite_flag;
  j["witness"] = {{"center", est.witness_center}, {"probe", est.witness_probe}};
  auto& probes = j["probes"] = nlohmann::ordered_json::array();
  for (const auto& t : est.trace) probes.push_back({{"center", t.center}, {"probe", t.probe}, {"width", t.width}});
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Observable distance

namespace {

double distance(const GridMeasure& a, const GridMeasure& b, double alpha) {
  if (!(alpha > 0.0) || std::isinf(alpha)) return wasserstein_inf(a, b);
  return wasserstein(a, b, alpha);
}

}  // namespace

WidthEstimate observable_distance(const Observable& e, const Observable& f, double alpha,
                                  const std::vector<MixedState>& ensemble, const DistanceScan& scan) {
  require(!ensemble.empty(), ErrorKind::Domain, "observable distance needs a nonempty ensemble");
  require(!(alpha > 0.0) || std::isinf(alpha) || alpha >= 1.0, ErrorKind::Domain, "alpha must be >= 1");
  Accumulator acc;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    acc.offer(0.0, "ensemble#" + std::to_string(i),
              distance(distribution(e, ensemble[i]), distribution(f, ensemble[i]), alpha));

  const Grid& grid = ensemble.front().grid();
  const Axis axis = f.kind() == Observable::Kind::Trivial ? e.axis() : f.axis();
  const Grid ag = axis_grid(grid, axis);
  const double cutoff = cutoff_or_default(scan.w_cutoff, ag);
  double scan_max = 0.0;
  if (scan.enabled) {
    // Point probes walking from the middle toward both edges.
    const std::size_t steps = std::max<std::size_t>(scan.points, 1);
    for (std::size_t k = 0; k <= steps; ++k) {
      for (int side : {1, -1}) {
        if (k == 0 && side < 0) continue;
        const double x = mid(ag) + side * 0.95 * half_extent(ag) * static_cast<double>(k) / static_cast<double>(steps);
        const MixedState probe(lift(grid, axis, make_point(ag, x)));
        const double d = distance(distribution(e, probe), distribution(f, probe), alpha);
        scan_max = std::max(scan_max, d);
        acc.offer(ag.x(ag.nearest_index(x)), "point", d);
      }
    }
  }
  acc.est.is_lower_bound = true;
  acc.est.infinite_flag = scan.enabled && scan_max >= cutoff;
  return acc.est;
}

double delta1_smeared_closed_form(const GridMeasure& mu) { return absolute_moment(mu, 1.0); }

double pushforward_delta1_closed_form(double g_sup) {
  require(g_sup >= 0.0, ErrorKind::Domain, "sup bound must be nonnegative");
  return g_sup;
}

double delta_alpha_smeared_closed_form(const GridMeasure& mu, double alpha) {
  require(alpha >= 1.0, ErrorKind::Domain, "alpha must be >= 1");
  return std::pow(absolute_moment(mu, alpha), 1.0 / alpha);
}

// ---------------------------------------------------------------------------
// Error bars

WidthEstimate error_bar_width(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg) {
  return probe_sup(e1, e, grid, cfg,
                   [&](const GridMeasure& out, double x) { return window_width(out, x, cfg.eps); });
}

WidthEstimate bias_free_error(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg) {
  return probe_sup(e1, e, grid, cfg, [&](const GridMeasure& out, double) { return overall_width(out, cfg.eps); });
}

double bias(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg) {
  const WidthEstimate gross = error_bar_width(e1, e, grid, cfg);
  const WidthEstimate free = bias_free_error(e1, e, grid, cfg);
  require(!gross.infinite_flag && !free.infinite_flag, ErrorKind::Domain, "bias needs finite error bars");
  return gross.value - free.value;
}

WidthEstimate resolution_width(const Observable& e, double eps, const Grid& grid, const ProbeConfig& cfg) {
  require(eps > 0.0 && eps < 1.0, ErrorKind::Domain, "eps must lie in (0, 1)");
  switch (e.kind()) {
    case Observable::Kind::SmearedQ:
    case Observable::Kind::SmearedP:
    case Observable::Kind::CovariantMarginal: {
      WidthEstimate est;
      est.value = overall_width(e.noise(), eps);
      est.is_lower_bound = false;
      est.is_closed_form = true;
      est.witness_probe = "closed-form";
      est.infinite_flag = est.value >= cutoff_or_default(cfg.w_cutoff, axis_grid(grid, e.axis()));
      return est;
    }
    default: return resolution_width_estimate(e, eps, grid, cfg);
  }
}

WidthEstimate resolution_width_estimate(const Observable& e, double eps, const Grid& grid, const ProbeConfig& cfg) {
  require(eps > 0.0 && eps < 1.0, ErrorKind::Domain, "eps must lie in (0, 1)");
  const Axis axis = e.axis();
  const Grid ag = axis_grid(grid, axis);
  const auto centers = cfg.x_samples.empty() ? default_centers(ag) : cfg.x_samples;
  const double cutoff = cutoff_or_default(cfg.w_cutoff, ag);

  // For each x the best state is searched among point states at x + j dx
  // (|j| <= 32, then doubling) and centered boxes of dyadic widths.
  std::vector<long> offsets;
  for (long j = -32; j <= 32; ++j) offsets.push_back(j);
  for (long j = 64; static_cast<double>(j) * ag.dx < 0.5 * cutoff; j *= 2) {
    offsets.push_back(j);
    offsets.push_back(-j);
  }

  Accumulator acc;
  acc.record = cfg.record_trace;
  for (double x : centers) {
    double best = std::numeric_limits<double>::infinity();
    std::string best_id;
    auto consider = [&](const WaveFunction& on_axis, const std::string& id) {
      const GridMeasure out = distribution(e, MixedState(lift(grid, axis, on_axis)));
      const double w = window_width(out, x, eps);
      if (w < best) {
        best = w;
        best_id = id;
      }
    };
    for (long j : offsets) {
      const double at = x + static_cast<double>(j) * ag.dx;
      if (at < ag.x0 || at > ag.x_max()) continue;
      consider(make_point(ag, at), "point" + std::to_string(j));
    }
    for (double w = 2.0 * ag.dx; w <= 0.5 * cutoff; w *= 2.0) {
      const Interval j(x, w);
      if (j.lo() < ag.x0 || j.hi() > ag.x_max()) break;
      consider(make_box(ag, x, w), "flat/w=" + fmt(w));
    }
    acc.offer(x, best_id, best);
  }
  acc.est.is_lower_bound = false;
  acc.est.infinite_flag = acc.est.value >= cutoff;
  return acc.est;
}

// ---------------------------------------------------------------------------
// Noise-based error

double noise_based_error(const Observable& a, const Observable& c, const MixedState& s) {
  require(a.is_sharp(), ErrorKind::Domain, "noise-based error needs a sharp target");
  require(c.axis() == a.axis(), ErrorKind::Domain, "approximator and target measure different axes");
  const MomentStats ms = moment_stats(c, s);
  // tr rho (C[x^2] - C[x]^2) + tr rho (C[x] - A)^2; C[x] - A is a multiple of
  // the identity for every supported variant, so the second term is its square.
  double variance_term = ms.second - ms.first_sq;
  const double scale = std::max(1.0, std::abs(ms.second));
  require(variance_term >= -1e-12 * scale, ErrorKind::Internal, "negative noise variance");
  variance_term = std::max(0.0, variance_term);
  const double offset = ms.first - ms.sharp_mean;
  return std::sqrt(variance_term + offset * offset);
}

WidthEstimate global_noise_error(const Observable& a, const Observable& c, const std::vector<MixedState>& ensemble) {
  require(!ensemble.empty(), ErrorKind::Domain, "global noise error needs a nonempty ensemble");
  Accumulator acc;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    acc.offer(0.0, "ensemble#" + std::to_string(i), noise_based_error(a, c, ensemble[i]));
  acc.est.is_lower_bound = true;
  acc.est.is_closed_form = c.kind() != Observable::Kind::SharpQ && c.kind() != Observable::Kind::SharpP;
  return acc.est;
}

}  // namespace qmeas
