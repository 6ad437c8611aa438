#include "qmeas/bounds_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"

#include "qmeas/errors.hpp"
#include "qmeas/transport.hpp"

namespace qmeas {

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool effectively_point(const GridMeasure& m) { return overall_width(m, 1e-12) == 0.0; }

VerificationReport make_report(std::string relation, double lhs, double rhs, double tol, std::string inputs,
                               const Grid& g) {
  VerificationReport r;
  r.relation = std::move(relation);
  r.lhs = lhs;
  r.rhs = rhs;
  r.tolerance = tol;
  r.inputs = std::move(inputs);
  r.grid = grid_spec(g);
  return r;
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string grid_spec(const Grid& g) {
  std::ostringstream os;
  os.precision(17);
  os << g.x0 << ',' << g.dx << ',' << g.size << ";hbar=" << g.hbar;
  return os.str();
}

void finalize_report(VerificationReport& r) {
  if (r.lhs_infinite) {
    r.slack = std::numeric_limits<double>::infinity();
    r.pass = true;
  } else {
    r.slack = r.lhs - r.rhs;
    r.pass = r.slack >= -r.tolerance;
  }
  if (r.pass) {
    r.verdict = "pass";
  } else {
    r.verdict = r.lower_bound_semantics ? "inconclusive-lower-bound" : "fail";
  }
  r.inputs_hash = fnv1a(r.relation + "|" + r.inputs + "|" + r.grid + "|" + std::to_string(r.seed));
}

// ---------------------------------------------------------------------------
// Constants

double K(double eps1, double eps2) {
  require(eps1 >= 0.0 && eps2 >= 0.0 && eps1 + eps2 < 1.0, ErrorKind::Domain,
          "K needs eps1, eps2 >= 0 and eps1 + eps2 < 1");
  const double r = std::sqrt((1.0 - eps1) * (1.0 - eps2)) - std::sqrt(eps1 * eps2);
  return r * r;
}

double K_tilde(double eps1, double eps2) {
  require(eps1 >= 0.0 && eps2 >= 0.0 && eps1 + eps2 < 1.0, ErrorKind::Domain,
          "K_tilde needs eps1, eps2 >= 0 and eps1 + eps2 < 1");
  const double r = 1.0 - (eps1 + eps2);
  return r * r;
}

double c_alpha_beta_formula(double alpha, double beta, double g) {
  require(alpha >= 1.0 && beta >= 1.0, ErrorKind::Domain, "alpha and beta must be >= 1");
  require(g > 0.0, ErrorKind::Domain, "ground state energy must be positive");
  return std::pow(alpha, 1.0 / beta) * std::pow(beta, 1.0 / alpha) *
         std::pow(g / (alpha + beta), 1.0 / alpha + 1.0 / beta);
}

Grid default_ground_state_grid(double alpha, double beta, std::size_t n) {
  const double nn = static_cast<double>(n);
  if (alpha == beta) return Grid::centered(std::sqrt(2.0 * kPi / nn), n);
  if (alpha < beta) return Grid::centered(24.0 / nn, n);
  return Grid::centered(2.0 * kPi / 24.0, n);  // momentum range +-12 instead
}

GroundStateOptions default_ground_state_options(double alpha, double beta) {
  GroundStateOptions o;
  if (alpha == 1.0 && beta == 1.0) o.boundary_tol = 1e-5;
  return o;
}

ConstantResult c_alpha_beta(double alpha, double beta, const Grid& grid, const GroundStateOptions& opts) {
  GroundState gs = ground_state(alpha, beta, grid, opts);
  const double c = c_alpha_beta_formula(alpha, beta, gs.energy);
  const double g = gs.energy;
  return ConstantResult{g, c, std::move(gs)};
}

ConstantResult c_alpha_beta(double alpha, double beta) {
  return c_alpha_beta(alpha, beta, default_ground_state_grid(alpha, beta), default_ground_state_options(alpha, beta));
}

// ---------------------------------------------------------------------------
// Relations

VerificationReport verify_preparation_ur(const MixedState& s, double alpha, double beta, double c_ab) {
  const Grid& g = s.grid();
  const double lhs = alpha_deviation(position_distribution(s), alpha) * alpha_deviation(momentum_distribution(s), beta);
  const double rhs = c_ab * g.hbar;
  auto r = make_report("preparation-alpha-beta", lhs, rhs, 1e-4 * rhs,
                       "alpha=" + num(alpha) + ",beta=" + num(beta) + ",c=" + num(c_ab), g);
  finalize_report(r);
  return r;
}

VerificationReport verify_overall_width_ur(const MixedState& s, double eps1, double eps2) {
  const Grid& g = s.grid();
  const double k = K(eps1, eps2);
  const double wq = overall_width(position_distribution(s), eps1);
  const double wp = overall_width(momentum_distribution(s), eps2);
  // (wq + dx)(wp + dp) - wq wp, doubled: both widths are resolved to a cell.
  const double tol = 2.0 * (g.dx * wp + g.dp() * wq);
  auto r = make_report("overall-width", wq * wp, 2.0 * kPi * g.hbar * k, tol,
                       "eps1=" + num(eps1) + ",eps2=" + num(eps2) + ",Wq=" + num(wq) + ",Wp=" + num(wp), g);
  finalize_report(r);
  return r;
}

std::vector<VerificationReport> verify_covariant_error_ur(const MixedState& tau, double eps1, double eps2) {
  const Grid& g = tau.grid();
  const double k = K(eps1, eps2);
  const auto [mu, nu] = covariant_marginals(tau);
  const double wq = overall_width(mu, eps1);
  const double wp = overall_width(nu, eps2);
  const double tol = 2.0 * (g.dx * wp + g.dp() * wq);
  const std::string inputs = "eps1=" + num(eps1) + ",eps2=" + num(eps2) + ",W(mu_tau)=" + num(wq) +
                             ",W(nu_tau)=" + num(wp) + ",tau_components=" + std::to_string(tau.components().size());
  std::vector<VerificationReport> out;
  out.push_back(make_report("covariant-bias-free-error", wq * wp, 2.0 * kPi * g.hbar * k, tol, inputs, g));

  const Observable m1 = Observable::covariant_marginal(tau, Axis::Position);
  const Observable m2 = Observable::covariant_marginal(tau, Axis::Momentum);
  const double gq = resolution_width(m1, eps1, g).value;
  const double gp = resolution_width(m2, eps2, g).value;
  out.push_back(make_report("covariant-resolution-width", gq * gp, 2.0 * kPi * g.hbar * k,
                            2.0 * (g.dx * gp + g.dp() * gq), inputs, g));
  for (auto& r : out) finalize_report(r);
  return out;
}

VerificationReport verify_metric_ur_pair(const Observable& m1, const Observable& m2, double alpha, double beta,
                                         const std::vector<MixedState>& ensemble, double c_ab,
                                         bool point_mass_rule) {
  require(!ensemble.empty(), ErrorKind::Domain, "metric relation needs a nonempty ensemble");
  require(m1.axis() == Axis::Position && m2.axis() == Axis::Momentum, ErrorKind::Domain,
          "M1 must approximate Q and M2 must approximate P");
  const Grid& g = ensemble.front().grid();
  const WidthEstimate d1 = observable_distance(m1, Observable::sharp_q(), alpha, ensemble);
  const WidthEstimate d2 = observable_distance(m2, Observable::sharp_p(), beta, ensemble);
  bool inf1 = d1.infinite_flag, inf2 = d2.infinite_flag;
  if (point_mass_rule) {
    // A sharp marginal forces the other distance to be infinite.
    if (m1.kind() == Observable::Kind::CovariantMarginal && effectively_point(m1.noise())) inf2 = true;
    if (m2.kind() == Observable::Kind::CovariantMarginal && effectively_point(m2.noise())) inf1 = true;
  }
  const bool zero1 = d1.value <= 1e-12, zero2 = d2.value <= 1e-12;
  require(!(zero1 && !inf2) && !(zero2 && !inf1), ErrorKind::Domain,
          "zero error on one side is only consistent with an infinite partner");

  const double rhs = c_ab * g.hbar;
  auto r = make_report("metric-error", inf1 || inf2 ? 0.0 : d1.value * d2.value, rhs, 1e-4 * rhs,
                       "alpha=" + num(alpha) + ",beta=" + num(beta) + ",D(M1,Q)=" + (inf1 ? "inf" : num(d1.value)) +
                           ",D(M2,P)=" + (inf2 ? "inf" : num(d2.value)) + ",c=" + num(c_ab) +
                           ",ensemble=" + std::to_string(ensemble.size()),
                       g);
  r.lower_bound_semantics = true;
  r.lhs_infinite = inf1 || inf2;
  if (r.lhs_infinite) r.lhs = std::numeric_limits<double>::infinity();
  finalize_report(r);
  return r;
}

VerificationReport verify_metric_ur(const MixedState& tau, double alpha, double beta,
                                    const std::vector<MixedState>& ensemble, double c_ab) {
  return verify_metric_ur_pair(Observable::covariant_marginal(tau, Axis::Position),
                               Observable::covariant_marginal(tau, Axis::Momentum), alpha, beta, ensemble, c_ab,
                               true);
}

VerificationReport verify_noise_ur(const MixedState& tau) {
  const Grid& g = tau.grid();
  const Observable m1 = Observable::covariant_marginal(tau, Axis::Position);
  const Observable m2 = Observable::covariant_marginal(tau, Axis::Momentum);
  // State independent; tau itself serves as the evaluation state.
  const double eq = noise_based_error(Observable::sharp_q(), m1, tau);
  const double ep = noise_based_error(Observable::sharp_p(), m2, tau);
  const double rhs = 0.5 * g.hbar;
  auto r = make_report("noise-error", eq * ep, rhs, 2e-5 * rhs,
                       "eps_NO(Q)=" + num(eq) + ",eps_NO(P)=" + num(ep), g);
  finalize_report(r);
  return r;
}

std::vector<VerificationReport> verify_connections(const std::vector<ConnectionInstance>& instances,
                                                   const Grid& grid) {
  std::vector<VerificationReport> out;
  for (const auto& inst : instances) {
    require(inst.e.is_sharp(), ErrorKind::Domain, "connection target must be sharp");
    double delta_alpha = 0.0;
    if (!inst.e1.is_sharp()) delta_alpha = delta_alpha_smeared_closed_form(inst.e1.noise(), inst.alpha);
    require(inst.e1.is_sharp() || inst.e1.kind() == Observable::Kind::SmearedQ ||
                inst.e1.kind() == Observable::Kind::SmearedP ||
                inst.e1.kind() == Observable::Kind::CovariantMarginal,
            ErrorKind::Domain, "connection instances must be smeared observables");
    ProbeConfig cfg = inst.cfg;
    cfg.eps = inst.eps;
    const WidthEstimate gross = error_bar_width(inst.e1, inst.e, grid, cfg);
    // state independent for the supported variants
    const double eps_no =
        noise_based_error(inst.e, inst.e1, MixedState(make_gaussian(grid, grid.x0 + 0.5 * grid.extent(), 0.0, 1.0)));
    const double spacing = inst.e.axis() == Axis::Position ? grid.dx : grid.dp();
    const std::string inputs = inst.label + ",eps=" + num(inst.eps) + ",alpha=" + num(inst.alpha) +
                               ",gross=" + num(gross.value) + ",witness=" + gross.witness_probe;

    auto r1 = make_report("errorbar-vs-distance", 2.0 * delta_alpha / std::pow(inst.eps, 1.0 / inst.alpha),
                          gross.value, 4.0 * spacing, inputs + ",Delta=" + num(delta_alpha), grid);
    auto r2 = make_report("errorbar-vs-noise", 2.0 * eps_no * (1.0 + std::sqrt(2.0 / inst.eps)), gross.value,
                          4.0 * spacing, inputs + ",eps_NO=" + num(eps_no), grid);
    r1.seed = r2.seed = cfg.seed;
    finalize_report(r1);
    finalize_report(r2);
    out.push_back(std::move(r1));
    out.push_back(std::move(r2));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Divergence demonstration

DivergenceTrace demonstrate_sharp_marginal_divergence(const std::vector<double>& boosts, double eps2,
                                                      const std::vector<double>& windows) {
  require(eps2 > 0.0 && eps2 < 1.0, ErrorKind::Domain, "eps2 must lie in (0, 1)");
  require(!boosts.empty() && !windows.empty(), ErrorKind::Domain, "need boosts and windows");
  // dp = 1/16 so integer boosts move whole momentum bins.
  const std::size_t n = 1024;
  const double dp = 1.0 / 16.0;
  const Grid grid = Grid::centered(2.0 * kPi / (static_cast<double>(n) * dp), n);
  std::vector<cplx> phat(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double p = grid.p(k);
    if (std::abs(p) <= 1.0) phat[k] = std::cos(0.5 * kPi * p);
  }
  const WaveFunction rho0 = from_momentum_amplitudes(grid, std::move(phat));
  const Observable m2 = Observable::smeared_q(GridMeasure::gaussian(0.0, 0.5, 161, 4.0));

  DivergenceTrace t;
  t.eps2 = eps2;
  t.windows = windows;
  for (double b : boosts) {
    require(b >= 0.0 && b + 1.0 < grid.p_max(), ErrorKind::Domain, "boost outside the momentum grid");
    const MixedState s(weyl_translate(rho0, PhasePoint{0.0, b}));
    const GridMeasure law_p = momentum_distribution(s);
    const GridMeasure law_m2 = distribution(m2, s);
    DivergenceStep step;
    step.boost = b;
    for (double w : windows) step.captured.push_back(interval_mass(law_m2, Interval(b, w)));
    step.tent_gap = b > 0.0 ? witness_gap(tent_function(b, b), law_p, law_m2) : 0.0;
    step.d1 = wasserstein(law_p, law_m2, 1.0);
    t.steps.push_back(std::move(step));
  }
  t.monotone = true;
  for (std::size_t i = 1; i < t.steps.size(); ++i)
    for (std::size_t w = 0; w < windows.size(); ++w)
      if (t.steps[i].captured[w] > t.steps[i - 1].captured[w] + 1e-15) t.monotone = false;
  t.escapes = std::all_of(t.steps.back().captured.begin(), t.steps.back().captured.end(),
                          [&](double m) { return m < 1.0 - eps2; });
  return t;
}

std::string divergence_to_json(const DivergenceTrace& t) {
  nlohmann::ordered_json j;
  j["demo"] = "sharp-position-marginal";
  j["eps2"] = t.eps2;
  j["windows"] = t.windows;
  auto& steps = j["steps"] = nlohmann::ordered_json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"boost", s.boost}, {"captured", s.captured}, {"tent_gap", s.tent_gap}, {"d1", s.d1}});
  j["monotone"] = t.monotone;
  j["escapes"] = t.escapes;
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// Suites

namespace {

Grid suite_grid(double hbar) {
  const std::size_t n = 1024;
  return Grid::centered(std::sqrt(2.0 * kPi * hbar / static_cast<double>(n)), n, hbar);
}

// Grid-resolved states of four families; widths stay well above the cell
// size in both position and momentum.
std::vector<MixedState> random_ensemble(const Grid& g, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double l = 0.5 * g.extent();
  const double unit = std::sqrt(g.hbar);  // natural length
  std::vector<MixedState> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double center = (u(rng) - 0.5) * 0.3 * l;
    const double boost = (u(rng) - 0.5) * 2.0 * g.hbar / unit;
    switch (i % 4) {
      case 0: {
        const double sigma = unit * std::exp(std::log(0.4) + u(rng) * std::log(2.5 / 0.4));
        out.emplace_back(make_gaussian(g, center, boost, sigma));
        break;
      }
      case 1: {
        const double width = unit * (1.0 + 5.0 * u(rng));
        out.emplace_back(make_box(g, center, width, boost));
        break;
      }
      case 2: {
        const int n = static_cast<int>(u(rng) * 8.0);
        out.emplace_back(weyl_translate(make_hermite(g, n), PhasePoint{center, boost}));
        break;
      }
      default: {
        const double width = unit * (2.0 + 8.0 * u(rng));
        out.emplace_back(make_random_localized(g, Interval(center, width), rng()));
        break;
      }
    }
  }
  return out;
}

void stamp(std::vector<VerificationReport>& rs, std::uint64_t seed) {
  for (auto& r : rs) {
    r.seed = seed;
    finalize_report(r);
  }
}

std::vector<VerificationReport> suite_preparation(const SuiteOptions& o) {
  const Grid g = suite_grid(o.hbar);
  const auto ensemble = random_ensemble(g, o.ensemble_size, o.seed);
  std::vector<VerificationReport> out;
  const std::pair<double, double> pairs[] = {{1.0, 1.0}, {2.0, 2.0}, {1.0, 2.0}};
  for (const auto& [a, b] : pairs) {
    const double c = c_alpha_beta(a, b).c;
    if (a == 2.0 && b == 2.0) {
      auto r = verify_preparation_ur(MixedState(make_gaussian(g, 0.0, 0.0, std::sqrt(0.5 * g.hbar))), a, b, c);
      r.inputs += ",state=gaussian-minimum-uncertainty";
      out.push_back(r);
    }
    // Worst case over the ensemble.
    VerificationReport worst;
    bool first = true;
    std::size_t worst_index = 0;
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
      auto r = verify_preparation_ur(ensemble[i], a, b, c);
      if (first || r.lhs / r.rhs < worst.lhs / worst.rhs) {
        worst = r;
        worst_index = i;
        first = false;
      }
    }
    worst.inputs += ",ensemble=" + std::to_string(ensemble.size()) + ",worst_state=" + std::to_string(worst_index);
    out.push_back(worst);
  }
  stamp(out, o.seed);
  return out;
}

std::vector<VerificationReport> suite_overall_width(const SuiteOptions& o) {
  const Grid g = suite_grid(o.hbar);
  const double unit = std::sqrt(g.hbar);
  std::vector<VerificationReport> out;
  const std::pair<double, double> eps[] = {{0.05, 0.05}, {0.1, 0.2}};
  for (const auto& [e1, e2] : eps) {
    for (double sigma : {0.5, 1.0, 2.0}) {
      auto r = verify_overall_width_ur(MixedState(make_gaussian(g, 0.0, 0.0, sigma * unit)), e1, e2);
      r.inputs += ",state=gaussian(sigma=" + num(sigma * unit) + ")";
      out.push_back(r);
    }
    for (double width : {1.0, 3.0}) {
      auto r = verify_overall_width_ur(MixedState(make_box(g, 0.0, width * unit)), e1, e2);
      r.inputs += ",state=box(width=" + num(width * unit) + ")";
      out.push_back(r);
    }
  }
  stamp(out, o.seed);
  return out;
}

std::vector<VerificationReport> suite_covariant(const SuiteOptions& o) {
  const Grid g = suite_grid(o.hbar);
  const double unit = std::sqrt(g.hbar);
  std::vector<VerificationReport> out;
  for (double sigma : {0.5, 1.0, 2.0}) {
    for (auto& r : verify_covariant_error_ur(MixedState(make_gaussian(g, 0.0, 0.0, sigma * unit)), 0.05, 0.05)) {
      r.inputs += ",tau=gaussian(sigma=" + num(sigma * unit) + ")";
      out.push_back(r);
    }
  }
  // Relabelled marginals x + g(x) with |g| <= g0: each error bar moves by at
  // most 2 g0, so (W1 + 2 g1)(W2 + 2 g2) keeps the bound. Probe estimates are
  // lower bounds.
  {
    const MixedState tau(make_gaussian(g, 0.0, 0.0, unit));
    const double g1 = 0.1 * unit, g2 = 0.1 / unit * g.hbar;
    const Observable m1 = Observable::pushforward(
        Observable::covariant_marginal(tau, Axis::Position),
        RealMap::identity_plus([g1](double x) { return g1 * std::sin(x); }, g1, "x+g1*sin(x)"));
    const Observable m2 = Observable::pushforward(
        Observable::covariant_marginal(tau, Axis::Momentum),
        RealMap::identity_plus([g2](double p) { return g2 * std::cos(p); }, g2, "p+g2*cos(p)"));
    ProbeConfig cfg;
    cfg.eps = 0.05;
    cfg.seed = o.seed;
    cfg.x_samples = {0.0};
    const double w1 = error_bar_width(m1, Observable::sharp_q(), g, cfg).value;
    const double w2 = error_bar_width(m2, Observable::sharp_p(), g, cfg).value;
    auto r = make_report("covariant-pushforward-error", (w1 + 2.0 * g1) * (w2 + 2.0 * g2),
                         2.0 * kPi * g.hbar * K(0.05, 0.05), 2.0 * (g.dx * w2 + g.dp() * w1),
                         "eps1=0.05,eps2=0.05,W1=" + num(w1) + ",W2=" + num(w2) + ",g1=" + num(g1) + ",g2=" + num(g2),
                         g);
    r.lower_bound_semantics = true;
    out.push_back(r);
  }
  stamp(out, o.seed);
  return out;
}

std::vector<VerificationReport> suite_metric(const SuiteOptions& o) {
  const Grid g = suite_grid(o.hbar);
  const double unit = std::sqrt(g.hbar);
  std::vector<MixedState> ensemble{MixedState(make_gaussian(g, 0.0, 0.0, unit)),
                                   MixedState(make_box(g, 1.0 * unit, 2.0 * unit))};
  std::vector<VerificationReport> out;
  const std::pair<double, double> pairs[] = {{1.0, 1.0}, {2.0, 2.0}};
  for (const auto& [a, b] : pairs) {
    const double c = c_alpha_beta(a, b).c;
    for (double sigma : {0.5, 1.0, 2.0}) {
      auto r = verify_metric_ur(MixedState(make_gaussian(g, 0.0, 0.0, sigma * unit)), a, b, ensemble, c);
      r.inputs += ",tau=gaussian(sigma=" + num(sigma * unit) + ")";
      out.push_back(r);
    }
    auto r = verify_metric_ur(MixedState(make_point(g, 0.0)), a, b, ensemble, c);
    r.inputs += ",tau=point";
    out.push_back(r);
  }
  stamp(out, o.seed);
  return out;
}

std::vector<VerificationReport> suite_noise(const SuiteOptions& o) {
  const Grid g = suite_grid(o.hbar);
  const double unit = std::sqrt(g.hbar);
  std::vector<VerificationReport> out;
  for (double sigma : {0.5, 1.0, 2.0}) {
    auto r = verify_noise_ur(MixedState(make_gaussian(g, 0.0, 0.0, sigma * unit)));
    r.inputs += ",tau=gaussian(sigma=" + num(sigma * unit) + ")";
    out.push_back(r);
  }
  auto r = verify_noise_ur(MixedState(make_gaussian(g, 1.5 * unit, 0.5 * unit, unit)));
  r.inputs += ",tau=displaced-gaussian";
  out.push_back(r);
  stamp(out, o.seed);
  return out;
}

std::vector<VerificationReport> suite_connections(const SuiteOptions& o) {
  const std::size_t n = 1024;
  const Grid g = Grid::centered(1.0 / 64.0, n, o.hbar);  // +-8
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ConnectionInstance> inst;
  ProbeConfig cfg;
  cfg.delta = 2.0 * g.dx;
  cfg.seed = o.seed;
  cfg.x_samples = {-2.0, 0.0, 2.0};
  for (double eps : {0.05, 0.1, 0.25}) {
    for (double alpha : {1.0, 2.0}) {
      inst.push_back({Observable::smeared_q(GridMeasure::gaussian(0.0, 1.0, 513, 4.0)), Observable::sharp_q(), eps,
                      alpha, cfg, "smeared_q(gaussian(0,1))"});
      inst.push_back({Observable::smeared_q(GridMeasure::point(2.0)), Observable::sharp_q(), eps, alpha, cfg,
                      "smeared_q(point(2))"});
      inst.push_back({Observable::sharp_q(), Observable::sharp_q(), eps, alpha, cfg, "sharp_q"});
    }
  }
  // random smearings: shifted gaussians, two-point and three-point laws, all
  // on the dx lattice
  auto snap = [](double v) { return std::round(v * 64.0) / 64.0; };
  for (int k = 0; k < 20; ++k) {
    GridMeasure mu = GridMeasure::point(0.0);
    std::string label;
    switch (k % 3) {
      case 0: {
        const double m = snap(u(rng) * 2.0 - 1.0), sd = 0.25 + 0.75 * u(rng);
        mu = GridMeasure::gaussian(m, sd, 257, 2.0);
        label = "gaussian(" + num(m) + "," + num(sd) + ")";
        break;
      }
      case 1: {
        const double a = snap(u(rng) * 4.0 - 2.0), b = a + snap(0.25 + u(rng) * 2.0), w = 0.2 + 0.6 * u(rng);
        mu = GridMeasure::normalized({a, b}, {w, 1.0 - w});
        label = "two-point(" + num(a) + "," + num(b) + ")";
        break;
      }
      default: {
        const double a = snap(u(rng) * 2.0 - 1.0);
        mu = GridMeasure::normalized({a - 0.5, a, a + 1.0}, {u(rng) + 0.1, u(rng) + 0.1, u(rng) + 0.1});
        label = "three-point(" + num(a) + ")";
        break;
      }
    }
    for (double eps : {0.05, 0.1, 0.25})
      for (double alpha : {1.0, 2.0})
        inst.push_back({Observable::smeared_q(mu), Observable::sharp_q(), eps, alpha, cfg, "smeared_q(" + label + ")"});
  }
  auto out = verify_connections(inst, g);
  stamp(out, o.seed);
  return out;
}

}  // namespace

std::vector<VerificationReport> run_suite(const std::string& name, const SuiteOptions& opts) {
  require(opts.hbar > 0.0, ErrorKind::Domain, "hbar must be positive");
  if (name == "preparation") return suite_preparation(opts);
  if (name == "overall-width") return suite_overall_width(opts);
  if (name == "covariant") return suite_covariant(opts);
  if (name == "metric") return suite_metric(opts);
  if (name == "noise") return suite_noise(opts);
  if (name == "connections") return suite_connections(opts);
  if (name == "all") {
    std::vector<VerificationReport> all;
    for (const char* s : {"preparation", "overall-width", "covariant", "metric", "noise", "connections"}) {
      auto part = run_suite(s, opts);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  fail(ErrorKind::Domain, "unknown suite '" + name + "'");
}

std::string reports_to_json(const std::vector<VerificationReport>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["relation"] = r.relation;
    if (r.lhs_infinite) {
      j["lhs"] = "inf";
    } else {
      j["lhs"] = r.lhs;
    }
    j["rhs"] = r.rhs;
    if (std::isinf(r.slack)) {
      j["slack"] = "inf";
    } else {
      j["slack"] = r.slack;
    }
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["verdict"] = r.verdict;
    j["lower_bound_semantics"] = r.lower_bound_semantics;
    j["inputs"] = r.inputs;
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.inputs_hash));
    j["inputs_hash"] = hash;
    j["seed"] = r.seed;
    j["grid"] = r.grid;
    arr.push_back(std::move(j));
  }
  return arr.dump(2);
}

std::string reports_to_csv(const std::vector<VerificationReport>& reports) {
  std::ostringstream os;
  os.precision(17);
  os << "relation,lhs,rhs,slack,pass,verdict,inputs_hash,seed,grid\n";
  for (const auto& r : reports) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.inputs_hash));
    os << r.relation << ',';
    if (r.lhs_infinite) {
      os << "inf";
    } else {
      os << r.lhs;
    }
    os << ',' << r.rhs << ',';
    if (std::isinf(r.slack)) {
      os << "inf";
    } else {
      os << r.slack;
    }
    os << ',' << (r.pass ? "true" : "false") << ',' << r.verdict << ',' << hash << ',' << r.seed << ",\""
       << r.grid << "\"\n";
  }
  return os.str();
}

}  // namespace qmeas
