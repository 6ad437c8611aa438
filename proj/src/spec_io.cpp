#include "qmeas/spec_io.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "qmeas/bounds_verifier.hpp"
#include "qmeas/error_metrics.hpp"
#include "qmeas/errors.hpp"
#include "qmeas/measure.hpp"
#include "qmeas/observables.hpp"
#include "qmeas/quantum_state.hpp"
#include "qmeas/transport.hpp"

namespace qmeas {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

template <class T>
T field(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Schema, std::string("field '") + key + "' has the wrong type");
  }
}

template <class T>
T need(const json& j, const char* key) {
  require(j.is_object() && j.contains(key), ErrorKind::Schema, std::string("missing field '") + key + "'");
  return field<T>(j, key, T{});
}

// inf is not representable in JSON
json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Axis parse_axis(const std::string& s) {
  if (s == "position" || s == "q") return Axis::Position;
  if (s == "momentum" || s == "p") return Axis::Momentum;
  fail(ErrorKind::Schema, "unknown axis '" + s + "'");
}

std::optional<Grid> parse_grid(const json& req) {
  if (!req.contains("grid") || req["grid"].is_null()) return std::nullopt;
  const json& g = req["grid"];
  Grid grid;
  grid.hbar = field<double>(req, "hbar", 1.0);
  if (g.is_array()) {
    require(g.size() == 3, ErrorKind::Schema, "grid must be [x0, dx, N]");
    grid.x0 = g[0].get<double>();
    grid.dx = g[1].get<double>();
    grid.size = g[2].get<std::size_t>();
  } else {
    grid.x0 = need<double>(g, "x0");
    grid.dx = need<double>(g, "dx");
    grid.size = need<std::size_t>(g, "n");
  }
  grid.validate();
  return grid;
}

// Without "grid": the self-dual lattice with 1024 points at the request's hbar.
Grid grid_or_default(const json& req) {
  if (auto g = parse_grid(req)) return *g;
  const double hbar = field<double>(req, "hbar", 1.0);
  require(hbar > 0.0, ErrorKind::Schema, "hbar must be positive");
  return Grid::centered(std::sqrt(2.0 * std::numbers::pi * hbar / 1024.0), 1024, hbar);
}

GridMeasure parse_measure(const json& m) {
  if (m.is_string()) return load_measure_csv(m.get<std::string>());
  require(m.is_object(), ErrorKind::Schema, "measure spec must be a file name or an object");
  if (m.contains("file")) return load_measure_csv(m["file"].get<std::string>());
  if (m.contains("atoms"))
    return GridMeasure::normalized(need<std::vector<double>>(m, "atoms"), need<std::vector<double>>(m, "weights"));
  if (m.contains("point")) return GridMeasure::point(m["point"].get<double>());
  if (m.contains("gaussian")) {
    const json& g = m["gaussian"];
    const double sd = need<double>(g, "sd");
    return GridMeasure::gaussian(field<double>(g, "mean", 0.0), sd, field<std::size_t>(g, "n", 401),
                                 field<double>(g, "extent", 8.0 * sd));
  }
  if (m.contains("uniform")) {
    const json& u = m["uniform"];
    return GridMeasure::uniform(need<double>(u, "a"), need<double>(u, "b"), need<std::size_t>(u, "n"));
  }
  fail(ErrorKind::Schema, "unrecognised measure spec");
}

MixedState parse_state(const json& s, const json& req);

WaveFunction parse_pure(const json& s, const json& req) {
  const double hbar = field<double>(req, "hbar", 1.0);
  if (s.is_string()) return load_state_csv(s.get<std::string>(), hbar);
  require(s.is_object(), ErrorKind::Schema, "state spec must be a file name or an object");
  if (s.contains("file")) return load_state_csv(s["file"].get<std::string>(), hbar);
  const std::string family = need<std::string>(s, "family");
  const Grid g = grid_or_default(req);
  if (family == "gaussian")
    return make_gaussian(g, field<double>(s, "center", 0.0), field<double>(s, "p0", 0.0), need<double>(s, "sigma"));
  if (family == "box")
    return make_box(g, field<double>(s, "center", 0.0), need<double>(s, "width"), field<double>(s, "p0", 0.0));
  if (family == "hermite") return make_hermite(g, need<int>(s, "n"));
  if (family == "random")
    return make_random_localized(g, Interval(field<double>(s, "center", 0.0), need<double>(s, "width")),
                                 field<std::uint64_t>(s, "seed", field<std::uint64_t>(req, "seed", 7)));
  if (family == "point") return make_point(g, field<double>(s, "at", 0.0));
  fail(ErrorKind::Schema, "unknown state family '" + family + "'");
}

MixedState parse_state(const json& s, const json& req) {
  if (s.is_object() && s.contains("mixture")) {
    std::vector<MixedState::Component> parts;
    for (const auto& c : s["mixture"]) parts.push_back({need<double>(c, "weight"), parse_pure(c.at("state"), req)});
    return MixedState(std::move(parts));
  }
  return MixedState(parse_pure(s, req));
}

RealMap parse_map(const json& m) {
  const std::string kind = need<std::string>(m, "kind");
  if (kind == "table") return RealMap::table(need<std::vector<double>>(m, "xs"), need<std::vector<double>>(m, "ys"));
  if (kind == "identity") return RealMap::identity();
  const std::string shape = field<std::string>(m, "shape", kind == "perturbation" ? "sin" : "tanh");
  const double k = field<double>(m, "frequency", 1.0);
  if (kind == "perturbation") {
    const double a = need<double>(m, "amplitude");
    if (shape == "sin") return RealMap::identity_plus([a, k](double x) { return a * std::sin(k * x); }, std::abs(a), "x+a*sin(kx)");
    if (shape == "cos") return RealMap::identity_plus([a, k](double x) { return a * std::cos(k * x); }, std::abs(a), "x+a*cos(kx)");
    fail(ErrorKind::Schema, "unknown perturbation shape '" + shape + "'");
  }
  if (kind == "bounded") {
    const double b = need<double>(m, "bound");
    if (shape == "tanh") return RealMap::bounded([b, k](double x) { return b * std::tanh(k * x); }, std::abs(b), "b*tanh(kx)");
    if (shape == "cos") return RealMap::bounded([b, k](double x) { return b * std::cos(k * x); }, std::abs(b), "b*cos(kx)");
    fail(ErrorKind::Schema, "unknown bounded shape '" + shape + "'");
  }
  fail(ErrorKind::Schema, "unknown map kind '" + kind + "'");
}

Observable parse_observable(const json& o, const json& req) {
  require(o.is_object(), ErrorKind::Schema, "observable spec must be an object");
  const std::string v = need<std::string>(o, "variant");
  if (v == "sharp_q") return Observable::sharp_q();
  if (v == "sharp_p") return Observable::sharp_p();
  if (v == "smeared_q") return Observable::smeared_q(parse_measure(o.at("noise")));
  if (v == "smeared_p") return Observable::smeared_p(parse_measure(o.at("noise")));
  if (v == "trivial")
    return Observable::trivial(parse_measure(o.at("measure")), parse_axis(field<std::string>(o, "axis", "position")));
  if (v == "pushforward") return Observable::pushforward(parse_observable(o.at("inner"), req), parse_map(o.at("map")));
  if (v == "covariant_marginal")
    return Observable::covariant_marginal(parse_state(o.at("tau"), req), parse_axis(need<std::string>(o, "axis")));
  fail(ErrorKind::Schema, "unknown observable variant '" + v + "'");
}

ojson grid_json(const Grid& g) {
  return {{"x0", g.x0}, {"dx", g.dx}, {"n", g.size}, {"hbar", g.hbar}, {"dp", g.dp()}};
}

ojson measure_stats(const GridMeasure& m, double alpha, double eps) {
  return {{"atoms", m.size()},
          {"mean", mean(m)},
          {"std", std_deviation(m)},
          {"alpha", alpha},
          {"alpha_deviation", alpha_deviation(m, alpha)},
          {"eps", eps},
          {"overall_width", overall_width(m, eps)}};
}

ojson estimate_json(const WidthEstimate& e, const std::string& name) {
  ojson j = ojson::parse(trace_to_json(e, name));
  j["value"] = number(e.value);
  if (j["probes"].empty()) j.erase("probes");
  return j;
}

std::string csv_kv(const ojson& j) {
  std::ostringstream os;
  os.precision(17);
  os << "key,value\n";
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_structured()) continue;
    os << it.key() << ',';
    if (it->is_string()) {
      os << it->get<std::string>();
    } else if (it->is_number_float()) {
      os << it->get<double>();
    } else {
      os << it->dump();
    }
    os << '\n';
  }
  return os.str();
}

bool want_csv(const json& req) {
  const std::string f = field<std::string>(req, "format", "json");
  require(f == "json" || f == "csv", ErrorKind::Schema, "format must be json or csv");
  return f == "csv";
}

std::string emit(const ojson& j, const json& req) { return want_csv(req) ? csv_kv(j) : j.dump(2) + "\n"; }

std::string distribution_csv(const std::vector<std::pair<std::string, const GridMeasure*>>& cols) {
  std::ostringstream os;
  os.precision(17);
  os << "axis,x,w\n";
  for (const auto& [name, m] : cols)
    for (std::size_t i = 0; i < m->size(); ++i) os << name << ',' << m->atoms()[i] << ',' << m->weights()[i] << '\n';
  return os.str();
}

ProbeConfig probe_config(const json& req) {
  ProbeConfig c;
  c.eps = field<double>(req, "eps", c.eps);
  c.delta = field<double>(req, "delta", 0.0);
  c.seed = field<std::uint64_t>(req, "seed", c.seed);
  c.probes_per_center = field<std::size_t>(req, "probes_per_center", c.probes_per_center);
  c.x_samples = field<std::vector<double>>(req, "centers", {});
  c.w_cutoff = field<double>(req, "w_cutoff", 0.0);
  c.record_trace = field<bool>(req, "trace", false);
  return c;
}

std::vector<MixedState> parse_ensemble(const json& req) {
  std::vector<MixedState> out;
  if (req.contains("ensemble"))
    for (const auto& s : req["ensemble"]) out.push_back(parse_state(s, req));
  if (req.contains("state")) out.push_back(parse_state(req["state"], req));
  return out;
}

// ---------------------------------------------------------------------------

std::string cmd_measure(const json& req) {
  const GridMeasure m = parse_measure(req.at("measure"));
  return emit(measure_stats(m, field<double>(req, "alpha", 2.0), field<double>(req, "eps", 0.1)), req);
}

std::string cmd_wasserstein(const json& req) {
  const GridMeasure a = parse_measure(req.at("a"));
  const GridMeasure b = parse_measure(req.at("b"));
  const double alpha = field<double>(req, "alpha", 1.0);
  const bool inf = !(alpha > 0.0) || std::isinf(alpha);
  ojson j;
  j["alpha"] = inf ? json("inf") : json(alpha);
  j["distance"] = inf ? wasserstein_inf(a, b) : wasserstein(a, b, alpha);
  if (field<bool>(req, "lp", false) && !inf) {
    const LpSolution lp = optimal_coupling_lp(a, b, alpha);
    j["lp_cost"] = lp.cost;
    j["dual_value"] = dual_ascent_from_lp(a, b, alpha).value;
  }
  if (req.contains("coupling_out")) save_coupling_csv(quantile_coupling(a, b), req["coupling_out"].get<std::string>());
  return emit(j, req);
}

std::string cmd_state(const json& req) {
  const MixedState s = parse_state(req.at("state"), req);
  const GridMeasure q = position_distribution(s);
  const GridMeasure p = momentum_distribution(s);
  if (want_csv(req)) return distribution_csv({{"position", &q}, {"momentum", &p}});
  const double alpha = field<double>(req, "alpha", 2.0), eps = field<double>(req, "eps", 0.1);
  ojson j;
  j["grid"] = grid_json(s.grid());
  j["components"] = s.components().size();
  j["position"] = measure_stats(q, alpha, eps);
  j["momentum"] = measure_stats(p, alpha, eps);
  if (field<bool>(req, "table", false)) {
    j["position"]["x"] = std::vector<double>(q.atoms().begin(), q.atoms().end());
    j["position"]["w"] = std::vector<double>(q.weights().begin(), q.weights().end());
    j["momentum"]["x"] = std::vector<double>(p.atoms().begin(), p.atoms().end());
    j["momentum"]["w"] = std::vector<double>(p.weights().begin(), p.weights().end());
  }
  return j.dump(2) + "\n";
}

std::string cmd_groundstate(const json& req) {
  const double alpha = field<double>(req, "alpha", 2.0), beta = field<double>(req, "beta", 2.0);
  const Grid g = parse_grid(req).value_or(default_ground_state_grid(alpha, beta));
  GroundStateOptions opts = default_ground_state_options(alpha, beta);
  opts.tol = field<double>(req, "tol", opts.tol);
  opts.boundary_tol = field<double>(req, "boundary_tol", opts.boundary_tol);
  const ConstantResult r = c_alpha_beta(alpha, beta, g, opts);
  ojson j;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["g"] = r.g;
  j["c"] = r.c;
  j["residual"] = r.ground.residual;
  j["boundary_amplitude"] = r.ground.boundary_amplitude;
  j["steps"] = r.ground.steps;
  j["grid"] = grid_json(g);
  if (req.contains("state_out")) save_state_csv(r.ground.state, req["state_out"].get<std::string>());
  return emit(j, req);
}

std::string cmd_metric(const json& req) {
  const std::string fn = need<std::string>(req, "functional");
  const double alpha = field<double>(req, "alpha", 1.0);
  const double eps = field<double>(req, "eps", 0.1);
  const Observable e1 = parse_observable(req.at("e1"), req);
  const auto target = [&] { return parse_observable(req.at("e"), req); };
  ojson j;
  j["functional"] = fn;
  if (fn == "distance") {
    auto ens = parse_ensemble(req);
    DistanceScan scan;
    scan.enabled = field<bool>(req, "scan", true);
    scan.w_cutoff = field<double>(req, "w_cutoff", 0.0);
    j["estimate"] = estimate_json(observable_distance(e1, target(), alpha, ens, scan), "distance");
  } else if (fn == "distance_closed_form") {
    if (e1.kind() == Observable::Kind::Pushforward) {
      j["value"] = pushforward_delta1_closed_form(e1.map().bound());
    } else {
      j["value"] = delta_alpha_smeared_closed_form(e1.noise(), alpha);
    }
  } else if (fn == "error_bar" || fn == "bias_free" || fn == "bias") {
    const Grid g = grid_or_default(req);
    const ProbeConfig cfg = probe_config(req);
    if (fn == "error_bar") j["estimate"] = estimate_json(error_bar_width(e1, target(), g, cfg), fn);
    if (fn == "bias_free") j["estimate"] = estimate_json(bias_free_error(e1, target(), g, cfg), fn);
    if (fn == "bias") j["value"] = bias(e1, target(), g, cfg);
  } else if (fn == "resolution" || fn == "resolution_estimate") {
    const Grid g = grid_or_default(req);
    const ProbeConfig cfg = probe_config(req);
    j["estimate"] = estimate_json(
        fn == "resolution" ? resolution_width(e1, eps, g, cfg) : resolution_width_estimate(e1, eps, g, cfg), fn);
  } else if (fn == "noise") {
    auto ens = parse_ensemble(req);
    require(!ens.empty(), ErrorKind::Schema, "noise error needs a state or an ensemble");
    j["estimate"] = estimate_json(global_noise_error(target(), e1, ens), fn);
  } else if (fn == "joint") {
    require(e1.kind() == Observable::Kind::CovariantMarginal, ErrorKind::Schema,
            "joint table needs a covariant_marginal e1 (its tau is used)");
    const MixedState s = parse_state(req.at("state"), req);
    const LatticeSpec lat{field<std::size_t>(req, "q_stride", 1), field<std::size_t>(req, "p_stride", 1)};
    const JointTable t = joint_covariant_distribution(e1.tau(), s, lat);
    if (want_csv(req)) {
      std::ostringstream os;
      os.precision(17);
      os << "q,p,w\n";
      for (std::size_t a = 0; a < t.q_atoms.size(); ++a)
        for (std::size_t b = 0; b < t.p_atoms.size(); ++b)
          os << t.q_atoms[a] << ',' << t.p_atoms[b] << ',' << t.at(a, b) << '\n';
      return os.str();
    }
    j["total_mass"] = t.total_mass();
    j["q_marginal_tv"] = t.q_marginal_tv;
    j["p_marginal_tv"] = t.p_marginal_tv;
    j["q_cells"] = t.q_atoms.size();
    j["p_cells"] = t.p_atoms.size();
  } else {
    fail(ErrorKind::Schema, "unknown functional '" + fn + "'");
  }
  if (j.contains("estimate") && want_csv(req)) {
    ojson flat = j["estimate"];
    flat["functional"] = fn;
    return csv_kv(flat);
  }
  return emit(j, req);
}

std::string cmd_verify(const json& req) {
  std::vector<VerificationReport> reports;
  const std::uint64_t seed = field<std::uint64_t>(req, "seed", 7);
  if (req.contains("suite")) {
    SuiteOptions o;
    o.seed = seed;
    o.hbar = field<double>(req, "hbar", 1.0);
    o.ensemble_size = field<std::size_t>(req, "ensemble_size", o.ensemble_size);
    reports = run_suite(req["suite"].get<std::string>(), o);
  } else {
    const std::string rel = need<std::string>(req, "relation");
    const double alpha = field<double>(req, "alpha", 2.0), beta = field<double>(req, "beta", 2.0);
    const double eps = field<double>(req, "eps", 0.05), eps2 = field<double>(req, "eps2", eps);
    auto c_of = [&] { return req.contains("c") ? req["c"].get<double>() : c_alpha_beta(alpha, beta).c; };
    if (rel == "preparation") {
      reports.push_back(verify_preparation_ur(parse_state(req.at("state"), req), alpha, beta, c_of()));
    } else if (rel == "overall-width") {
      reports.push_back(verify_overall_width_ur(parse_state(req.at("state"), req), eps, eps2));
    } else if (rel == "covariant") {
      reports = verify_covariant_error_ur(parse_state(req.at("tau"), req), eps, eps2);
    } else if (rel == "metric") {
      const MixedState tau = parse_state(req.at("tau"), req);
      auto ens = parse_ensemble(req);
      if (ens.empty()) ens.push_back(tau);
      reports.push_back(verify_metric_ur(tau, alpha, beta, ens, c_of()));
    } else if (rel == "noise") {
      reports.push_back(verify_noise_ur(parse_state(req.at("tau"), req)));
    } else {
      fail(ErrorKind::Schema, "unknown relation '" + rel + "'");
    }
    for (auto& r : reports) {
      r.seed = seed;
      finalize_report(r);
    }
  }
  return want_csv(req) ? reports_to_csv(reports) : reports_to_json(reports) + "\n";
}

std::string cmd_demo(const json& req) {
  const std::string name = field<std::string>(req, "name", "divergence");
  if (name == "divergence") {
    const auto t = demonstrate_sharp_marginal_divergence(field<std::vector<double>>(req, "boosts", {0.0, 4.0, 8.0, 16.0}),
                                                         field<double>(req, "eps2", 0.1),
                                                         field<std::vector<double>>(req, "windows", {1.0, 2.0, 4.0}));
    if (!want_csv(req)) return divergence_to_json(t) + "\n";
    std::ostringstream os;
    os.precision(17);
    os << "boost,window,captured,tent_gap,d1\n";
    for (const auto& s : t.steps)
      for (std::size_t w = 0; w < t.windows.size(); ++w)
        os << s.boost << ',' << t.windows[w] << ',' << s.captured[w] << ',' << s.tent_gap << ',' << s.d1 << '\n';
    return os.str();
  }
  if (name == "tradeoff") {
    // Covariant marginal widths along a squeezing sweep of Gaussian tau.
    const double hbar = field<double>(req, "hbar", 1.0);
    const Grid g = parse_grid(req).value_or(
        Grid::centered(std::sqrt(2.0 * std::numbers::pi * hbar / 1024.0), 1024, hbar));
    const double eps = field<double>(req, "eps", 0.05), eps2 = field<double>(req, "eps2", eps);
    const double bound = 2.0 * std::numbers::pi * g.hbar * K(eps, eps2);
    ojson rows = ojson::array();
    for (double sigma : field<std::vector<double>>(req, "sigmas", {0.25, 0.5, 1.0, 2.0, 4.0})) {
      const auto [mu, nu] = covariant_marginals(MixedState(make_gaussian(g, 0.0, 0.0, sigma)));
      const double wq = overall_width(mu, eps), wp = overall_width(nu, eps2);
      rows.push_back({{"sigma", sigma}, {"W_q", wq}, {"W_p", wp}, {"product", wq * wp}, {"bound", bound}});
    }
    if (want_csv(req)) {
      std::ostringstream os;
      os.precision(17);
      os << "sigma,W_q,W_p,product,bound\n";
      for (const auto& r : rows)
        os << r["sigma"].get<double>() << ',' << r["W_q"].get<double>() << ',' << r["W_p"].get<double>() << ','
           << r["product"].get<double>() << ',' << r["bound"].get<double>() << '\n';
      return os.str();
    }
    ojson j;
    j["demo"] = "covariant-tradeoff";
    j["eps1"] = eps;
    j["eps2"] = eps2;
    j["rows"] = rows;
    return j.dump(2) + "\n";
  }
  fail(ErrorKind::Schema, "unknown demo '" + name + "'");
}

}  // namespace

std::string run_request(const std::string& command, const std::string& request_json) {
  json req;
  try {
    req = request_json.empty() ? json::object() : json::parse(request_json);
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, std::string("request is not valid JSON: ") + e.what());
  }
  require(req.is_object(), ErrorKind::Schema, "request must be a JSON object");
  try {
    if (command == "measure") return cmd_measure(req);
    if (command == "wasserstein") return cmd_wasserstein(req);
    if (command == "state") return cmd_state(req);
    if (command == "groundstate") return cmd_groundstate(req);
    if (command == "metric") return cmd_metric(req);
    if (command == "verify") return cmd_verify(req);
    if (command == "demo") return cmd_demo(req);
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, e.what());
  }
  fail(ErrorKind::Schema, "unknown command '" + command + "'");
}

}  // namespace qmeas
