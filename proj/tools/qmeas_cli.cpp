// qmeas command line front-end. Every subcommand becomes one JSON request
// handed to qm_run; this file only parses flags and writes the result.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "qmeas/qmeas.h"

namespace {

using json = nlohmann::json;

struct Common {
  std::string grid;
  double hbar = 1.0;
  double eps = 0.1;
  double eps2 = 0.1;
  double delta = 0.0;
  std::string alpha = "1";
  double beta = 2.0;
  std::uint64_t seed = 7;
  std::string out;
  std::string format = "json";
};

struct Flags {
  CLI::Option* grid = nullptr;
  CLI::Option* hbar = nullptr;
  CLI::Option* eps = nullptr;
  CLI::Option* eps2 = nullptr;
  CLI::Option* delta = nullptr;
  CLI::Option* alpha = nullptr;
  CLI::Option* beta = nullptr;
  CLI::Option* seed = nullptr;
};

Flags add_common(CLI::App* sub, Common& c) {
  Flags f;
  f.grid = sub->add_option("--grid", c.grid, "grid as x0,dx,N")->envname("QMEAS_GRID");
  f.hbar = sub->add_option("--hbar", c.hbar, "Planck constant")->envname("QMEAS_HBAR");
  f.eps = sub->add_option("--eps", c.eps, "confidence level eps (or eps1)")->envname("QMEAS_EPS");
  f.eps2 = sub->add_option("--eps2", c.eps2, "second confidence level")->envname("QMEAS_EPS2");
  f.delta = sub->add_option("--delta", c.delta, "probe localisation width")->envname("QMEAS_DELTA");
  f.alpha = sub->add_option("--alpha", c.alpha, "exponent alpha (inf for the sup distance)")->envname("QMEAS_ALPHA");
  f.beta = sub->add_option("--beta", c.beta, "exponent beta")->envname("QMEAS_BETA");
  f.seed = sub->add_option("--seed", c.seed, "random seed")->envname("QMEAS_SEED");
  sub->add_option("--out", c.out, "output file (default stdout)")->envname("QMEAS_OUT");
  sub->add_option("--format", c.format, "json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->envname("QMEAS_FORMAT");
  return f;
}

json parse_grid(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) parts.push_back(item);
  if (parts.size() != 3) throw CLI::ValidationError("--grid", "expected x0,dx,N");
  try {
    return json::array({std::stod(parts[0]), std::stod(parts[1]), std::stoull(parts[2])});
  } catch (const std::exception&) {
    throw CLI::ValidationError("--grid", "expected x0,dx,N");
  }
}

json alpha_value(const std::string& s) {
  if (s == "inf" || s == "infinity") return 0.0;  // selects the sup distance
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw CLI::ValidationError("--alpha", "expected a number or inf");
  }
}

// Copies the shared flags that were actually given into the request.
void apply_common(json& req, const Common& c, const Flags& f) {
  if (*f.grid) req["grid"] = parse_grid(c.grid);
  if (*f.hbar) req["hbar"] = c.hbar;
  if (*f.eps) req["eps"] = c.eps;
  if (*f.eps2) req["eps2"] = c.eps2;
  if (*f.delta) req["delta"] = c.delta;
  if (*f.alpha) req["alpha"] = alpha_value(c.alpha);
  if (*f.beta) req["beta"] = c.beta;
  if (*f.seed) req["seed"] = c.seed;
  req["format"] = c.format;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("IoError: cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("SchemaError: ") + path + ": " + e.what());
  }
}

// temp file in the target directory, then rename
void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("IoError: cannot write " + tmp);
    out << text;
    out.flush();
    if (!out) {
      std::remove(tmp.c_str());
      throw std::runtime_error("IoError: cannot write " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("IoError: cannot rename onto " + path);
  }
}

int run(const std::string& command, const json& req, const Common& c) {
  char* text = nullptr;
  const qm_status st = qm_run(command.c_str(), req.dump().c_str(), &text);
  if (st != QM_OK) {
    std::cerr << qm_last_error_class() << ": " << qm_last_error() << "\n";
    return 1;
  }
  std::string result(text);
  qm_string_free(text);
  if (c.out.empty()) {
    std::cout << result;
  } else {
    write_atomic(c.out, result);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qmeas: error and uncertainty measures for discretised position/momentum observables"};
  app.require_subcommand(1);
  Common c;
  json req = json::object();
  std::string command;

  // measure
  auto* measure = app.add_subcommand("measure", "spread functionals of one measure (CSV x,w)");
  Flags fm = add_common(measure, c);
  std::string measure_file;
  measure->add_option("file", measure_file, "measure CSV")->required();

  // wasserstein
  auto* wass = app.add_subcommand("wasserstein", "Wasserstein distance between two measures");
  Flags fw = add_common(wass, c);
  std::string wa, wb, coupling_out;
  bool lp = false;
  wass->add_option("a", wa, "first measure CSV")->required();
  wass->add_option("b", wb, "second measure CSV")->required();
  wass->add_flag("--lp", lp, "also solve the transportation LP and its dual");
  wass->add_option("--coupling-out", coupling_out, "write the monotone coupling as CSV");

  // state
  auto* state = app.add_subcommand("state", "build a state and report its position and momentum laws");
  Flags fs = add_common(state, c);
  std::string state_file, family;
  double center = 0.0, p0 = 0.0, sigma = 1.0, width = 1.0;
  int hermite_n = 0;
  bool table = false;
  state->add_option("file", state_file, "state CSV (x,re,im)");
  state->add_option("--family", family, "gaussian, box, hermite, random or point")
      ->check(CLI::IsMember({"gaussian", "box", "hermite", "random", "point"}));
  state->add_option("--center", center);
  state->add_option("--p0", p0);
  state->add_option("--sigma", sigma);
  state->add_option("--width", width);
  state->add_option("--n", hermite_n, "Hermite index");
  state->add_flag("--table", table, "include the full distributions");

  // groundstate
  auto* gs = app.add_subcommand("groundstate", "ground state energy g and constant c for |x|^alpha + |p|^beta");
  Flags fg = add_common(gs, c);
  std::string gs_state_out;
  double gs_tol = 0.0;
  gs->add_option("--tol", gs_tol, "residual tolerance");
  gs->add_option("--state-out", gs_state_out, "write the ground state as CSV");

  // metric
  auto* metric = app.add_subcommand("metric", "evaluate an error functional from a JSON spec");
  Flags fx = add_common(metric, c);
  std::string metric_spec;
  metric->add_option("spec", metric_spec, "JSON request file")->required()->check(CLI::ExistingFile);

  // verify
  auto* verify = app.add_subcommand("verify", "check uncertainty relations");
  Flags fv = add_common(verify, c);
  std::string suite, relation, verify_spec;
  std::size_t ensemble = 0;
  verify->add_option("--suite", suite, "preparation, overall-width, covariant, metric, noise, connections or all");
  verify->add_option("--relation", relation, "single relation, inputs from --spec");
  verify->add_option("--spec", verify_spec, "JSON inputs for --relation")->check(CLI::ExistingFile);
  verify->add_option("--ensemble-size", ensemble, "random states in the preparation suite");

  // demo
  auto* demo = app.add_subcommand("demo", "divergence and trade-off demonstrations");
  Flags fd = add_common(demo, c);
  std::string demo_name = "divergence";
  std::vector<double> boosts, windows, sigmas;
  demo->add_option("--name", demo_name)->check(CLI::IsMember({"divergence", "tradeoff"}));
  demo->add_option("--boosts", boosts)->delimiter(',');
  demo->add_option("--windows", windows)->delimiter(',');
  demo->add_option("--sigmas", sigmas)->delimiter(',');

  try {
    app.parse(argc, argv);
    if (measure->parsed()) {
      command = "measure";
      req["measure"] = measure_file;
      apply_common(req, c, fm);
    } else if (wass->parsed()) {
      command = "wasserstein";
      req["a"] = wa;
      req["b"] = wb;
      if (lp) req["lp"] = true;
      if (!coupling_out.empty()) req["coupling_out"] = coupling_out;
      apply_common(req, c, fw);
    } else if (state->parsed()) {
      command = "state";
      if (!state_file.empty()) {
        req["state"] = state_file;
      } else if (!family.empty()) {
        req["state"] = {{"family", family}, {"center", center}, {"p0", p0}, {"sigma", sigma},
                        {"width", width},   {"n", hermite_n},   {"at", center}};
      } else {
        throw CLI::ValidationError("state", "give a state file or --family");
      }
      if (table) req["table"] = true;
      apply_common(req, c, fs);
    } else if (gs->parsed()) {
      command = "groundstate";
      if (gs_tol > 0.0) req["tol"] = gs_tol;
      if (!gs_state_out.empty()) req["state_out"] = gs_state_out;
      apply_common(req, c, fg);
      if (!*fg.alpha) req["alpha"] = 2.0;
    } else if (metric->parsed()) {
      command = "metric";
      req = read_json_file(metric_spec);
      apply_common(req, c, fx);
    } else if (verify->parsed()) {
      command = "verify";
      if (!verify_spec.empty()) req = read_json_file(verify_spec);
      if (!suite.empty()) req["suite"] = suite;
      if (!relation.empty()) req["relation"] = relation;
      if (ensemble > 0) req["ensemble_size"] = ensemble;
      if (!req.contains("suite") && !req.contains("relation"))
        throw CLI::ValidationError("verify", "give --suite or --relation");
      apply_common(req, c, fv);
    } else if (demo->parsed()) {
      command = "demo";
      req["name"] = demo_name;
      if (!boosts.empty()) req["boosts"] = boosts;
      if (!windows.empty()) req["windows"] = windows;
      if (!sigmas.empty()) req["sigmas"] = sigmas;
      apply_common(req, c, fd);
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "UsageError: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }

  try {
    return run(command, req, c);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
