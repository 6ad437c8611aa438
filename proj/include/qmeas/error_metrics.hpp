#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmeas/observables.hpp"

namespace qmeas {

// Probe family for the error-bar estimators. Centers and widths are in the
// units of the target observable (position, or momentum for a sharp-P
// target).
struct ProbeConfig {
  std::vector<double> x_samples;  // empty: 9 centers across +-0.9 of the half extent
  double delta = 0.0;             // 0: 4 grid cells
  std::size_t probes_per_center = 6;
  bool flat_box = true;
  bool phase_ramped = true;
  bool random_envelope = true;
  double eps = 0.1;
  double w_cutoff = 0.0;       // 0: 40% of the full grid extent
  double bisection_tol = 1e-9;  // windows are exact; this is the reported slack
  std::uint64_t seed = 7;
  bool record_trace = false;
};

struct ProbeTrace {
  double center = 0.0;
  std::string probe;  // e.g. "flat/w=0.125@left"
  double width = 0.0;
};

struct WidthEstimate {
  double value = 0.0;
  bool is_lower_bound = true;
  bool infinite_flag = false;
  bool is_closed_form = false;
  double witness_center = 0.0;
  std::string witness_probe;
  std::vector<ProbeTrace> trace;
};

std::string trace_to_json(const WidthEstimate& est, const std::string& estimator);

// Probe states localised exactly in J_{x;delta} for the target axis: box
// supports for position, momentum-bin supports for momentum. Each carries a
// short identifier.
struct Probe {
  std::string id;
  WaveFunction state;
};
std::vector<Probe> make_probes(const Grid& grid, Axis axis, double center, double delta, const ProbeConfig& cfg);
// Mass of the target observable outside J_{center;delta}. 0 for position
// boxes; roundoff for momentum bins.
double probe_leak(const WaveFunction& probe, Axis axis, double center, double delta);

// ---------------------------------------------------------------------------
// Wasserstein observable distance

struct DistanceScan {
  bool enabled = true;
  std::size_t points = 9;  // point probes from the center toward each grid edge
  double w_cutoff = 0.0;   // 0: 40% of the full grid extent
};

// max over the ensemble (and the divergence scan) of D_alpha(E(s), F(s)).
// alpha <= 0 or infinite selects D_infinity.
WidthEstimate observable_distance(const Observable& e, const Observable& f, double alpha,
                                  const std::vector<MixedState>& ensemble, const DistanceScan& scan = {});

// Closed forms
double delta1_smeared_closed_form(const GridMeasure& mu);
double pushforward_delta1_closed_form(double g_sup);
// (mu[|q|^alpha])^(1/alpha): distance of a smeared observable from its sharp
// version for any alpha >= 1.
double delta_alpha_smeared_closed_form(const GridMeasure& mu, double alpha);

// ---------------------------------------------------------------------------
// Error bars

WidthEstimate error_bar_width(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg);
WidthEstimate bias_free_error(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg);
// Gross minus bias-free on the same configuration.
double bias(const Observable& e1, const Observable& e, const Grid& grid, const ProbeConfig& cfg);

// Closed form W_eps(noise) for smeared and covariant-marginal observables,
// otherwise the probe estimate (an upper bound of the true width).
WidthEstimate resolution_width(const Observable& e, double eps, const Grid& grid, const ProbeConfig& cfg = {});
// Probe estimate only, no closed-form shortcut.
WidthEstimate resolution_width_estimate(const Observable& e, double eps, const Grid& grid, const ProbeConfig& cfg = {});

// ---------------------------------------------------------------------------
// Noise-based error

double noise_based_error(const Observable& a, const Observable& c, const MixedState& s);
WidthEstimate global_noise_error(const Observable& a, const Observable& c, const std::vector<MixedState>& ensemble);

}  // namespace qmeas
