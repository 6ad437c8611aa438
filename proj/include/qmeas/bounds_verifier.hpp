#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmeas/error_metrics.hpp"
#include "qmeas/observables.hpp"
#include "qmeas/quantum_state.hpp"

namespace qmeas {

// One checked inequality lhs >= rhs. pass <=> slack >= -tolerance. For
// relations whose lhs is built from lower-bound estimates a failure is
// reported as "inconclusive-lower-bound", never as a violation.
struct VerificationReport {
  std::string relation;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool lower_bound_semantics = false;
  bool lhs_infinite = false;
  std::string verdict;  // "pass", "fail" or "inconclusive-lower-bound"
  std::string inputs;
  std::uint64_t inputs_hash = 0;
  std::uint64_t seed = 0;
  std::string grid;
};

// Fills slack, pass, verdict and hash from the other fields.
void finalize_report(VerificationReport& r);
std::uint64_t fnv1a(const std::string& text);
std::string grid_spec(const Grid& g);

// Uffink constant and its weaker diagonal-exact companion.
double K(double eps1, double eps2);
double K_tilde(double eps1, double eps2);

// alpha^(1/beta) beta^(1/alpha) (g/(alpha+beta))^(1/alpha + 1/beta)
double c_alpha_beta_formula(double alpha, double beta, double g);

// Grid used for H = |x|^alpha + |p|^beta when none is given: self-dual for
// alpha = beta, otherwise +-12 on the side with the faster-decaying tail.
Grid default_ground_state_grid(double alpha, double beta, std::size_t n = 4096);
// Default solver options for (alpha, beta). For alpha = beta = 1 the ground
// state has algebraic tails and the boundary tolerance is relaxed to 1e-5.
GroundStateOptions default_ground_state_options(double alpha, double beta);

struct ConstantResult {
  double g = 0.0;
  double c = 0.0;
  GroundState ground;
};
ConstantResult c_alpha_beta(double alpha, double beta, const Grid& grid, const GroundStateOptions& opts);
ConstantResult c_alpha_beta(double alpha, double beta);

VerificationReport verify_preparation_ur(const MixedState& s, double alpha, double beta, double c_ab);
VerificationReport verify_overall_width_ur(const MixedState& s, double eps1, double eps2);
// Bias-free covariant report followed by the resolution-width report.
std::vector<VerificationReport> verify_covariant_error_ur(const MixedState& tau, double eps1, double eps2);
// Distances of the covariant marginals from Q and P from the probe
// estimator (lower bounds).
VerificationReport verify_metric_ur(const MixedState& tau, double alpha, double beta,
                                    const std::vector<MixedState>& ensemble, double c_ab);
// Same for an arbitrary pair (M1 approximating Q, M2 approximating P). A zero
// factor is accepted only when the partner is flagged infinite; otherwise the
// pair is rejected with a DomainError.
VerificationReport verify_metric_ur_pair(const Observable& m1, const Observable& m2, double alpha, double beta,
                                         const std::vector<MixedState>& ensemble, double c_ab,
                                         bool point_mass_rule);
VerificationReport verify_noise_ur(const MixedState& tau);

struct ConnectionInstance {
  Observable e1;  // smeared approximation
  Observable e;   // sharp target
  double eps = 0.1;
  double alpha = 1.0;
  ProbeConfig cfg;
  std::string label;
};
// Two reports per instance: error bar vs 2 Delta_alpha / eps^(1/alpha) and
// error bar vs 2 eps_NO (1 + sqrt(2/eps)). lhs holds the bound, rhs the
// estimate; tolerance 4 grid cells.
std::vector<VerificationReport> verify_connections(const std::vector<ConnectionInstance>& instances, const Grid& grid);

// Momentum-side no-go demonstration. M1 is sharp Q; M2 reports momentum
// values drawn from the position law smeared by nu (a function of Q).
// Probes are a cos^2 momentum window boosted to momentum n.
struct DivergenceStep {
  double boost = 0.0;
  std::vector<double> captured;  // M2 mass in J_{n; w'} for each w'
  double tent_gap = 0.0;         // |int h d rho^P - int h d rho^M2| for a tent at n of height n
  double d1 = 0.0;               // exact D_1 between the two laws
};
struct DivergenceTrace {
  double eps2 = 0.0;
  std::vector<double> windows;
  std::vector<DivergenceStep> steps;
  bool escapes = false;  // captured < 1 - eps2 for every window at the largest boost
  bool monotone = false;
};
DivergenceTrace demonstrate_sharp_marginal_divergence(const std::vector<double>& boosts, double eps2,
                                                      const std::vector<double>& windows);
std::string divergence_to_json(const DivergenceTrace& t);

// Named suites: preparation, overall-width, covariant, metric, noise,
// connections, all.
struct SuiteOptions {
  std::uint64_t seed = 7;
  double hbar = 1.0;
  std::size_t ensemble_size = 200;
};
std::vector<VerificationReport> run_suite(const std::string& name, const SuiteOptions& opts);

std::string reports_to_json(const std::vector<VerificationReport>& reports);
std::string reports_to_csv(const std::vector<VerificationReport>& reports);

}  // namespace qmeas
