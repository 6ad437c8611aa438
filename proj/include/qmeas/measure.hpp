#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qmeas {

// Slack used when comparing accumulated probability mass against a level.
inline constexpr double kMassTolerance = 1e-12;

// Library-wide defaults. Units follow the grid: positions in length units,
// momenta in hbar / length.
struct GlobalConfig {
  double hbar = 1.0;
  double infinity_cutoff = 0.0;  // 0 means "derive from the grid extent"
  std::uint64_t rng_seed = 7;
};

// Closed interval [center - width/2, center + width/2].
struct Interval {
  double center = 0.0;
  double width = 0.0;

  Interval() = default;
  Interval(double c, double w);

  double lo() const { return center - 0.5 * width; }
  double hi() const { return center + 0.5 * width; }
  bool contains(double x, double slack = 0.0) const {
    return x >= lo() - slack && x <= hi() + slack;
  }
};

// Finitely supported probability measure on the real line. Atoms are strictly increasing, weights are nonnegative and sum to one
// within 1e-12. Objects are immutable once constructed.
class GridMeasure {
 public:
  // Validates the invariants exactly as given; throws DomainError otherwise.
  GridMeasure(std::vector<double> atoms, std::vector<double> weights);

  // Sorts, merges coincident atoms, drops nothing, and rescales the weights to
  // unit mass. Use this for raw data; the plain constructor is for data that
  // already satisfies the invariants.
  static GridMeasure normalized(std::vector<double> atoms, std::vector<double> weights);

  static GridMeasure point(double at);
  // n equally spaced atoms on [a, b] with equal weights.
  static GridMeasure uniform(double a, double b, std::size_t n);
  // Gaussian density sampled at n equally spaced points on mean +- extent.
  static GridMeasure gaussian(double mean, double sd, std::size_t n, double extent);

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  double min_atom() const { return atoms_.front(); }
  double max_atom() const { return atoms_.back(); }
  bool is_point() const { return atoms_.size() == 1; }

  // Smallest gap between consecutive atoms; 0 for a point mass.
  double spacing() const;

 private:
  GridMeasure() = default;

  std::vector<double> atoms_;
  std::vector<double> weights_;
};

// A map of the real line used for pushforwards. Three closure forms exist:
// a strictly monotone piecewise-linear table, the identity plus a bounded
// perturbation with a declared sup bound, and a general bounded map.
class RealMap {
 public:
  enum class Kind { Table, Perturbation, Bounded };

  // Breakpoint table, linearly interpolated and extrapolated with the end
  // slopes. Throws DomainError unless strictly monotone.
  static RealMap table(std::vector<double> xs, std::vector<double> ys);
  // f(x) = x + g(x) with sup|g| <= g_sup.
  static RealMap identity_plus(std::function<double(double)> g, double g_sup,
                               std::string label = "perturbation");
  // Arbitrary map whose range lies in [-range_bound, range_bound].
  static RealMap bounded(std::function<double(double)> f, double range_bound,
                         std::string label = "bounded");
  static RealMap identity();

  double operator()(double x) const { return fn_(x); }
  Kind kind() const { return kind_; }
  // sup|f(x) - x| for Perturbation maps, range bound for Bounded maps,
  // 0 for tables.
  double bound() const { return bound_; }
  const std::string& label() const { return label_; }

 private:
  RealMap(Kind kind, std::function<double(double)> fn, double bound, std::string label);

  Kind kind_;
  std::function<double(double)> fn_;
  double bound_;
  std::string label_;
};

// Right-continuous CDF: total weight of atoms <= x.
double cdf(const GridMeasure& m, double x);
// Left-continuous generalised inverse inf{x : cdf(x) >= t}, t in (0, 1].
double quantile(const GridMeasure& m, double t);
// Raw moment sum w_i x_i^k, k >= 1.
double moment(const GridMeasure& m, int k);
// Absolute moment sum w_i |x_i|^p, p > 0.
double absolute_moment(const GridMeasure& m, double p);
double mean(const GridMeasure& m);
// inf_y (sum w_i |x_i - y|^alpha)^(1/alpha), alpha >= 1.
double alpha_deviation(const GridMeasure& m, double alpha);
double std_deviation(const GridMeasure& m);
// Shortest closed interval carrying at least 1 - eps of the mass, eps in [0, 1).
double overall_width(const GridMeasure& m, double eps);
// Mass inside a closed interval.
double interval_mass(const GridMeasure& m, const Interval& j);
// Smallest w with mass(J_{center; w}) >= 1 - eps. The window is pinned at
// `center`, unlike overall_width.
double centered_width(const GridMeasure& m, double center, double eps);

inline constexpr std::size_t kDefaultConvolutionCap = std::size_t{1} << 22;

// Distribution of the sum of independent draws, re-binned onto a uniform grid
// whose spacing is the finer of the two input spacings. Mass is split
// linearly between the two bracketing bins, which keeps the first moment.
GridMeasure convolve(const GridMeasure& a, const GridMeasure& b,
                     std::size_t max_atoms = kDefaultConvolutionCap);
GridMeasure translate(const GridMeasure& m, double shift);
// Image measure under f; coincident images are merged.
GridMeasure pushforward(const GridMeasure& m, const RealMap& f);
// Total variation distance, computed on the union of atoms.
double total_variation(const GridMeasure& a, const GridMeasure& b);

// CSV with header "x,w". Weights are renormalised on load; `renormalized`
// reports whether the stored total deviated from one by more than 1e-9.
GridMeasure load_measure_csv(const std::string& path, bool* renormalized = nullptr);
void save_measure_csv(const GridMeasure& m, const std::string& path);

}  // namespace qmeas
