#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "molab/common.hpp"
#include "molab/report.hpp"

namespace molab {

// A scalar function on R^n together with a serializable description.
class ScalarField {
 public:
  using Function = std::function<double(const Point&)>;

  ScalarField();  // constant 0
  ScalarField(Function f, json spec, std::optional<double> constant = std::nullopt);

  static ScalarField constant(double value);
  // offset + gradient . x
  static ScalarField affine(double offset, const std::vector<double>& gradient);
  // base + slope * |x - center|^power
  static ScalarField radial(const Point& center, int dim, double base, double slope, double power);
  // base + height * (1 - |x - center|^2 / radius^2)^2 inside the ball, base outside
  static ScalarField bump(const Point& center, int dim, double radius, double base, double height);
  // below for x[axis] < at, above otherwise
  static ScalarField step(int axis, double at, double below, double above);
  static ScalarField expression(const std::string& text, int dim);
  // Not serializable; the spec records only the label.
  static ScalarField custom(Function f, const std::string& label);
  static ScalarField from_json(const json& spec, int dim);

  double operator()(const Point& x) const { return f_(x); }
  const json& spec() const { return spec_; }
  std::optional<double> constant_value() const { return constant_; }

  // x -> g(f(x))
  ScalarField map(const std::function<double(double)>& g, const std::string& label) const;

 private:
  Function f_;
  json spec_;
  std::optional<double> constant_;
};

// Finite point sample of a region. Points from index `graded_begin` on come
// from refinement toward flagged singular points.
struct SampleSet {
  int dim = 2;
  std::vector<Point> points;
  std::size_t graded_begin = 0;
  std::string resolution;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  // per_axis^dim lattice over the closed box (endpoints included).
  static SampleSet lattice(const Box& box, std::size_t per_axis);
  static SampleSet from_points(int dim, std::vector<Point> points, std::string resolution);

  // Adds the center and rings at distances radius * 2^-k, k < levels, with
  // `directions` points per ring. Points rejected by `keep` are skipped.
  SampleSet& refine_near(const Point& center, int levels, int directions, double radius,
                         const std::function<bool(const Point&)>& keep = {});

  SampleSet filtered(const std::function<bool(const Point&)>& keep) const;
};

enum class Component { p, q, r, a };
const char* to_string(Component c);

struct Coefficients {
  double p = 2.0;
  double q = 2.0;
  double r = 0.0;
  double a = 0.0;
};

struct DeclaredBounds {
  double p_min = kInf, p_max = -kInf;
  double q_min = kInf, q_max = -kInf;
  double r_min = kInf, r_max = -kInf;
  double a_min = kInf, a_max = -kInf;
  std::size_t samples = 0;
  std::string resolution;

  json to_json() const;
};

// The tuple (p, q, r, a) on R^n.
class ExponentField {
 public:
  ExponentField(int dim, ScalarField p, ScalarField q, ScalarField r, ScalarField a);

  // Validates 1 <= p <= q, a >= 0 and finite r on the samples and caches the
  // bounds. Throws InvalidArgument on violation.
  static ExponentField theorem_mode(int dim, ScalarField p, ScalarField q, ScalarField r,
                                    ScalarField a, const SampleSet& samples);
  static ExponentField from_json(const json& spec, int dim);

  int dim() const { return dim_; }
  const ScalarField& component(Component c) const;
  double operator()(Component c, const Point& x) const { return component(c)(x); }
  Coefficients at(const Point& x) const;

  DeclaredBounds bounds_over(const SampleSet& samples) const;
  const std::optional<DeclaredBounds>& declared_bounds() const { return declared_; }

  // Same field with q replaced by p.
  ExponentField with_q_equal_p() const;

  json to_json() const;

 private:
  int dim_;
  ScalarField p_, q_, r_, a_;
  std::optional<DeclaredBounds> declared_;
};

std::pair<double, double> infsup_over(const ScalarField& f, const SampleSet& samples);
std::pair<double, double> infsup_over(const ExponentField& field, const SampleSet& samples,
                                      Component which);

enum class RegularityKind { log_holder, loglog_holder, holder, nekvinda };
const char* to_string(RegularityKind k);

struct RegularityEstimate {
  RegularityKind kind = RegularityKind::log_holder;
  double gamma = 0.0;  // Hölder exponent when kind == holder
  double constant = 0.0;
  Point x{}, y{};      // witness pair
  int dim = 2;
  std::size_t pairs = 0;
  std::string resolution;

  json to_json() const;
};

struct PairOptions {
  std::size_t max_pairs = 1'000'000;
  std::uint64_t seed = kDefaultSeed;
};

// sup |f(x) - f(y)| log(e + 1/|x - y|)
RegularityEstimate estimate_log_holder(const ScalarField& f, const SampleSet& samples,
                                       const PairOptions& options = {});
// sup |f(x) - f(y)| log(e + log(e + 1/|x - y|))
RegularityEstimate estimate_loglog_holder(const ScalarField& f, const SampleSet& samples,
                                          const PairOptions& options = {});
// sup |f(x) - f(y)| / |x - y|^gamma, 0 < gamma <= 1
RegularityEstimate estimate_holder(const ScalarField& f, const SampleSet& samples, double gamma,
                                   const PairOptions& options = {});

RegularityEstimate estimate_log_holder(const ExponentField& field, const SampleSet& samples,
                                       Component which, const PairOptions& options = {});
RegularityEstimate estimate_loglog_holder(const ExponentField& field, const SampleSet& samples,
                                          const PairOptions& options = {});
RegularityEstimate estimate_holder(const ExponentField& field, const SampleSet& samples,
                                   double gamma, Component which, const PairOptions& options = {});

struct NekvindaOptions {
  Point center{};
  int max_shells = 40;
  double rel_tol = 1e-8;
  int stable_shells = 3;
};

struct NekvindaResult {
  bool passes = false;
  double integral = 0.0;
  std::vector<double> radii;     // outer radius after each shell
  std::vector<double> partials;  // integral over the ball of that radius

  json to_json() const;
};

// Integral over R^n of c^(1 / |1/p_infty - 1/p(x)|) on {p != p_infty}, by
// shells of doubling radius. p_infty may be +inf.
NekvindaResult check_nekvinda(const ScalarField& p, int dim, double p_infty, double c,
                              const NekvindaOptions& options = {});

// Samples balls B inside `region` with |B| <= 1 and points x, y in B and
// checks |B|^-(|1/p(x) - 1/p(y)|) against
// exp(C (log(1/omega_n) + n log(1/rho)) / log(e + 1/(2 rho))),
// C the log-Hölder constant of 1/p on the region.
VerificationReport check_ball_oscillation_lemma(const ScalarField& p, const Box& region,
                                                std::size_t trials,
                                                std::uint64_t seed = kDefaultSeed);

// max over sampled x, y in B(center, rho) of |B|^-(|1/p(x) - 1/p(y)|) per radius.
std::vector<double> ball_oscillation_sweep(const ScalarField& p, int dim, const Point& center,
                                           const std::vector<double>& radii,
                                           std::size_t points_per_ball = 64,
                                           std::uint64_t seed = kDefaultSeed);

// Uniform point in the ball B(center, radius).
template <class Rng>
Point sample_in_ball(Rng& rng, const Point& center, double radius, int dim);

}  // namespace molab

#include "molab/detail/sampling.hpp"
