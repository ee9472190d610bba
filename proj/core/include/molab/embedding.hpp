#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "molab/conditions.hpp"
#include "molab/domain.hpp"
#include "molab/modular.hpp"
#include "molab/phi.hpp"

namespace molab {

// ---------------------------------------------------------------- trials

enum class TrialKind { constant, radial_bump, tensor_bump, cutoff, trig };
const char* to_string(TrialKind k);

struct WaveTerm {
  std::array<int, 3> k{0, 0, 0};
  double amplitude = 0.0;
  double phase = 0.0;
};

// A smooth (or Lipschitz) test function with a closed-form gradient.
struct TrialSpec {
  TrialKind kind = TrialKind::constant;
  int dim = 2;
  Point center{};
  Point half_width{};       // tensor bumps
  double radius = 0.0;      // radial bumps, cutoffs (outer)
  double inner_radius = 0.0;
  Box frame{};              // trig periods
  std::vector<WaveTerm> waves;
  std::string label;

  // (u(y), |grad u(y)|)
  std::pair<double, double> eval(const Point& y) const;
  json to_json() const;
};

// Deterministic family over `box`: 40% radial bumps, 20% tensor bumps, 20%
// cutoffs at scales 1/2, 1/4, 1/8 of the box, the rest trigonometric sums.
std::vector<TrialSpec> trial_family(const Box& box, std::size_t count, std::uint64_t seed = kDefaultSeed);
SampledFunction sample_trial(const TrialSpec& spec, const std::shared_ptr<const Quadrature>& support);

// ------------------------------------------------------------ hypotheses

// (i): Hölder p, q, a with (q/p)+ < 1 + gamma/n and log-log-Hölder r.
// (ii): log-Hölder p, q and a^{1/q} log-Hölder.
enum class EmbeddingCase { holder, log_holder };
const char* to_string(EmbeddingCase c);

struct HypothesisOptions {
  EmbeddingCase which = EmbeddingCase::holder;
  double gamma = 1.0;        // Hölder exponent of a
  double p_alpha = 1.0;      // Hölder exponents of p and q
  double q_alpha = 1.0;
  std::size_t lattice = 9;   // per axis
  BallSampling balls;
  std::optional<Point> john_center;
  double john_threshold = 1e3;
};

struct HypothesisReport {
  bool certified = true;
  std::vector<std::string> failures;
  json sub_reports = json::array();
  double empirical_eta = 0.0;

  void require(bool ok, const std::string& what);
  json to_json() const;
};

HypothesisReport certify_embedding_hypotheses(const PhiFunction& phi, const Shape& shape,
                                              const HypothesisOptions& options = {});

// ---------------------------------------------------------------- trials

struct EmbeddingTrial {
  std::string label;
  double lhs = 0.0;    // |u|_Psi
  double rhs = 0.0;    // |u|_{W^{1,Phi}}
  double ratio = 0.0;
  std::size_t index = 0;
  json to_json() const;
};

struct EmbeddingResult {
  std::vector<EmbeddingTrial> trials;  // by decreasing ratio
  std::vector<double> running_max;     // in generation order
  double max_ratio = 0.0;
  std::size_t resolution = 0;
  json to_json() const;
};

// Throws InvalidArgument("hypotheses not certified") unless `hypotheses` passed.
EmbeddingResult run_embedding_trials(const PhiFunction& phi, const DiscretizedDomain& domain,
                                     const std::vector<TrialSpec>& family, const HypothesisReport& hypotheses);

// ------------------------------------------------------- indicator norms

enum class SignRegime { nonnegative, nonpositive, mixed };
const char* to_string(SignRegime r);
SignRegime parse_sign_regime(const std::string& s);

struct IndicatorBounds {
  double lower = 0.0;
  double upper = kInf;
};

// Two-sided bound on |1_A|_Phi for Phi = t^p (1 + a log(e + t)^r).
IndicatorBounds indicator_norm_bounds(SignRegime regime, double measure, double p_plus, double p_minus,
                                      double r_plus, double a_sup);

// Random unions of cell boxes with 0 < |A| <= max_measure.
std::vector<std::vector<std::size_t>> random_cell_unions(const DiscretizedDomain& domain, std::size_t count,
                                                         double max_measure, std::uint64_t seed = kDefaultSeed);

// Needs q = p. Throws on a regime that does not match the sign pattern of r
// on the support.
VerificationReport check_indicator_norm_bounds(const PhiFunction& phi, const std::shared_ptr<const Quadrature>& support,
                                               const std::vector<std::vector<std::size_t>>& sets, SignRegime regime);

// ------------------------------------------------------------ radius gap

struct CutoffRatio {
  double R = 0.0;
  double R_tilde = 0.0;
  double log_measure = -kInf;
  double log_lhs = -kInf;  // log |u|_Psi
  double log_rhs = -kInf;  // log |u|_{W^{1,Phi}}
  double log_ratio = -kInf;
  json to_json() const;
};

// Cutoff at the halving radius around x on B_R(x) ∩ Omega (planar shapes).
CutoffRatio cutoff_embedding_ratio(const PhiFunction& phi, const Shape& shape, const Point& x, double R);

// Links of R - R~ <= c2 |1_{B_R}|_Phi / |1_{B_R~}|_Psi, c2 = 2 c1, and the
// regime bound that follows from the indicator estimates.
VerificationReport check_radius_gap_lemma(const PhiFunction& phi, const Shape& shape, const Point& x, double R,
                                          double c1);

// ------------------------------------------------------------- necessity

struct NecessityOptions {
  std::size_t levels = 10;
  double min_radius = 0.0;            // stop below this radius
  std::optional<double> C1;           // embedding constant, when known
};

struct NecessityLevel {
  double R = 0.0;
  double log_measure = -kInf;
  double halving_error = 0.0;
  double p_plus = 0.0, p_minus = 0.0, r_plus = 0.0;
  double eta_R = 0.0;
  double log_density_plain = -kInf;  // log |A_R| / R^n
  double log_density_log = -kInf;    // log |A_R| / (R^n log(e + 1/R)^{-r+/eta})
  double implied_C1 = 0.0;           // smallest C1 making the gap estimate hold
  double lhs_AR = 0.0;               // log of |A_R| log(e + 1/|A_R|)^{r+_A / eta_R}
  double rhs_AR = 0.0;               // log of R^n R^{beta_R / eta_R}
};

struct NecessityTrace {
  Point x{};
  int dim = 2;
  double R0 = 0.0;
  std::vector<NecessityLevel> levels;
  double telescoping_sum = 0.0;   // sum (R_i - R_{i+1}) + R_L
  double telescoping_error = 0.0;
  double eta = 0.0;               // over A_{R0}
  double r_plus = 0.0;
  double a_sup = 0.0;
  std::optional<double> c3, c4;
  bool truncated = false;
  std::string truncation_reason;

  json to_json() const;
};

NecessityTrace run_necessity_trace(const PhiFunction& phi, const Shape& shape, const Point& x, double R0,
                                   const NecessityOptions& options = {});

struct SweepRow {
  double R = 0.0;
  double log_measure = -kInf;
  double log_density = -kInf;
  CutoffRatio cutoff;
};

struct NecessitySweep {
  std::vector<SweepRow> rows;  // R decreasing
  double r_plus = 0.0;
  double eta = 0.0;
  bool density_monotone = true;   // decreasing as R decreases
  double log_density_drop = 0.0;  // log(first / last)
  double log_ratio_growth = 0.0;  // log(last / first)
  json to_json() const;
};

NecessitySweep run_necessity_sweep(const PhiFunction& phi, const Shape& shape, const Point& x,
                                   const std::vector<double>& radii, bool with_cutoffs = true);

struct R0Threshold {
  double r0 = 0.0;
  double eta_tilde = 0.0;
  bool positive = false;
  json to_json() const;
};

// r0 = min(1/4, e^{-n C}/2) / 2 and eta~ = 1/n - C / log(1/(2 r0)).
R0Threshold compute_r0_threshold(double C_log, int dim);

// Sum_{i>=1} i^k 2^{-i eta}
double integral_test_sum(double k, double eta);
// Gamma(k + 1) / (eta ln 2)^{k + 1}
double integral_test_bound(double k, double eta);
VerificationReport check_integral_test(const std::vector<double>& ks, const std::vector<double>& etas);

}  // namespace molab
