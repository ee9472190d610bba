#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "molab/exponent_field.hpp"

namespace molab {

// Value of a Young-type function at t together with t times its derivative.
struct Probe {
  double value = 0.0;
  double t_deriv = 0.0;
};

// Same in log form: log value and elasticity t f'(t) / f(t).
struct LogProbe {
  double log_value = -kInf;
  double elasticity = 0.0;
};

struct InverseResult {
  double t = 0.0;
  bool non_monotone = false;  // smallest root taken
};

struct ConjugateOptions {
  std::size_t grid_points = 100000;
  double relative_tol = 1e-10;
};

struct ConjugateValue {
  double value = 0.0;   // +inf when unbounded
  double argmax = 0.0;  // maximizing t
};

// Phi(t) = t^p + a t^q log(e + t)^r at one point.
struct LocalPhi {
  double p = 2.0, q = 2.0, r = 0.0, a = 0.0;
  double log_a = -kInf;

  static LocalPhi from(const Coefficients& c);

  double value(double t) const;
  double log_value(double lt) const;  // log Phi(exp(lt))
  Probe probe(double lt) const;       // may overflow to +inf
  LogProbe log_probe(double lt) const;
  InverseResult inverse(double s) const;
  ConjugateValue conjugate(double s, const ConjugateOptions& opt = {}) const;
  // Phi is increasing on (0, inf) when q + r >= 0 or a == 0.
  bool surely_monotone() const { return a == 0.0 || q + r >= 0.0; }

  bool operator==(const LocalPhi&) const = default;
};

// Psi(t) = t^p* + A t^q* log(e + t/b)^s with A = a^(q*/q), b = a^((q-1)/q),
// s = r q*/q; the second term is 0 when a = 0.
struct LocalPsi {
  double p_star = 2.0, q_star = 2.0, s = 0.0;
  double log_A = -kInf, log_b = 0.0;

  static LocalPsi from(const Coefficients& c, int dim);

  double value(double t) const;
  double log_value(double lt) const;
  Probe probe(double lt) const;
  LogProbe log_probe(double lt) const;
  InverseResult inverse(double s) const;

  bool operator==(const LocalPsi&) const = default;
};

enum class PhiMode { general, equal };
const char* to_string(PhiMode m);

class PhiFunction {
 public:
  explicit PhiFunction(ExponentField field, PhiMode mode = PhiMode::general);

  const ExponentField& field() const { return field_; }
  PhiMode mode() const { return mode_; }
  int dim() const { return field_.dim(); }

  // Coefficients with q replaced by p in equal mode.
  Coefficients coefficients(const Point& x) const;
  LocalPhi at(const Point& x) const { return LocalPhi::from(coefficients(x)); }
  DeclaredBounds bounds_over(const SampleSet& samples) const;
  json to_json() const;

 private:
  ExponentField field_;
  PhiMode mode_;
};

double phi_eval(const PhiFunction& phi, const Point& x, double t);
InverseResult phi_inverse(const PhiFunction& phi, const Point& x, double s);
ConjugateValue phi_conjugate(const PhiFunction& phi, const Point& x, double s,
                             const ConjugateOptions& opt = {});

// n p / (n - p) for the chosen exponent; "supercritical exponent" when its
// supremum over the samples reaches n.
ScalarField sobolev_conjugate(const ExponentField& field, Component which, const SampleSet& samples);

class PsiFunction {
 public:
  PsiFunction(PhiFunction source, const SampleSet& samples);

  const PhiFunction& source() const { return source_; }
  int dim() const { return source_.dim(); }
  LocalPsi at(const Point& x) const { return LocalPsi::from(source_.coefficients(x), dim()); }

 private:
  PhiFunction source_;
};

// Validates p+ < n and q+ < n on the samples.
PsiFunction make_target_psi(const PhiFunction& phi, const SampleSet& samples);
double psi_eval(const PsiFunction& psi, const Point& x, double t);

// (alpha, beta) with (Inc)_alpha and (Dec)_beta: alpha = p-, beta = q+ + max(r+, 0).
std::pair<double, double> inc_dec_exponents(const PhiFunction& phi, const SampleSet& samples);

// Checks Phi(x,s)/s^alpha <= Phi(x,t)/t^alpha and Phi(x,t)/t^beta <= Phi(x,s)/s^beta
// for `pairs` random (x, s < t) with t in [2^-20, 2^20]. Margins are log ratios.
VerificationReport check_inc_dec(const PhiFunction& phi, const SampleSet& samples, double alpha,
                                 double beta, std::size_t pairs = 10000,
                                 std::uint64_t seed = kDefaultSeed);

// Ratio t^(-1/n) Phi^-1(x,t) / Psi^-1(x,t) over samples and a geometric t grid;
// passes when it stays within [1/kappa, kappa].
VerificationReport check_inverse_relation(const PhiFunction& phi, const PsiFunction& psi,
                                          const SampleSet& samples, double t_lo, double t_hi,
                                          double kappa, std::size_t t_points = 25);

}  // namespace molab
