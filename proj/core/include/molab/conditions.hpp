#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "molab/exponent_field.hpp"
#include "molab/phi.hpp"
#include "molab/report.hpp"

namespace molab {

enum class ConditionKind { A0, A0_prime, A1_prime, A1_equivalent, A2_prime };
const char* to_string(ConditionKind k);

struct ConditionReport {
  ConditionKind condition = ConditionKind::A0_prime;
  double beta = 1.0;
  json auxiliary = json::object();
  VerificationReport report;

  bool passed() const { return report.passed; }
  json to_json() const;
};

inline constexpr double kConditionTolerance = 1e-9;

// Phi(x, beta) <= 1 <= Phi(x, 1/beta) with 1/beta = 2 (1 + |a|) log(e + 1/2)^{r+}.
// Throws InvalidArgument when r+ < 0.
ConditionReport verify_A0(const PhiFunction& phi, const SampleSet& region);
double a0_beta(double a_sup, double r_plus);

struct BallSampling {
  std::size_t balls = 1000;
  std::size_t points_per_ball = 6;  // besides the center
  std::size_t t_points = 32;
  double min_radius = 1e-4;
  std::optional<double> max_radius;  // default (1/omega_n)^{1/n}
  std::uint64_t seed = kDefaultSeed;
  std::function<bool(const Point&)> inside;  // membership of Omega; bounding box of the region when empty
};

// Phi(x, beta t) <= Phi(y, t) for x, y in B and Phi(y, t) in [1, 1/|B|].
ConditionReport verify_A1_prime(const PhiFunction& phi, const SampleSet& region, double beta,
                                const BallSampling& sampling = {});

// Regularity constants entering the closed-form claim bounds. Negative
// constants are estimated on the region samples.
struct ClaimHypotheses {
  double p_holder = -1.0, p_alpha = 1.0;
  double q_holder = -1.0, q_alpha = 1.0;
  double r_loglog = -1.0;
};

struct ClaimConstants {
  double M_empirical = 1.0;
  double N_empirical = 1.0;
  double M_bound = 1.0;
  double N_bound = 1.0;
  double c0 = 0.0;
  double kappa = 1.0;    // c0 = r_loglog * kappa
  double K = 1.0;        // 1 + |a| log(e + 1)^{r+}
  double h_p_max = 1.0, h_q_max = 1.0;
  json witness_M, witness_N;
  std::size_t samples = 0;
  ClaimHypotheses hypotheses;

  bool within_bounds() const { return M_empirical <= M_bound && N_empirical <= N_bound; }
  json to_json() const;
};

// Empirical sup of t^{p(x)-p(y)}, t^{q(x)-q(y)} and log(e+t)^{r(x)-r(y)} over
// admissible (B, x, y, t) against M = max(K, K^{(q+ - q-)/p-}, max h_p, max h_q)
// and N = exp(c0 + c0 log n / log log(e + 1)).
ClaimConstants compute_claim_constants(const PhiFunction& phi, const SampleSet& region,
                                       const BallSampling& sampling = {},
                                       ClaimHypotheses hypotheses = {});

// (omega R^n)^{-c 2^alpha R^alpha / p-}, maximized over [0, omega^{-1/n}].
double claim_h_max(int dim, double c, double alpha, double p_min);

struct HolderBeta {
  double beta = 0.0;
  double S = 0.0;
  double tau = 1.0;
  json to_json() const;
};

// beta = safety (MN)^{-1/p-} [1 + c_a 2^gamma S]^{-1/p-}; needs (q/p)+ < 1 + gamma/n.
HolderBeta a1_holder_beta(const PhiFunction& phi, const SampleSet& region, const ClaimConstants& claims,
                          double c_a, double gamma, double safety = 0.999);

struct PairSampling {
  std::size_t random_pairs = 20000;
  double max_distance = 1.0;
  std::uint64_t seed = kDefaultSeed;
};

// beta a(y)^{1/q(y)} <= a(x)^{1/q(x)} + 1 / log(e + 1/|x-y|) over pairs with
// |x - y| <= 1, both orders. Pairs among graded points are all taken.
ConditionReport verify_A1_equivalent(const PhiFunction& phi, const SampleSet& region, double beta,
                                     const PairSampling& sampling = {});

// C = c_a^{1/q-} + c C_q with c = max(q+/e, |a| log |a|) bounding the
// log-Hölder modulus of a^{1/q} for a q+-Hölder a.
double a1_equivalent_constant(double c_a, double q_min, double q_max, double a_sup, double q_log_holder);

enum class A2Mode { bounded, nekvinda };

struct A2Options {
  A2Mode mode = A2Mode::bounded;
  double p_infty = 2.0;
  double c = 0.5;                  // Nekvinda constant
  std::optional<double> beta;      // nekvinda: default c / (2 K)
  NekvindaOptions nekvinda;
  std::size_t t_points = 64;
  double t_min = 1e-8;
};

ConditionReport verify_A2_prime(const PhiFunction& phi, const SampleSet& region, const A2Options& options = {});

}  // namespace molab
