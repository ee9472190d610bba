#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "molab/phi.hpp"
#include "molab/quadrature.hpp"
#include "molab/report.hpp"

namespace molab {

// Young-type functions attached to the nodes of one quadrature. Nodes whose
// local function coincides with the previous node share a slot, so piecewise
// constant fields cost one evaluation per run of equal values.
class YoungFamily {
 public:
  virtual ~YoungFamily() = default;

  const std::shared_ptr<const Quadrature>& support() const { return support_; }
  std::size_t size() const { return slot_.size(); }
  std::size_t slot(std::size_t node) const { return slot_[node]; }
  std::size_t slot_count() const { return slot_count_; }

  virtual Probe probe(std::size_t slot, double lt) const = 0;
  virtual LogProbe log_probe(std::size_t slot, double lt) const = 0;
  virtual std::string label() const = 0;

 protected:
  explicit YoungFamily(std::shared_ptr<const Quadrature> support);
  template <class Local, class Make>
  void build_slots(std::vector<Local>& locals, const Make& make);

  std::shared_ptr<const Quadrature> support_;
  std::vector<std::size_t> slot_;
  std::size_t slot_count_ = 0;
};

using FamilyPtr = std::shared_ptr<const YoungFamily>;

// Phi(x_i, .) at every node.
FamilyPtr phi_family(const PhiFunction& phi, std::shared_ptr<const Quadrature> support);
// Psi(x_i, .) at every node.
FamilyPtr psi_family(const PsiFunction& psi, std::shared_ptr<const Quadrature> support);
// Phi*(x_i, .) by numerical maximization; needs p > 1 at every node.
FamilyPtr conjugate_family(const PhiFunction& phi, std::shared_ptr<const Quadrature> support,
                           const ConjugateOptions& opt = {256, 1e-12});
// t^{e(x_i)}; handy for variable-exponent Lebesgue norms.
FamilyPtr power_family(const ScalarField& exponent, std::shared_ptr<const Quadrature> support);

struct NormResult {
  double value = 0.0;
  double log_value = -kInf;        // log of value; finite even when value underflows
  double modular_at_value = 0.0;   // rho(u / value), 1 up to 1e-8 for u != 0
  std::size_t iterations = 0;
  bool log_space = false;          // sums were accumulated in log form

  json to_json() const;
};

struct NormOptions {
  std::optional<double> initial_guess;  // warm start for the norm
  double tolerance = 1e-12;             // on |delta log lambda|
  std::size_t max_iterations = 200;
};

// One (family, function) pair contributing Sum_i w_i F_i(|v_i|) to a modular.
struct ModularTerm {
  FamilyPtr family;
  const std::vector<double>* values = nullptr;
};

// log of Sum over terms of Sum_i w_i F_i(exp(log|v_i| - log_scale)).
double log_modular(const std::vector<ModularTerm>& terms, double log_scale = 0.0);
// Smallest lambda with joint modular of v / lambda <= 1.
NormResult joint_norm(const std::vector<ModularTerm>& terms, const NormOptions& opt = {});

double modular(const YoungFamily& family, const SampledFunction& u);
double log_modular(const FamilyPtr& family, const SampledFunction& u);
NormResult luxemburg_norm(const FamilyPtr& family, const SampledFunction& u, const NormOptions& opt = {});

// rho(u) + rho(|grad u|) and the matching norm.
double sobolev_modular(const FamilyPtr& family, const SampledFunction& u);
NormResult sobolev_norm(const FamilyPtr& family, const SampledFunction& u, const NormOptions& opt = {});

// Lower and upper exponents of the norm-modular sandwich: p- and
// q+ + max(r+, 0) over the support nodes (q = p in equal mode).
std::pair<double, double> sandwich_exponents(const PhiFunction& phi, const Quadrature& support);

VerificationReport check_norm_modular_sandwich(const PhiFunction& phi, const FamilyPtr& family,
                                               const std::vector<SampledFunction>& samples,
                                               bool sobolev = false);

// Norm below / at / above 1 must match modular below / at / above 1.
VerificationReport check_unit_ball(const PhiFunction& phi, const FamilyPtr& family,
                                   const std::vector<SampledFunction>& samples, double tolerance = 1e-7);

// int |u||v| <= 2 ||u||_Phi ||v||_Phi* for every pair (u_k, v_k).
VerificationReport check_holder_inequality(const FamilyPtr& phi_fam, const FamilyPtr& conj_fam,
                                           const std::vector<SampledFunction>& us,
                                           const std::vector<SampledFunction>& vs);

// Young-type function given by its log: (x, log t) -> log F(x, t).
struct LogYoung {
  std::string label;
  std::function<double(const Point&, double)> log_value;
};

LogYoung young_of(const PhiFunction& phi);
// t^{e(x)}
LogYoung young_power(const ScalarField& exponent);
// t^{q(x)} log(e + t)^{r(x)}
LogYoung young_log_power(const ScalarField& q, const ScalarField& r);

// Psi(x, t/K) <= Phi(x, t) + h(x) on the nodes of `support` for t in a
// geometric grid over [t_lo, t_hi], and int h <= 1.
VerificationReport check_pointwise_embedding_certificate(const LogYoung& source, const LogYoung& target,
                                                         double K, const ScalarField& h,
                                                         const Quadrature& support, double t_lo = 1e-6,
                                                         double t_hi = 1e6, std::size_t t_points = 121);

// sup_{t >= 0} (log(e + t) - t^eps), at least 1.
double c_epsilon(double eps);
// (A + B)^r <= C_r (A^r + B^r) for A, B >= 0: C_r = max(1, 2^(r-1)).
double c_power(double r);

struct EmbeddingCertificate {
  double K = 0.0;
  double c_eps = 1.0;
  double c_r = 1.0;
  ScalarField h;
  json to_json() const;
};

// L^{q + eps r+} into L^q log L^r.
EmbeddingCertificate first_embedding_certificate(const ScalarField& q, double q_min, double r_plus, double eps,
                                                 double measure);
// L^q log L^r into L^Phi, needs bounded a.
EmbeddingCertificate third_embedding_certificate(const ScalarField& p, double p_min, double q_min, double a_sup,
                                                 double measure);

}  // namespace molab
