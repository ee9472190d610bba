#include "molab/modular.hpp"

#include <algorithm>
#include <sstream>

#include <boost/math/tools/minima.hpp>

namespace molab {

// ------------------------------------------------------------------ families

YoungFamily::YoungFamily(std::shared_ptr<const Quadrature> support) : support_(std::move(support)) {
  if (!support_) throw InvalidArgument("null quadrature");
}

template <class Local, class Make>
void YoungFamily::build_slots(std::vector<Local>& locals, const Make& make) {
  slot_.resize(support_->size());
  for (std::size_t i = 0; i < support_->size(); ++i) {
    Local l = make(support_->nodes[i]);
    if (locals.empty() || !(l == locals.back())) locals.push_back(l);
    slot_[i] = locals.size() - 1;
  }
  slot_count_ = locals.size();
}

namespace {

template <class Local>
class LocalFamily final : public YoungFamily {
 public:
  template <class Make>
  LocalFamily(std::shared_ptr<const Quadrature> support, std::string label, const Make& make)
      : YoungFamily(std::move(support)), label_(std::move(label)) {
    build_slots(locals_, make);
  }
  Probe probe(std::size_t s, double lt) const override { return locals_[s].probe(lt); }
  LogProbe log_probe(std::size_t s, double lt) const override { return locals_[s].log_probe(lt); }
  std::string label() const override { return label_; }

 private:
  std::vector<Local> locals_;
  std::string label_;
};

struct LocalPower {
  double e = 1.0;
  Probe probe(double lt) const {
    const double v = std::exp(e * lt);
    return {v, e * v};
  }
  LogProbe log_probe(double lt) const { return {e * lt, e}; }
  bool operator==(const LocalPower&) const = default;
};

class ConjugateFamily final : public YoungFamily {
 public:
  ConjugateFamily(const PhiFunction& phi, std::shared_ptr<const Quadrature> support, const ConjugateOptions& opt)
      : YoungFamily(std::move(support)), opt_(opt) {
    build_slots(locals_, [&](const Point& x) {
      LocalPhi l = phi.at(x);
      if (!(l.p > 1.0)) throw InvalidArgument("conjugate norm needs p > 1");
      return l;
    });
  }
  Probe probe(std::size_t s, double lt) const override {
    if (lt == -kInf) return {};
    const double v = std::exp(lt);
    const ConjugateValue c = locals_[s].conjugate(v, opt_);
    return {c.value, v * c.argmax};
  }
  LogProbe log_probe(std::size_t s, double lt) const override {
    if (lt == -kInf) return {};
    const double v = std::exp(lt);
    const ConjugateValue c = locals_[s].conjugate(v, opt_);
    if (!(c.value > 0)) return {-kInf, 0.0};
    return {std::log(c.value), v * c.argmax / c.value};
  }
  std::string label() const override { return "Phi*"; }

 private:
  std::vector<LocalPhi> locals_;
  ConjugateOptions opt_;
};

}  // namespace

FamilyPtr phi_family(const PhiFunction& phi, std::shared_ptr<const Quadrature> support) {
  if (support && support->dim != phi.dim()) throw InvalidArgument("domain mismatch: dimension");
  return std::make_shared<LocalFamily<LocalPhi>>(std::move(support), "Phi",
                                                 [&](const Point& x) { return phi.at(x); });
}

FamilyPtr psi_family(const PsiFunction& psi, std::shared_ptr<const Quadrature> support) {
  if (support && support->dim != psi.dim()) throw InvalidArgument("domain mismatch: dimension");
  return std::make_shared<LocalFamily<LocalPsi>>(std::move(support), "Psi",
                                                 [&](const Point& x) { return psi.at(x); });
}

FamilyPtr conjugate_family(const PhiFunction& phi, std::shared_ptr<const Quadrature> support,
                           const ConjugateOptions& opt) {
  return std::make_shared<ConjugateFamily>(phi, std::move(support), opt);
}

FamilyPtr power_family(const ScalarField& exponent, std::shared_ptr<const Quadrature> support) {
  return std::make_shared<LocalFamily<LocalPower>>(std::move(support), "t^e", [&](const Point& x) {
    const double e = exponent(x);
    if (!(e >= 1.0) || !std::isfinite(e)) throw InvalidArgument("power exponent must be >= 1");
    return LocalPower{e};
  });
}

// -------------------------------------------------------------- evaluation

json NormResult::to_json() const {
  return {{"value", number_json(value)},
          {"log_value", number_json(log_value)},
          {"modular_at_value", number_json(modular_at_value)},
          {"iterations", iterations},
          {"log_space", log_space}};
}

namespace {

struct Prepared {
  const YoungFamily* family = nullptr;
  const Quadrature* quad = nullptr;
  std::vector<std::uint32_t> nodes;  // nonzero entries
  std::vector<double> log_abs;
  double weight_shift = 0.0;  // log of a common factor on all weights
};

std::vector<Prepared> prepare(const std::vector<ModularTerm>& terms) {
  std::vector<Prepared> out;
  for (const ModularTerm& term : terms) {
    if (!term.family || !term.values) throw InvalidArgument("incomplete modular term");
    const auto& v = *term.values;
    if (v.size() != term.family->size()) throw InvalidArgument("domain mismatch: value count");
    Prepared p;
    p.family = term.family.get();
    p.quad = term.family->support().get();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw InvalidArgument("non-finite function value");
      if (v[i] != 0.0) {
        p.nodes.push_back(static_cast<std::uint32_t>(i));
        p.log_abs.push_back(std::log(std::fabs(v[i])));
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct Sums {
  double log_s0 = -kInf;  // log rho
  double slope = 0.0;     // d log rho / d log t = S1 / S0
  bool log_space = false;
};

Sums evaluate(const std::vector<Prepared>& terms, double shift) {
  bool need_log = false;
  double s0 = 0.0, s1 = 0.0;
  for (const Prepared& t : terms) {
    if (t.quad->log_space) {
      need_log = true;
      break;
    }
    const auto& w = t.quad->weights;
    std::size_t prev_slot = static_cast<std::size_t>(-1);
    double prev_lt = kNaN;
    Probe pr;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      const std::size_t i = t.nodes[k];
      const double lt = t.log_abs[k] - shift;
      const std::size_t sl = t.family->slot(i);
      if (sl != prev_slot || lt != prev_lt) {
        pr = t.family->probe(sl, lt);
        prev_slot = sl;
        prev_lt = lt;
      }
      s0 += w[i] * pr.value;
      s1 += w[i] * pr.t_deriv;
    }
    if (t.weight_shift != 0.0) {
      // only subsampled terms carry a shift, and they come alone
      s0 *= std::exp(t.weight_shift);
      s1 *= std::exp(t.weight_shift);
    }
  }
  if (!need_log && std::isfinite(s0) && std::isfinite(s1) && s0 > 0.0 && s0 > 1e-280)
    return {std::log(s0), s1 / s0, false};

  LogSum a, b;
  for (const Prepared& t : terms) {
    const auto& lw = t.quad->log_weights;
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      const std::size_t i = t.nodes[k];
      const LogProbe lp = t.family->log_probe(t.family->slot(i), t.log_abs[k] - shift);
      const double l = lw[i] + t.weight_shift + lp.log_value;
      a.add(l);
      if (lp.elasticity > 0) b.add(l + std::log(lp.elasticity));
    }
  }
  Sums s;
  s.log_s0 = a.value();
  s.slope = std::exp(b.value() - s.log_s0);
  s.log_space = true;
  return s;
}

}  // namespace

double log_modular(const std::vector<ModularTerm>& terms, double log_scale) {
  const auto prepared = prepare(terms);
  bool any = false;
  for (const auto& p : prepared) any = any || !p.nodes.empty();
  if (!any) return -kInf;
  return evaluate(prepared, log_scale).log_s0;
}

namespace {

NormResult solve_norm(const std::vector<Prepared>& prepared, double ell, double tol, std::size_t max_iterations) {
  constexpr double kJump = 60.0 * kLn2;
  NormResult res;
  double lo = -kInf, hi = kInf;  // g(lo) > 0 > g(hi)
  double prev_step = kNaN;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const Sums s = evaluate(prepared, ell);
    ++res.iterations;
    res.log_space = res.log_space || s.log_space;
    // g(ell) = log rho(u e^-ell), g' = -slope
    const double g = s.log_s0;
    const double step = (std::isfinite(g) && s.slope > 0) ? g / s.slope : kNaN;
    // Newton error after this step is about C step^2 with C = |step| / prev_step^2
    const bool small = std::fabs(step) <= tol ||
                       (std::isfinite(prev_step) && std::fabs(step) < 1e-3 &&
                        std::fabs(step) * std::fabs(step) * std::fabs(step) / (prev_step * prev_step) <= 0.1 * tol);
    if (g == 0.0 || small) {
      const double next = g == 0.0 ? ell : ell + step;
      res.log_value = next;
      res.value = std::exp(next);
      res.modular_at_value = std::exp(g - s.slope * (next - ell));
      return res;
    }
    if (g > 0) lo = ell;
    else hi = ell;
    double next = ell + step;
    if (!(next > lo && next < hi)) {
      if (std::isfinite(lo) && std::isfinite(hi)) next = 0.5 * (lo + hi);
      else next = g > 0 ? ell + kJump : ell - kJump;
    }
    if (std::isfinite(lo) && std::isfinite(hi) && hi - lo <= tol) {
      res.log_value = next;
      res.value = std::exp(next);
      res.modular_at_value = std::exp(g - s.slope * (next - ell));
      return res;
    }
    prev_step = next - ell;
    ell = next;
  }
  throw NumericError("norm iteration did not converge");
}

// Pseudo-random 1/stride subset of the nonzero nodes, weights scaled by stride.
std::vector<Prepared> thin_out(const std::vector<Prepared>& prepared, std::size_t stride) {
  std::vector<Prepared> out;
  for (const Prepared& p : prepared) {
    Prepared t;
    t.family = p.family;
    t.quad = p.quad;
    t.weight_shift = p.weight_shift + std::log(static_cast<double>(stride));
    for (std::size_t k = 0; k < p.nodes.size(); ++k) {
      std::uint64_t z = (p.nodes[k] + 1) * 0x9E3779B97F4A7C15ULL;
      z = (z ^ (z >> 31)) * 0xBF58476D1CE4E5B9ULL;
      if ((z >> 20) % stride == 0) {
        t.nodes.push_back(p.nodes[k]);
        t.log_abs.push_back(p.log_abs[k]);
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

NormResult joint_norm(const std::vector<ModularTerm>& terms, const NormOptions& opt) {
  const auto prepared = prepare(terms);
  double lmax = -kInf;
  std::size_t count = 0;
  for (const auto& p : prepared) {
    count += p.nodes.size();
    for (double la : p.log_abs) lmax = std::max(lmax, la);
  }
  if (lmax == -kInf) return {};  // u = 0

  double ell = lmax;
  if (opt.initial_guess && *opt.initial_guess > 0 && std::isfinite(*opt.initial_guess)) {
    ell = std::log(*opt.initial_guess);
  } else if (count > 65536) {
    // coarse solve on a subsample for the starting point
    const auto thin = thin_out(prepared, count / 8192);
    bool any = false;
    for (const auto& t : thin) any = any || !t.nodes.empty();
    if (any) {
      const NormResult coarse = solve_norm(thin, lmax, 1e-6, opt.max_iterations);
      ell = coarse.log_value;
    }
  }
  return solve_norm(prepared, ell, opt.tolerance, opt.max_iterations);
}

namespace {

void check_support(const YoungFamily& family, const SampledFunction& u) {
  if (u.support.get() != family.support().get() &&
      (!u.support || u.support->size() != family.size() || u.support->nodes != family.support()->nodes))
    throw InvalidArgument("domain mismatch: function lives on another quadrature");
  u.validate();
}

}  // namespace

double log_modular(const FamilyPtr& family, const SampledFunction& u) {
  check_support(*family, u);
  return log_modular({{family, &u.values}});
}

double modular(const YoungFamily& family, const SampledFunction& u) {
  check_support(family, u);
  const Quadrature& q = *family.support();
  double s = 0.0;
  if (!q.log_space) {
    for (std::size_t i = 0; i < u.values.size(); ++i) {
      if (u.values[i] == 0.0) continue;
      s += q.weights[i] * family.probe(family.slot(i), std::log(std::fabs(u.values[i]))).value;
    }
    if (std::isfinite(s) && (s == 0.0 || s > 1e-280)) return s;
  }
  LogSum acc;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    if (u.values[i] == 0.0) continue;
    acc.add(q.log_weights[i] + family.log_probe(family.slot(i), std::log(std::fabs(u.values[i]))).log_value);
  }
  return std::exp(acc.value());
}

NormResult luxemburg_norm(const FamilyPtr& family, const SampledFunction& u, const NormOptions& opt) {
  check_support(*family, u);
  return joint_norm({{family, &u.values}}, opt);
}

double sobolev_modular(const FamilyPtr& family, const SampledFunction& u) {
  check_support(*family, u);
  if (!u.has_gradient()) throw InvalidArgument("missing gradient");
  SampledFunction g{u.support, u.grad_norm, {}};
  return modular(*family, u) + modular(*family, g);
}

NormResult sobolev_norm(const FamilyPtr& family, const SampledFunction& u, const NormOptions& opt) {
  check_support(*family, u);
  if (!u.has_gradient()) throw InvalidArgument("missing gradient");
  return joint_norm({{family, &u.values}, {family, &u.grad_norm}}, opt);
}

// ------------------------------------------------------------------- checks

namespace {

struct ExponentRange {
  double p_min = kInf, upper = -kInf, r_min = kInf;
};

ExponentRange exponent_range(const PhiFunction& phi, const Quadrature& support) {
  ExponentRange e;
  double q_max = -kInf, r_max = -kInf;
  for (const Point& x : support.nodes) {
    const Coefficients c = phi.coefficients(x);
    e.p_min = std::min(e.p_min, c.p);
    q_max = std::max(q_max, c.q);
    r_max = std::max(r_max, c.r);
    e.r_min = std::min(e.r_min, c.r);
  }
  e.upper = q_max + std::max(r_max, 0.0);
  return e;
}

}  // namespace

std::pair<double, double> sandwich_exponents(const PhiFunction& phi, const Quadrature& support) {
  const ExponentRange e = exponent_range(phi, support);
  return {e.p_min, e.upper};
}

VerificationReport check_norm_modular_sandwich(const PhiFunction& phi, const FamilyPtr& family,
                                               const std::vector<SampledFunction>& samples, bool sobolev) {
  VerificationReport rep("norm_modular_sandwich", 1e-9);
  const ExponentRange e = exponent_range(phi, *family->support());
  if (e.r_min < 0) throw InvalidArgument("sandwich bounds need r >= 0");
  rep.details["lower_exponent"] = e.p_min;
  rep.details["upper_exponent"] = e.upper;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const SampledFunction& u = samples[k];
    NormResult n;
    double lr;
    if (sobolev) {
      n = sobolev_norm(family, u);
      lr = std::log(sobolev_modular(family, u));
    } else {
      n = luxemburg_norm(family, u);
      lr = log_modular(family, u);
    }
    if (n.value == 0.0) {
      rep.record(0.0, [&] { return json{{"sample", k}, {"norm", 0.0}}; });
      continue;
    }
    const double a = e.p_min * n.log_value, b = e.upper * n.log_value;
    const double margin = std::min(lr - std::min(a, b), std::max(a, b) - lr);
    rep.record(margin, [&] {
      return json{{"sample", k}, {"norm", n.value}, {"modular", std::exp(lr)}};
    });
  }
  return rep;
}

VerificationReport check_unit_ball(const PhiFunction& phi, const FamilyPtr& family,
                                   const std::vector<SampledFunction>& samples, double tolerance) {
  VerificationReport rep("unit_ball", 0.0);
  rep.details["tolerance"] = tolerance;
  const ExponentRange e = exponent_range(phi, *family->support());
  std::size_t regimes[3] = {0, 0, 0};
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const NormResult n = luxemburg_norm(family, samples[k]);
    const double lr = log_modular(family, samples[k]);
    const double ln = n.log_value;
    double margin;
    int regime;
    if (n.value == 0.0) {
      regime = 0;
      margin = lr == -kInf ? 0.0 : -kInf;
    } else if (std::fabs(ln) <= tolerance) {
      regime = 1;
      margin = e.upper * std::fabs(ln) + tolerance - std::fabs(lr);
    } else {
      regime = ln < 0 ? 0 : 2;
      margin = ln < 0 ? -lr : lr;
    }
    ++regimes[regime];
    rep.record(margin, [&] {
      return json{{"sample", k}, {"norm", n.value}, {"modular", std::exp(lr)}, {"regime", regime}};
    });
  }
  rep.details["below"] = regimes[0];
  rep.details["at"] = regimes[1];
  rep.details["above"] = regimes[2];
  return rep;
}

VerificationReport check_holder_inequality(const FamilyPtr& phi_fam, const FamilyPtr& conj_fam,
                                           const std::vector<SampledFunction>& us,
                                           const std::vector<SampledFunction>& vs) {
  if (us.size() != vs.size()) throw InvalidArgument("Hoelder check needs paired samples");
  VerificationReport rep("holder_inequality", 1e-8);
  for (std::size_t k = 0; k < us.size(); ++k) {
    check_support(*phi_fam, us[k]);
    check_support(*conj_fam, vs[k]);
    const Quadrature& q = *phi_fam->support();
    LogSum lhs;
    for (std::size_t i = 0; i < us[k].values.size(); ++i) {
      const double uv = std::fabs(us[k].values[i] * vs[k].values[i]);
      if (uv > 0) lhs.add(q.log_weights[i] + std::log(uv));
    }
    const NormResult nu = luxemburg_norm(phi_fam, us[k]);
    const NormResult nv = luxemburg_norm(conj_fam, vs[k]);
    const double l = lhs.value();
    const double r = kLn2 + nu.log_value + nv.log_value;
    const double margin = l == -kInf ? 0.0 : r - l;
    rep.record(margin, [&] {
      return json{{"pair", k}, {"integral", number_json(std::exp(l))}, {"norm_u", nu.value}, {"norm_v", nv.value}};
    });
  }
  return rep;
}

// -------------------------------------------------- embedding certificates

LogYoung young_of(const PhiFunction& phi) {
  return {"Phi", [phi](const Point& x, double lt) { return phi.at(x).log_value(lt); }};
}

LogYoung young_power(const ScalarField& exponent) {
  return {"t^e", [exponent](const Point& x, double lt) { return exponent(x) * lt; }};
}

LogYoung young_log_power(const ScalarField& q, const ScalarField& r) {
  return {"t^q log^r", [q, r](const Point& x, double lt) {
            if (lt == -kInf) return -kInf;
            return q(x) * lt + r(x) * std::log(log_e_plus_exp(lt));
          }};
}

VerificationReport check_pointwise_embedding_certificate(const LogYoung& source, const LogYoung& target, double K,
                                                         const ScalarField& h, const Quadrature& support,
                                                         double t_lo, double t_hi, std::size_t t_points) {
  if (!(K > 0)) throw InvalidArgument("K must be positive");
  if (!(t_lo > 0 && t_hi > t_lo) || t_points < 2) throw InvalidArgument("bad t grid");
  VerificationReport rep("pointwise_embedding", 1e-12);
  const double lK = std::log(K);
  LogSum h_int;
  bool h_negative = false;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const Point& x = support.nodes[i];
    const double hx = h(x);
    if (hx < 0) h_negative = true;
    if (hx > 0) h_int.add(support.log_weights[i] + std::log(hx));
    const double lh = hx > 0 ? std::log(hx) : -kInf;
    for (std::size_t j = 0; j < t_points; ++j) {
      const double lt = std::log(t_lo) + (std::log(t_hi) - std::log(t_lo)) * j / (t_points - 1.0);
      const double rhs = log_add_exp(source.log_value(x, lt), lh);
      const double lhs = target.log_value(x, lt - lK);
      rep.record(rhs - lhs, [&] {
        return json{{"x", point_json(x, support.dim)}, {"t", std::exp(lt)}};
      });
    }
  }
  const double integral = std::exp(h_int.value());
  rep.details["K"] = K;
  rep.details["h_integral"] = integral;
  rep.details["source"] = source.label;
  rep.details["target"] = target.label;
  if (h_negative) rep.fail("h takes negative values");
  if (integral > 1.0 + 1e-12) rep.fail("integral of h exceeds 1");
  return rep;
}

double c_epsilon(double eps) {
  if (!(eps > 0)) throw InvalidArgument("eps must be positive");
  // f(s) = log(e + e^s) - e^{eps s}, maximized over s = log t
  auto f = [eps](double s) { return log_e_plus_exp(s) - std::exp(eps * s); };
  double best_s = -40.0, best = f(best_s);
  for (double s = -40.0; s <= 40.0 / eps; s += 0.05) {
    const double v = f(s);
    if (v > best) {
      best = v;
      best_s = s;
    }
  }
  const auto m = boost::math::tools::brent_find_minima([&](double s) { return -f(s); }, best_s - 0.05, best_s + 0.05, 50);
  return std::max({1.0, best, -m.second});
}

double c_power(double r) {
  if (r < 0) throw InvalidArgument("r must be nonnegative");
  return std::max(1.0, std::pow(2.0, r - 1.0));
}

json EmbeddingCertificate::to_json() const {
  return {{"K", K}, {"C_eps", c_eps}, {"C_r", c_r}, {"h", h.spec()}};
}

EmbeddingCertificate first_embedding_certificate(const ScalarField& q, double q_min, double r_plus, double eps,
                                                 double measure) {
  EmbeddingCertificate c;
  c.c_eps = c_epsilon(eps);
  c.c_r = c_power(r_plus);
  const double ce = std::pow(c.c_eps, r_plus);
  c.K = std::max({std::pow(2.0 * c.c_r, 1.0 / (q_min + eps * r_plus)), std::pow(2.0 * ce, 1.0 / q_min),
                  std::pow(ce * c.c_r * measure, 1.0 / q_min)});
  const double K = c.K, coef = ce * c.c_r;
  c.h = ScalarField(
      [q, K, coef](const Point& x) { return coef * std::pow(K, -q(x)); },
      json{{"kind", "certificate"}, {"form", "C_eps^r+ C_r K^-q(x)"}, {"coefficient", coef}, {"K", K}});
  return c;
}

EmbeddingCertificate third_embedding_certificate(const ScalarField& p, double p_min, double q_min, double a_sup,
                                                 double measure) {
  EmbeddingCertificate c;
  c.K = std::max({std::pow(2.0, 1.0 / p_min), std::pow(2.0 * a_sup, 1.0 / q_min), std::pow(measure, 1.0 / p_min)});
  const double K = c.K;
  c.h = ScalarField([p, K](const Point& x) { return std::pow(K, -p(x)); },
                    json{{"kind", "certificate"}, {"form", "K^-p(x)"}, {"K", K}});
  return c;
}

}  // namespace molab
