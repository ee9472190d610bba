#include "molab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace molab {

// ---------------------------------------------------------------- trials

const char* to_string(TrialKind k) {
  switch (k) {
    case TrialKind::constant: return "constant";
    case TrialKind::radial_bump: return "radial_bump";
    case TrialKind::tensor_bump: return "tensor_bump";
    case TrialKind::cutoff: return "cutoff";
    case TrialKind::trig: return "trig";
  }
  return "?";
}

std::pair<double, double> TrialSpec::eval(const Point& y) const {
  switch (kind) {
    case TrialKind::constant:
      return {1.0, 0.0};
    case TrialKind::radial_bump: {
      const double d = distance(y, center, dim);
      if (d >= radius) return {0.0, 0.0};
      const double s = 1.0 - d * d / (radius * radius);
      return {s * s, 4.0 * s * d / (radius * radius)};
    }
    case TrialKind::tensor_bump: {
      double c[kMaxDim], g[kMaxDim];
      for (int k = 0; k < dim; ++k) {
        const double d = y[k] - center[k];
        if (std::fabs(d) >= half_width[k]) return {0.0, 0.0};
        const double th = 0.5 * kPi * d / half_width[k];
        c[k] = std::cos(th) * std::cos(th);
        g[k] = -std::sin(2.0 * th) * 0.5 * kPi / half_width[k];
      }
      double u = 1.0, g2 = 0.0;
      for (int k = 0; k < dim; ++k) u *= c[k];
      for (int k = 0; k < dim; ++k) {
        double partial = g[k];
        for (int j = 0; j < dim; ++j)
          if (j != k) partial *= c[j];
        g2 += partial * partial;
      }
      return {u, std::sqrt(g2)};
    }
    case TrialKind::cutoff: {
      const double d = distance(y, center, dim);
      if (d <= inner_radius) return {1.0, 0.0};
      if (d >= radius) return {0.0, 0.0};
      return {(radius - d) / (radius - inner_radius), 1.0 / (radius - inner_radius)};
    }
    case TrialKind::trig: {
      double u = 1.0;
      double g[kMaxDim] = {0.0, 0.0, 0.0};
      for (const WaveTerm& w : waves) {
        double arg = w.phase;
        for (int k = 0; k < dim; ++k) arg += 2.0 * kPi * w.k[k] * (y[k] - frame.lo[k]) / frame.extent(k);
        u += w.amplitude * std::cos(arg);
        const double s = -w.amplitude * std::sin(arg);
        for (int k = 0; k < dim; ++k) g[k] += s * 2.0 * kPi * w.k[k] / frame.extent(k);
      }
      double g2 = 0.0;
      for (int k = 0; k < dim; ++k) g2 += g[k] * g[k];
      return {u, std::sqrt(g2)};
    }
  }
  return {0.0, 0.0};
}

json TrialSpec::to_json() const {
  json j{{"kind", to_string(kind)}, {"label", label}};
  switch (kind) {
    case TrialKind::constant: break;
    case TrialKind::radial_bump:
      j["center"] = point_json(center, dim);
      j["radius"] = radius;
      break;
    case TrialKind::tensor_bump:
      j["center"] = point_json(center, dim);
      j["half_width"] = point_json(half_width, dim);
      break;
    case TrialKind::cutoff:
      j["center"] = point_json(center, dim);
      j["radius"] = radius;
      j["inner_radius"] = inner_radius;
      break;
    case TrialKind::trig: {
      json w = json::array();
      for (const WaveTerm& t : waves)
        w.push_back({{"k", std::vector<int>(t.k.begin(), t.k.begin() + dim)},
                     {"amplitude", t.amplitude},
                     {"phase", t.phase}});
      j["waves"] = w;
      break;
    }
  }
  return j;
}

std::vector<TrialSpec> trial_family(const Box& box, std::size_t count, std::uint64_t seed) {
  const int n = box.dim;
  double side = kInf;
  for (int k = 0; k < n; ++k) side = std::min(side, box.extent(k));
  const std::size_t n_rad = (4 * count + 5) / 10;
  const std::size_t n_ten = (2 * count + 5) / 10;
  const std::size_t n_cut = (2 * count + 5) / 10;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto inner_point = [&](double margin) {
    Point c{};
    for (int k = 0; k < n; ++k) c[k] = box.lo[k] + box.extent(k) * (margin + (1.0 - 2.0 * margin) * unit(rng));
    return c;
  };
  std::vector<TrialSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    TrialSpec t;
    t.dim = n;
    if (i < n_rad) {
      t.kind = TrialKind::radial_bump;
      t.center = inner_point(0.2);
      t.radius = side * (0.15 + 0.3 * unit(rng));
    } else if (i < n_rad + n_ten) {
      t.kind = TrialKind::tensor_bump;
      t.center = inner_point(0.2);
      for (int k = 0; k < n; ++k) t.half_width[k] = box.extent(k) * (0.1 + 0.2 * unit(rng));
    } else if (i < n_rad + n_ten + n_cut) {
      t.kind = TrialKind::cutoff;
      t.center = inner_point(0.1);
      t.radius = side * 0.5 / static_cast<double>(1u << ((i - n_rad - n_ten) % 3));
      t.inner_radius = 0.5 * t.radius;
    } else {
      t.kind = TrialKind::trig;
      t.frame = box;
      for (int m = 0; m < 3; ++m) {
        WaveTerm w;
        do {
          for (int k = 0; k < n; ++k) w.k[k] = static_cast<int>(rng() % 3);
        } while (w.k[0] == 0 && w.k[1] == 0 && w.k[2] == 0);
        w.amplitude = unit(rng) - 0.5;
        w.phase = 2.0 * kPi * unit(rng);
        t.waves.push_back(w);
      }
    }
    t.label = std::string(to_string(t.kind)) + "#" + std::to_string(i);
    out.push_back(std::move(t));
  }
  return out;
}

SampledFunction sample_trial(const TrialSpec& spec, const std::shared_ptr<const Quadrature>& support) {
  SampledFunction f;
  f.support = support;
  f.values.resize(support->size());
  f.grad_norm.resize(support->size());
  for (std::size_t i = 0; i < support->size(); ++i) {
    const auto [u, g] = spec.eval(support->nodes[i]);
    f.values[i] = u;
    f.grad_norm[i] = g;
  }
  return f;
}

// ------------------------------------------------------------ hypotheses

const char* to_string(EmbeddingCase c) { return c == EmbeddingCase::holder ? "holder" : "log_holder"; }

void HypothesisReport::require(bool ok, const std::string& what) {
  if (!ok) {
    certified = false;
    failures.push_back(what);
  }
}

json HypothesisReport::to_json() const {
  return {{"certified", certified}, {"failures", failures}, {"sub_reports", sub_reports},
          {"empirical_eta", empirical_eta}};
}

HypothesisReport certify_embedding_hypotheses(const PhiFunction& phi, const Shape& shape,
                                              const HypothesisOptions& opt) {
  HypothesisReport rep;
  const int n = phi.dim();
  if (shape.dim() != n) throw InvalidArgument("dimension mismatch between field and domain");
  const SampleSet region = SampleSet::lattice(shape.bounding_box(), opt.lattice)
                               .filtered([&](const Point& x) { return shape.contains(x); });
  if (region.size() < 2) throw InvalidArgument("too few interior samples for certification");
  // exponent ranges are suprema over the closure, so boundary samples join the lattice
  SampleSet closure = region;
  const std::vector<Point> rim = shape.boundary_points(std::max<std::size_t>(64, opt.lattice * opt.lattice));
  closure.points.insert(closure.points.end(), rim.begin(), rim.end());
  const DeclaredBounds b = phi.bounds_over(closure);
  const double q_max = phi.mode() == PhiMode::equal ? b.p_max : b.q_max;
  double qp_max = 0.0;
  bool ordered = true;
  for (const Point& x : closure.points) {
    const Coefficients c = phi.coefficients(x);
    qp_max = std::max(qp_max, c.q / c.p);
    ordered = ordered && c.p >= 1.0 && c.p <= c.q && c.a >= 0.0;
  }
  json basic{{"name", "exponent ranges"},
             {"bounds", b.to_json()},
             {"p_plus_r_plus", b.p_max + b.r_max},
             {"dec_exponent", q_max + std::max(b.r_max, 0.0)},
             {"q_over_p_plus", qp_max}};
  rep.sub_reports.push_back(basic);
  rep.require(ordered, "1 <= p <= q and a >= 0");
  rep.require(b.r_min >= 0.0, "r >= 0");
  rep.require(b.p_max + b.r_max < n, "p+ + r+ < n");
  rep.require(q_max + std::max(b.r_max, 0.0) < n, "Dec exponent q+ + r+ < n");
  rep.empirical_eta = 1.0 / n + (1.0 / b.p_max - 1.0 / b.p_min);

  const ExponentField& field = phi.field();
  const Component qc = phi.mode() == PhiMode::equal ? Component::p : Component::q;
  const ConditionReport a0 = verify_A0(phi, region);
  rep.sub_reports.push_back(a0.to_json());
  rep.require(a0.passed(), "A0'");

  if (opt.which == EmbeddingCase::holder) {
    const RegularityEstimate hp = estimate_holder(field, region, opt.p_alpha, Component::p);
    const RegularityEstimate hq = estimate_holder(field, region, opt.q_alpha, qc);
    const RegularityEstimate ha = estimate_holder(field, region, opt.gamma, Component::a);
    const RegularityEstimate hr = estimate_loglog_holder(field, region);
    rep.sub_reports.push_back({{"name", "regularity"},
                               {"p", hp.to_json()},
                               {"q", hq.to_json()},
                               {"a", ha.to_json()},
                               {"r", hr.to_json()}});
    rep.require(std::isfinite(hp.constant) && std::isfinite(hq.constant) && std::isfinite(ha.constant) &&
                    std::isfinite(hr.constant),
                "finite regularity constants");
    rep.require(qp_max < 1.0 + opt.gamma / n, "(q/p)+ < 1 + gamma/n");
    if (rep.certified) {
      ClaimHypotheses h;
      h.p_holder = hp.constant;
      h.p_alpha = opt.p_alpha;
      h.q_holder = hq.constant;
      h.q_alpha = opt.q_alpha;
      h.r_loglog = hr.constant;
      BallSampling balls = opt.balls;
      if (!balls.inside) balls.inside = [&shape](const Point& z) { return shape.contains(z); };
      const ClaimConstants claims = compute_claim_constants(phi, region, balls, h);
      const HolderBeta hb = a1_holder_beta(phi, region, claims, ha.constant, opt.gamma);
      json cj = claims.to_json();
      cj["name"] = "claim constants";
      cj["holder_beta"] = hb.to_json();
      rep.sub_reports.push_back(cj);
      rep.require(claims.within_bounds(), "claim constants within closed-form bounds");
      const ConditionReport a1 = verify_A1_prime(phi, region, hb.beta, balls);
      rep.sub_reports.push_back(a1.to_json());
      rep.require(a1.passed(), "A1'");
    }
  } else {
    const RegularityEstimate lp = estimate_log_holder(field, region, Component::p);
    const RegularityEstimate lq = estimate_log_holder(field, region, qc);
    const ScalarField aq = ScalarField::custom(
        [&phi](const Point& x) {
          const Coefficients c = phi.coefficients(x);
          return c.a > 0.0 ? std::pow(c.a, 1.0 / c.q) : 0.0;
        },
        "a^(1/q)");
    const RegularityEstimate la = estimate_log_holder(aq, region);
    rep.sub_reports.push_back(
        {{"name", "regularity"}, {"p", lp.to_json()}, {"q", lq.to_json()}, {"a_pow_1_over_q", la.to_json()}});
    rep.require(std::isfinite(lp.constant) && std::isfinite(lq.constant) && std::isfinite(la.constant),
                "finite log-Hölder constants");
    const double beta = 1.0 / std::max(1.0, la.constant);
    const ConditionReport eq = verify_A1_equivalent(phi, region, beta);
    rep.sub_reports.push_back(eq.to_json());
    rep.require(eq.passed(), "A1 equivalent form");
  }

  const ConditionReport a2 = verify_A2_prime(phi, region);
  rep.sub_reports.push_back(a2.to_json());
  rep.require(a2.passed(), "A2'");

  const auto [alpha, beta] = inc_dec_exponents(phi, region);
  VerificationReport incdec = check_inc_dec(phi, region, alpha, beta, 4000);
  incdec.details["alpha"] = alpha;
  incdec.details["beta"] = beta;
  rep.sub_reports.push_back(incdec.to_json());
  rep.require(incdec.passed, "Inc/Dec");

  const Box bb = shape.bounding_box();
  Point x0{};
  for (int k = 0; k < n; ++k) x0[k] = 0.5 * (bb.lo[k] + bb.hi[k]);
  if (opt.john_center) x0 = *opt.john_center;
  if (!shape.contains(x0)) throw InvalidArgument("John center must lie in the domain");
  std::vector<Point> targets;
  const std::size_t stride = std::max<std::size_t>(1, region.size() / 64);
  for (std::size_t i = 0; i < region.size(); i += stride) targets.push_back(region.points[i]);
  JohnOptions jo;
  jo.threshold = opt.john_threshold;
  const JohnWitness jw = john_witness(shape, x0, targets, jo);
  rep.sub_reports.push_back({{"name", "john"}, {"result", jw.to_json()}});
  rep.require(jw.verdict == "no witness found", "no John violation witness");
  return rep;
}

json EmbeddingTrial::to_json() const {
  return {{"label", label}, {"index", index}, {"lhs", lhs}, {"rhs", rhs}, {"ratio", ratio}};
}

json EmbeddingResult::to_json() const {
  json t = json::array();
  for (const auto& tr : trials) t.push_back(tr.to_json());
  return {{"max_ratio", max_ratio}, {"resolution", resolution}, {"running_max", running_max}, {"trials", t}};
}

EmbeddingResult run_embedding_trials(const PhiFunction& phi, const DiscretizedDomain& domain,
                                     const std::vector<TrialSpec>& family, const HypothesisReport& hypotheses) {
  if (!hypotheses.certified) throw InvalidArgument("hypotheses not certified");
  const auto& cells = domain.cells();
  const SampleSet nodes = SampleSet::from_points(domain.dim(), cells->nodes, "cells");
  const PsiFunction psi = make_target_psi(phi, nodes);
  const FamilyPtr fphi = phi_family(phi, cells);
  const FamilyPtr fpsi = psi_family(psi, cells);
  EmbeddingResult res;
  res.resolution = domain.resolution();
  double running = 0.0;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const SampledFunction u = sample_trial(family[i], cells);
    EmbeddingTrial t;
    t.label = family[i].label;
    t.index = i;
    t.lhs = luxemburg_norm(fpsi, u).value;
    t.rhs = sobolev_norm(fphi, u).value;
    t.ratio = t.rhs > 0.0 ? t.lhs / t.rhs : 0.0;
    if (!std::isfinite(t.ratio)) throw NumericError("non-finite embedding ratio for " + t.label);
    running = std::max(running, t.ratio);
    res.running_max.push_back(running);
    res.trials.push_back(std::move(t));
  }
  std::stable_sort(res.trials.begin(), res.trials.end(),
                   [](const EmbeddingTrial& a, const EmbeddingTrial& b) { return a.ratio > b.ratio; });
  res.max_ratio = running;
  return res;
}

// ------------------------------------------------------- indicator norms

const char* to_string(SignRegime r) {
  switch (r) {
    case SignRegime::nonnegative: return "r>=0";
    case SignRegime::nonpositive: return "r<=0";
    case SignRegime::mixed: return "mixed";
  }
  return "?";
}

SignRegime parse_sign_regime(const std::string& s) {
  if (s == "r>=0" || s == "nonnegative") return SignRegime::nonnegative;
  if (s == "r<=0" || s == "nonpositive") return SignRegime::nonpositive;
  if (s == "mixed") return SignRegime::mixed;
  throw ConfigError("unknown sign regime '" + s + "'");
}

IndicatorBounds indicator_norm_bounds(SignRegime regime, double measure, double p_plus, double p_minus,
                                      double r_plus, double a_sup) {
  if (!(measure > 0.0)) throw InvalidArgument("indicator bounds need |A| > 0");
  const double lm = std::log(measure);
  const double lo_plus = lm / p_plus, lo_minus = lm / p_minus;
  IndicatorBounds b;
  const double scale = std::log1p(a_sup) / p_minus;
  if (regime == SignRegime::mixed) {
    if (!(measure < 0.5)) throw InvalidArgument("mixed regime needs |A| < 1/2");
    b.lower = std::exp(lo_minus);
    const double r = std::max(r_plus, 0.0);
    const double t1 = lo_plus + r * std::log(std::log(kE + 1.0 / measure));
    const double t2 = lo_minus + r * std::log(std::log(1.0 + kE));
    b.upper = std::exp(std::log(4.0) + scale + std::max(t1, t2));
    return b;
  }
  b.lower = std::exp(std::min(lo_plus, lo_minus));
  if (regime == SignRegime::nonnegative) {
    const double t1 = lo_plus + r_plus * std::log(std::log(kE + 1.0 / measure));
    const double t2 = lo_minus + r_plus * std::log(std::log(1.0 + kE));
    b.upper = std::exp(std::log(2.0) + scale + std::max(t1, t2));
  } else {
    b.upper = std::exp(std::log(2.0) + scale + std::max(lo_plus, lo_minus));
  }
  return b;
}

std::vector<std::vector<std::size_t>> random_cell_unions(const DiscretizedDomain& domain, std::size_t count,
                                                         double max_measure, std::uint64_t seed) {
  const auto& c = domain.counts();
  const int n = domain.dim();
  const std::size_t total = c[0] * c[1] * c[2];
  std::vector<std::int64_t> node_of(total, -1);
  std::int64_t next = 0;
  for (std::size_t f = 0; f < total; ++f)
    if (domain.cell_fraction(f) > 0.0f) node_of[f] = next++;
  const auto& w = domain.cells()->weights;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out;
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 100 * count + 1000) throw NumericError("could not draw cell unions of the requested size");
    const int pieces = 1 + static_cast<int>(rng() % 3);
    std::vector<char> mark(total, 0);
    for (int piece = 0; piece < pieces; ++piece) {
      std::array<std::size_t, 3> lo{0, 0, 0}, hi{1, 1, 1};
      for (int k = 0; k < n; ++k) {
        const std::size_t len = 1 + rng() % std::max<std::size_t>(1, c[k] / 2);
        lo[k] = rng() % (c[k] - std::min(len, c[k]) + 1);
        hi[k] = lo[k] + len;
      }
      for (std::size_t i = lo[0]; i < hi[0]; ++i)
        for (std::size_t j = lo[1]; j < hi[1]; ++j)
          for (std::size_t k = lo[2]; k < hi[2]; ++k) mark[(i * c[1] + j) * c[2] + k] = 1;
    }
    std::vector<std::size_t> set;
    double measure = 0.0;
    for (std::size_t f = 0; f < total; ++f)
      if (mark[f] && node_of[f] >= 0) {
        set.push_back(static_cast<std::size_t>(node_of[f]));
        measure += w[static_cast<std::size_t>(node_of[f])];
      }
    if (set.empty() || measure > max_measure) continue;
    out.push_back(std::move(set));
  }
  return out;
}

namespace {

SignRegime sign_pattern(const PhiFunction& phi, const std::vector<Point>& nodes) {
  bool neg = false, nonneg = false;
  for (const Point& x : nodes) {
    const double r = phi.coefficients(x).r;
    neg = neg || r < 0.0;
    nonneg = nonneg || r >= 0.0;
  }
  if (neg && nonneg) return SignRegime::mixed;
  return neg ? SignRegime::nonpositive : SignRegime::nonnegative;
}

bool regime_matches(SignRegime requested, SignRegime found, bool all_zero) {
  if (requested == found) return true;
  // r = 0 sits in both one-signed regimes
  return all_zero && requested == SignRegime::nonpositive;
}

void require_equal_mode(const PhiFunction& phi, const std::vector<Point>& nodes) {
  if (phi.mode() == PhiMode::equal) return;
  for (const Point& x : nodes) {
    const Coefficients c = phi.coefficients(x);
    if (c.q != c.p) throw InvalidArgument("indicator estimates need q = p (equal mode)");
  }
}

}  // namespace

VerificationReport check_indicator_norm_bounds(const PhiFunction& phi, const std::shared_ptr<const Quadrature>& support,
                                               const std::vector<std::vector<std::size_t>>& sets,
                                               SignRegime regime) {
  require_equal_mode(phi, support->nodes);
  bool all_zero = true;
  double a_sup = 0.0;
  std::vector<Coefficients> coef(support->size());
  for (std::size_t i = 0; i < support->size(); ++i) {
    coef[i] = phi.coefficients(support->nodes[i]);
    all_zero = all_zero && coef[i].r == 0.0;
    a_sup = std::max(a_sup, coef[i].a);
  }
  const SignRegime found = sign_pattern(phi, support->nodes);
  if (!regime_matches(regime, found, all_zero))
    throw InvalidArgument(std::string("regime mismatch: requested ") + to_string(regime) + ", field is " +
                          to_string(found));
  const FamilyPtr fam = phi_family(phi, support);
  VerificationReport rep(std::string("indicator norm bounds ") + to_string(regime), 1e-9);
  rep.details["a_sup"] = a_sup;
  rep.details["sets"] = sets.size();
  SampledFunction f;
  f.support = support;
  f.values.assign(support->size(), 0.0);
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    if (set.empty()) throw InvalidArgument("empty indicator set");
    double p_plus = -kInf, p_minus = kInf, r_plus = -kInf;
    LogSum lm;
    for (std::size_t i : set) {
      f.values.at(i) = 1.0;
      p_plus = std::max(p_plus, coef[i].p);
      p_minus = std::min(p_minus, coef[i].p);
      r_plus = std::max(r_plus, coef[i].r);
      lm.add(support->log_weights[i]);
    }
    const double measure = std::exp(lm.value());
    const double norm = luxemburg_norm(fam, f).value;
    const IndicatorBounds b = indicator_norm_bounds(regime, measure, p_plus, p_minus, r_plus, a_sup);
    auto witness = [&] {
      return json{{"set", s},       {"measure", measure}, {"norm", norm},      {"lower", b.lower},
                  {"upper", b.upper}, {"p_plus", p_plus},  {"p_minus", p_minus}, {"r_plus", r_plus}};
    };
    rep.record((norm - b.lower) / norm, witness);
    rep.record((b.upper - norm) / b.upper, witness);
    for (std::size_t i : set) f.values[i] = 0.0;
  }
  return rep;
}

// ------------------------------------------------------------ radius gap

json CutoffRatio::to_json() const {
  return {{"R", R},
          {"R_tilde", R_tilde},
          {"log_measure", number_json(log_measure)},
          {"log_lhs", number_json(log_lhs)},
          {"log_rhs", number_json(log_rhs)},
          {"log_ratio", number_json(log_ratio)}};
}

namespace {

struct LocalSetup {
  std::shared_ptr<const Quadrature> quad;
  HalvingResult halving;
  SampledFunction cutoff;
  FamilyPtr fphi, fpsi;
};

LocalSetup local_setup(const PhiFunction& phi, const Shape& shape, const Point& x, double R) {
  LocalSetup s;
  s.halving = halving_radius(shape, x, R);
  s.quad = local_ball_quadrature(shape, x, R, {s.halving.radius});
  s.cutoff = make_cutoff(s.quad, x, R, s.halving.radius);
  const SampleSet nodes = SampleSet::from_points(shape.dim(), s.quad->nodes, "ball quadrature");
  s.fphi = phi_family(phi, s.quad);
  s.fpsi = psi_family(make_target_psi(phi, nodes), s.quad);
  return s;
}

}  // namespace

CutoffRatio cutoff_embedding_ratio(const PhiFunction& phi, const Shape& shape, const Point& x, double R) {
  const LocalSetup s = local_setup(phi, shape, x, R);
  CutoffRatio c;
  c.R = R;
  c.R_tilde = s.halving.radius;
  c.log_measure = s.quad->log_measure();
  c.log_lhs = luxemburg_norm(s.fpsi, s.cutoff).log_value;
  c.log_rhs = sobolev_norm(s.fphi, s.cutoff).log_value;
  c.log_ratio = c.log_lhs - c.log_rhs;
  return c;
}

VerificationReport check_radius_gap_lemma(const PhiFunction& phi, const Shape& shape, const Point& x, double R,
                                          double c1) {
  if (!(c1 > 0.0)) throw InvalidArgument("c1 must be positive");
  const LocalSetup s = local_setup(phi, shape, x, R);
  const Quadrature& q = *s.quad;
  require_equal_mode(phi, q.nodes);
  const int n = shape.dim();
  const double Rt = s.halving.radius;
  const double gap = R - Rt;

  SampledFunction ind_R{s.quad, std::vector<double>(q.size(), 1.0), {}};
  SampledFunction ind_Rt{s.quad, std::vector<double>(q.size(), 0.0), {}};
  SampledFunction grad{s.quad, s.cutoff.grad_norm, {}};
  LogSum lm_t;
  double p_plus = -kInf, p_minus = kInf, r_plus = -kInf, a_sup = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (distance(q.nodes[i], x, n) <= Rt) {
      ind_Rt.values[i] = 1.0;
      lm_t.add(q.log_weights[i]);
    }
    const Coefficients c = phi.coefficients(q.nodes[i]);
    p_plus = std::max(p_plus, c.p);
    p_minus = std::min(p_minus, c.p);
    r_plus = std::max(r_plus, c.r);
    a_sup = std::max(a_sup, c.a);
  }
  const double log_A = q.log_measure();
  const double log_At = lm_t.value();

  const double u_psi = luxemburg_norm(s.fpsi, s.cutoff).log_value;
  const double u_w = sobolev_norm(s.fphi, s.cutoff).log_value;
  const double u_phi = luxemburg_norm(s.fphi, s.cutoff).log_value;
  const double g_phi = luxemburg_norm(s.fphi, grad).log_value;
  const double ind_R_phi = luxemburg_norm(s.fphi, ind_R).log_value;
  const double ind_Rt_psi = luxemburg_norm(s.fpsi, ind_Rt).log_value;
  const double c2 = 2.0 * c1;  // c~ = 1 for the affine cutoff

  VerificationReport rep("radius gap", 1e-9);
  json ctx{{"x", point_json(x, n)}, {"R", R}, {"R_tilde", Rt}, {"c1", c1}, {"c2", c2}};
  auto link = [&](const char* name, double log_lhs, double log_rhs) {
    const double margin = -std::expm1(log_lhs - log_rhs);
    rep.record(margin, [&] {
      json w = ctx;
      w["link"] = name;
      w["log_lhs"] = log_lhs;
      w["log_rhs"] = log_rhs;
      return w;
    });
    rep.details["links"][name] = {{"log_lhs", log_lhs}, {"log_rhs", log_rhs}, {"margin", margin}};
  };
  link("premise |u|_Psi <= c1 |u|_W", u_psi, std::log(c1) + u_w);
  link("|1_{B_R~}|_Psi <= |u|_Psi", ind_Rt_psi, u_psi);
  link("|u|_W <= |u|_Phi + |grad u|_Phi", u_w, log_add_exp(u_phi, g_phi));
  link("|u|_Phi <= |1_{B_R}|_Phi", u_phi, ind_R_phi);
  link("|grad u|_Phi <= |1_{B_R}|_Phi / (R - R~)", g_phi, ind_R_phi - std::log(gap));
  link("R - R~ <= c2 |1_{B_R}|_Phi / |1_{B_R~}|_Psi", std::log(gap), std::log(c2) + ind_R_phi - ind_Rt_psi);

  const SignRegime regime = sign_pattern(phi, q.nodes);
  rep.details["regime"] = to_string(regime);
  rep.details["measure"] = std::exp(log_A);
  rep.details["measure_tilde"] = std::exp(log_At);
  rep.details["p_plus"] = p_plus;
  rep.details["p_minus"] = p_minus;
  rep.details["r_plus"] = r_plus;
  rep.details["a_sup"] = a_sup;
  const double A = std::exp(log_A);
  if (regime == SignRegime::mixed && !(A < 0.5)) {
    rep.fail("mixed regime needs |A_R| < 1/2");
    return rep;
  }
  const IndicatorBounds ub = indicator_norm_bounds(regime, A, p_plus, p_minus, r_plus, a_sup);
  const double log_psi_lower = log_At * (1.0 / p_minus - 1.0 / n);
  link("|1_{B_R}|_Phi <= indicator upper bound", ind_R_phi, std::log(ub.upper));
  link("|A_R~|^{1/p*-} <= |1_{B_R~}|_Psi", log_psi_lower, ind_Rt_psi);
  const double log_bound = std::log(c2) + std::log(ub.upper) - log_psi_lower;
  rep.details["regime_bound"] = std::exp(log_bound);
  link("R - R~ <= regime bound", std::log(gap), log_bound);
  return rep;
}

// ------------------------------------------------------------- necessity

json NecessityTrace::to_json() const {
  json lv = json::array();
  for (const auto& l : levels)
    lv.push_back({{"R", l.R},
                  {"log_measure", number_json(l.log_measure)},
                  {"halving_error", l.halving_error},
                  {"p_plus", l.p_plus},
                  {"p_minus", l.p_minus},
                  {"r_plus", l.r_plus},
                  {"eta_R", l.eta_R},
                  {"log_density_plain", number_json(l.log_density_plain)},
                  {"log_density_log", number_json(l.log_density_log)},
                  {"implied_C1", number_json(l.implied_C1)},
                  {"log_lhs_AR", number_json(l.lhs_AR)},
                  {"log_rhs_AR", number_json(l.rhs_AR)}});
  json j{{"x", point_json(x, dim)},
         {"R0", R0},
         {"levels", lv},
         {"telescoping_sum", telescoping_sum},
         {"telescoping_error", telescoping_error},
         {"eta", eta},
         {"r_plus", r_plus},
         {"a_sup", a_sup},
         {"truncated", truncated}};
  if (c3) j["c3"] = *c3;
  if (c4) j["c4"] = *c4;
  if (truncated) j["truncation_reason"] = truncation_reason;
  return j;
}

namespace {

std::vector<Point> ball_points(const Shape& shape, const Point& x, double R) {
  const int n = shape.dim();
  if (n == 2) return local_ball_quadrature(shape, x, R, {}, 1e-6)->nodes;
  std::vector<Point> pts;
  constexpr int kSide = 16;
  for (int i = 0; i < kSide; ++i)
    for (int j = 0; j < kSide; ++j)
      for (int k = 0; k < kSide; ++k) {
        Point y = x;
        const int idx[3] = {i, j, k};
        for (int m = 0; m < 3; ++m) y[m] += R * (2.0 * (idx[m] + 0.5) / kSide - 1.0);
        if (distance(y, x, n) < R && shape.contains(y)) pts.push_back(y);
      }
  if (pts.empty()) pts.push_back(x);
  return pts;
}

struct LocalRange {
  double p_plus = -kInf, p_minus = kInf, r_plus = -kInf, a_sup = 0.0;
};

LocalRange local_range(const PhiFunction& phi, const std::vector<Point>& pts) {
  LocalRange r;
  for (const Point& y : pts) {
    const Coefficients c = phi.coefficients(y);
    r.p_plus = std::max(r.p_plus, c.p);
    r.p_minus = std::min(r.p_minus, c.p);
    r.r_plus = std::max(r.r_plus, c.r);
    r.a_sup = std::max(r.a_sup, c.a);
  }
  return r;
}

}  // namespace

NecessityTrace run_necessity_trace(const PhiFunction& phi, const Shape& shape, const Point& x, double R0,
                                   const NecessityOptions& opt) {
  const int n = shape.dim();
  if (phi.dim() != n) throw InvalidArgument("dimension mismatch between field and domain");
  if (opt.levels > 40) throw InvalidArgument("at most 40 levels");
  const std::vector<Point> top = ball_points(shape, x, R0);
  require_equal_mode(phi, top);
  const LocalRange g = local_range(phi, top);
  if (!(g.p_plus < n)) throw InvalidArgument("necessity trace needs p+ < n");

  NecessityTrace tr;
  tr.x = x;
  tr.dim = n;
  tr.R0 = R0;
  tr.eta = 1.0 / n + (1.0 / g.p_plus - 1.0 / g.p_minus);
  tr.r_plus = g.r_plus;
  tr.a_sup = g.a_sup;
  const double r_eff = std::max(g.r_plus, 0.0);
  const double base = std::log1p(g.a_sup) / g.p_minus + (1.0 / g.p_minus - 1.0 / n) * kLn2;
  const bool any_neg = g.r_plus < 0.0 || [&] {
    for (const Point& y : top)
      if (phi.coefficients(y).r < 0.0) return true;
    return false;
  }();
  const bool mixed = any_neg && g.r_plus >= 0.0;
  if (opt.C1) {
    const double c3 = *opt.C1 * std::exp(base + kLn2) * std::pow(2.0, r_eff);
    tr.c3 = c3;
    tr.c4 = 1.0 / std::max(1.0, c3 * std::tgamma(r_eff + 1.0) /
                                        std::pow(std::min(1.0, tr.eta) * kLn2, r_eff + 1.0) +
                                    c3);
  }

  double R = R0;
  double tele = 0.0;
  for (std::size_t i = 0; i <= opt.levels; ++i) {
    NecessityLevel lv;
    lv.R = R;
    const BallMeasure bm = ball_intersection_measure(shape, x, R);
    lv.log_measure = bm.log_value;
    if (!std::isfinite(lv.log_measure)) {
      tr.truncated = true;
      tr.truncation_reason = "measure vanished";
      break;
    }
    const LocalRange lr = i == 0 ? g : local_range(phi, ball_points(shape, x, R));
    lv.p_plus = lr.p_plus;
    lv.p_minus = lr.p_minus;
    lv.r_plus = lr.r_plus;
    lv.eta_R = 1.0 / n + (1.0 / lr.p_plus - 1.0 / lr.p_minus);
    lv.log_density_plain = lv.log_measure - n * std::log(R);
    lv.log_density_log =
        lv.log_density_plain + (r_eff / tr.eta) * std::log(std::log(kE + 1.0 / R));
    const double loglog_A = std::log(log_e_plus_exp(-lv.log_measure));
    lv.lhs_AR = lv.log_measure + (std::max(lr.r_plus, 0.0) / lv.eta_R) * loglog_A;
    const double beta_R = 1.0 - n * lv.eta_R;
    lv.rhs_AR = n * std::log(R) + beta_R / lv.eta_R * std::log(R);
    if (i == opt.levels || R < opt.min_radius) {
      if (R < opt.min_radius && i < opt.levels) {
        tr.truncated = true;
        tr.truncation_reason = "radius below resolution floor";
      }
      tr.levels.push_back(lv);
      break;
    }
    const HalvingResult h = halving_radius(shape, x, R);
    lv.halving_error = h.relative_error;
    // gap estimate with C1 = 1
    double log_rest = base + (lv.log_measure) * (1.0 / lr.p_plus - 1.0 / lr.p_minus + 1.0 / n);
    if (!mixed) log_rest += kLn2;
    if (!any_neg || mixed) log_rest += std::max(lr.r_plus, 0.0) * loglog_A;
    lv.implied_C1 = (R - h.radius) / std::exp(log_rest);
    tele += R - h.radius;
    tr.levels.push_back(lv);
    R = h.radius;
  }
  tr.telescoping_sum = tele + tr.levels.back().R;
  tr.telescoping_error = std::fabs(tr.telescoping_sum - R0);
  return tr;
}

json NecessitySweep::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    json j{{"R", r.R}, {"log_measure", number_json(r.log_measure)}, {"log_density", number_json(r.log_density)}};
    if (r.cutoff.R > 0) j["cutoff"] = r.cutoff.to_json();
    rs.push_back(j);
  }
  return {{"rows", rs},
          {"r_plus", r_plus},
          {"eta", eta},
          {"density_monotone", density_monotone},
          {"log_density_drop", log_density_drop},
          {"log_ratio_growth", log_ratio_growth}};
}

NecessitySweep run_necessity_sweep(const PhiFunction& phi, const Shape& shape, const Point& x,
                                   const std::vector<double>& radii, bool with_cutoffs) {
  if (radii.empty()) throw InvalidArgument("empty radius sweep");
  std::vector<double> rs = radii;
  std::sort(rs.begin(), rs.end(), std::greater<>());
  const int n = shape.dim();
  const LocalRange g = local_range(phi, ball_points(shape, x, rs.front()));
  NecessitySweep sw;
  sw.r_plus = g.r_plus;
  sw.eta = 1.0 / n + (1.0 / g.p_plus - 1.0 / g.p_minus);
  const double r_eff = std::max(g.r_plus, 0.0);
  for (double R : rs) {
    SweepRow row;
    row.R = R;
    row.log_measure = ball_intersection_measure(shape, x, R).log_value;
    row.log_density = row.log_measure - n * std::log(R) + (r_eff / sw.eta) * std::log(std::log(kE + 1.0 / R));
    if (with_cutoffs) row.cutoff = cutoff_embedding_ratio(phi, shape, x, R);
    if (!sw.rows.empty() && !(row.log_density < sw.rows.back().log_density)) sw.density_monotone = false;
    sw.rows.push_back(row);
  }
  sw.log_density_drop = sw.rows.front().log_density - sw.rows.back().log_density;
  if (with_cutoffs) sw.log_ratio_growth = sw.rows.back().cutoff.log_ratio - sw.rows.front().cutoff.log_ratio;
  return sw;
}

json R0Threshold::to_json() const { return {{"r0", r0}, {"eta_tilde", eta_tilde}, {"positive", positive}}; }

R0Threshold compute_r0_threshold(double C_log, int dim) {
  if (!(C_log >= 0.0) || dim < 1) throw InvalidArgument("need C_log >= 0 and n >= 1");
  R0Threshold t;
  t.r0 = 0.5 * std::min(0.25, 0.5 * std::exp(-dim * C_log));
  t.eta_tilde = 1.0 / dim - C_log / std::log(1.0 / (2.0 * t.r0));
  t.positive = t.eta_tilde > 0.0;
  return t;
}

double integral_test_sum(double k, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  // terms peak near k / (eta ln 2); sum well past the peak until negligible
  const double peak = k / (eta * kLn2);
  double s = 0.0, c = 0.0;  // Kahan
  for (std::size_t i = 1;; ++i) {
    const double di = static_cast<double>(i);
    const double term = std::exp(k * std::log(di) - di * eta * kLn2);
    const double y = term - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
    if (di > peak && term < 1e-20 * s) break;
    if (i > 100000000) throw NumericError("integral test sum did not converge");
  }
  return s;
}

double integral_test_bound(double k, double eta) {
  return std::tgamma(k + 1.0) / std::pow(eta * kLn2, k + 1.0);
}

VerificationReport check_integral_test(const std::vector<double>& ks, const std::vector<double>& etas) {
  VerificationReport rep("integral test", 0.0);
  json rows = json::array();
  for (double k : ks)
    for (double eta : etas) {
      const double s = integral_test_sum(k, eta);
      const double b = integral_test_bound(k, eta);
      // monotone envelope: integral plus the largest term
      const double peak = k / (eta * kLn2);
      const double envelope = b + (k > 0 ? std::exp(k * std::log(peak) - k) : 1.0);
      rows.push_back({{"k", k}, {"eta", eta}, {"sum", s}, {"bound", b}, {"bound_plus_max_term", envelope}});
      rep.record((b - s) / b, [&] { return json{{"k", k}, {"eta", eta}, {"sum", s}, {"bound", b}}; });
    }
  rep.details["rows"] = rows;
  return rep;
}

}  // namespace molab
