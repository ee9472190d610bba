#include "molab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/math/tools/minima.hpp>

namespace molab {

namespace {

struct Extremes {
  double p_min = kInf, p_max = -kInf;
  double q_min = kInf, q_max = -kInf;
  double r_min = kInf, r_max = -kInf;
  double a_max = 0.0;
  double qp_min = kInf, qp_max = -kInf;
};

Extremes extremes(const PhiFunction& phi, const SampleSet& region) {
  if (region.empty()) throw InvalidArgument("empty region sample");
  Extremes e;
  for (const Point& x : region.points) {
    const Coefficients c = phi.coefficients(x);
    e.p_min = std::min(e.p_min, c.p);
    e.p_max = std::max(e.p_max, c.p);
    e.q_min = std::min(e.q_min, c.q);
    e.q_max = std::max(e.q_max, c.q);
    e.r_min = std::min(e.r_min, c.r);
    e.r_max = std::max(e.r_max, c.r);
    e.a_max = std::max(e.a_max, std::fabs(c.a));
    e.qp_min = std::min(e.qp_min, c.q / c.p);
    e.qp_max = std::max(e.qp_max, c.q / c.p);
  }
  return e;
}

double log_pow(double base, double e) { return e == 0.0 ? 0.0 : e * std::log(base); }

// 1 + |a| log(e + 1)^{r+}
double k_constant(double a_sup, double r_plus) {
  return 1.0 + a_sup * std::exp(log_pow(std::log(kE + 1.0), r_plus));
}

// Maximum of f over [lo, hi] by a log grid and a Brent polish.
double maximize(const std::function<double(double)>& f, double lo, double hi, std::size_t grid = 400) {
  const double llo = std::log(lo), lhi = std::log(hi);
  double best = f(hi), best_x = lhi;
  for (std::size_t i = 0; i < grid; ++i) {
    const double lx = llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    const double v = f(std::exp(lx));
    if (v > best) {
      best = v;
      best_x = lx;
    }
  }
  const double step = (lhi - llo) / static_cast<double>(grid - 1);
  const double a = std::max(llo, best_x - step), b = std::min(lhi, best_x + step);
  if (b > a) {
    auto r = boost::math::tools::brent_find_minima([&](double lx) { return -f(std::exp(lx)); }, a, b, 50);
    best = std::max(best, -r.second);
  }
  return best;
}

struct SampledBall {
  Point center{};
  double radius = 0.0;
  double log_measure = 0.0;
  std::vector<Point> points;  // center first
};

template <class Visit>
void for_each_ball(const SampleSet& region, int dim, const BallSampling& s, Visit&& visit) {
  if (region.empty()) throw InvalidArgument("empty region sample");
  const double omega = unit_ball_volume(dim);
  const double r_max = s.max_radius.value_or(std::pow(1.0 / omega, 1.0 / dim));
  if (!(s.min_radius > 0.0 && s.min_radius <= r_max)) throw InvalidArgument("bad ball radius range");
  if (std::log(omega) + dim * std::log(r_max) > 1e-12) throw InvalidArgument("sampled balls must satisfy |B| <= 1");
  constexpr std::size_t kLevels = 24;
  Box hull{dim, region.points.front(), region.points.front()};
  for (const Point& x : region.points)
    for (int k = 0; k < dim; ++k) {
      hull.lo[k] = std::min(hull.lo[k], x[k]);
      hull.hi[k] = std::max(hull.hi[k], x[k]);
    }
  std::function<bool(const Point&)> inside = s.inside;
  if (!inside) inside = [&hull](const Point& z) { return hull.contains(z); };
  std::mt19937_64 rng(s.seed);
  std::uniform_int_distribution<std::size_t> pick(0, region.size() - 1);
  for (std::size_t b = 0; b < s.balls; ++b) {
    SampledBall ball;
    ball.center = region.points[pick(rng)];
    const double frac = static_cast<double>(b % kLevels) / static_cast<double>(kLevels - 1);
    ball.radius = s.min_radius * std::pow(r_max / s.min_radius, frac);
    ball.log_measure = std::log(omega) + dim * std::log(ball.radius);
    ball.points.push_back(ball.center);
    for (std::size_t tries = 0; ball.points.size() <= s.points_per_ball && tries < 8 * s.points_per_ball; ++tries) {
      const Point z = sample_in_ball(rng, ball.center, ball.radius, dim);
      if (inside(z)) ball.points.push_back(z);
    }
    visit(ball);
  }
}

json ball_json(const SampledBall& b, int dim) {
  return {{"center", point_json(b.center, dim)}, {"radius", b.radius}, {"measure", std::exp(b.log_measure)}};
}

}  // namespace

const char* to_string(ConditionKind k) {
  switch (k) {
    case ConditionKind::A0: return "A0";
    case ConditionKind::A0_prime: return "A0'";
    case ConditionKind::A1_prime: return "A1'";
    case ConditionKind::A1_equivalent: return "A1-equivalent";
    case ConditionKind::A2_prime: return "A2'";
  }
  return "?";
}

json ConditionReport::to_json() const {
  json j;
  j["condition"] = to_string(condition);
  j["beta"] = number_json(beta);
  j["auxiliary"] = auxiliary;
  j["passed"] = report.passed;
  j["report"] = report.to_json();
  return j;
}

double a0_beta(double a_sup, double r_plus) {
  if (r_plus < 0.0) throw InvalidArgument("A0 constant needs r+ >= 0");
  return 1.0 / (2.0 * (1.0 + a_sup) * std::exp(log_pow(std::log(kE + 0.5), r_plus)));
}

ConditionReport verify_A0(const PhiFunction& phi, const SampleSet& region) {
  const Extremes e = extremes(phi, region);
  ConditionReport out;
  out.condition = ConditionKind::A0_prime;
  out.beta = a0_beta(e.a_max, e.r_max);
  out.report = VerificationReport("A0'", kConditionTolerance);
  const int dim = phi.dim();
  const double lb = std::log(out.beta);
  for (const Point& x : region.points) {
    const LocalPhi f = phi.at(x);
    const double low = f.log_value(lb);
    const double high = f.log_value(-lb);
    out.report.record(-std::expm1(low), [&] {
      return json{{"x", point_json(x, dim)}, {"side", "Phi(x,beta) <= 1"}, {"value", std::exp(low)}};
    });
    out.report.record(std::expm1(high), [&] {
      return json{{"x", point_json(x, dim)}, {"side", "1 <= Phi(x,1/beta)"}, {"value", std::exp(high)}};
    });
  }
  out.auxiliary = {{"a_sup", e.a_max}, {"r_plus", e.r_max}, {"beta_inverse", 1.0 / out.beta},
                   {"samples", region.size()}, {"resolution", region.resolution}};
  return out;
}

ConditionReport verify_A1_prime(const PhiFunction& phi, const SampleSet& region, double beta,
                                const BallSampling& sampling) {
  if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgument("beta must lie in (0, 1]");
  const int dim = phi.dim();
  ConditionReport out;
  out.condition = ConditionKind::A1_prime;
  out.beta = beta;
  out.report = VerificationReport("A1'", kConditionTolerance);
  const double lb = std::log(beta);
  const std::size_t nt = std::max<std::size_t>(sampling.t_points, 2);
  std::vector<LocalPhi> locals;
  std::vector<double> lts(nt), log_phi_y(nt);
  for_each_ball(region, dim, sampling, [&](const SampledBall& ball) {
    locals.clear();
    for (const Point& z : ball.points) locals.push_back(phi.at(z));
    for (std::size_t iy = 0; iy < ball.points.size(); ++iy) {
      const LocalPhi& fy = locals[iy];
      const double t_lo = fy.inverse(1.0).t;
      const double t_hi = fy.inverse(std::exp(-ball.log_measure)).t;
      if (!(t_lo > 0.0 && t_hi >= t_lo)) throw NumericError("A1': inverse failed");
      for (std::size_t k = 0; k < nt; ++k) {
        const double s = static_cast<double>(k) / static_cast<double>(nt - 1);
        lts[k] = std::log(t_lo) + s * (std::log(t_hi) - std::log(t_lo));
        log_phi_y[k] = fy.log_value(lts[k]);
      }
      for (std::size_t ix = 0; ix < ball.points.size(); ++ix) {
        const LocalPhi& fx = locals[ix];
        for (std::size_t k = 0; k < nt; ++k) {
          const double margin = -std::expm1(fx.log_value(lts[k] + lb) - log_phi_y[k]);
          out.report.record(margin, [&] {
            json w = ball_json(ball, dim);
            w["x"] = point_json(ball.points[ix], dim);
            w["y"] = point_json(ball.points[iy], dim);
            w["t"] = std::exp(lts[k]);
            return w;
          });
        }
      }
    }
  });
  out.auxiliary = {{"balls", sampling.balls}, {"points_per_ball", sampling.points_per_ball + 1},
                   {"t_points", nt}, {"seed", sampling.seed}};
  return out;
}

double claim_h_max(int dim, double c, double alpha, double p_min) {
  if (c <= 0.0) return 1.0;
  const double omega = unit_ball_volume(dim);
  const double r_max = std::pow(omega, -1.0 / dim);
  auto log_h = [&](double R) {
    return -c * std::pow(2.0 * R, alpha) / p_min * (std::log(omega) + dim * std::log(R));
  };
  return std::exp(std::max(0.0, maximize(log_h, 1e-14 * r_max, r_max)));
}

json ClaimConstants::to_json() const {
  return {{"M_empirical", M_empirical},
          {"N_empirical", N_empirical},
          {"M_bound", M_bound},
          {"N_bound", N_bound},
          {"c0", c0},
          {"kappa", kappa},
          {"K", K},
          {"h_p_max", h_p_max},
          {"h_q_max", h_q_max},
          {"witness_M", witness_M},
          {"witness_N", witness_N},
          {"samples", samples},
          {"within_bounds", within_bounds()},
          {"hypotheses",
           {{"p_holder", hypotheses.p_holder},
            {"p_alpha", hypotheses.p_alpha},
            {"q_holder", hypotheses.q_holder},
            {"q_alpha", hypotheses.q_alpha},
            {"r_loglog", hypotheses.r_loglog}}}};
}

ClaimConstants compute_claim_constants(const PhiFunction& phi, const SampleSet& region,
                                       const BallSampling& sampling, ClaimHypotheses hyp) {
  const int dim = phi.dim();
  const Extremes e = extremes(phi, region);
  const ExponentField& field = phi.field();
  const Component qc = phi.mode() == PhiMode::equal ? Component::p : Component::q;
  if (hyp.p_holder < 0.0) hyp.p_holder = estimate_holder(field, region, hyp.p_alpha, Component::p).constant;
  if (hyp.q_holder < 0.0) hyp.q_holder = estimate_holder(field, region, hyp.q_alpha, qc).constant;
  if (hyp.r_loglog < 0.0) hyp.r_loglog = estimate_loglog_holder(field, region).constant;

  ClaimConstants out;
  out.hypotheses = hyp;
  double log_M = 0.0, log_N = 0.0;
  for_each_ball(region, dim, sampling, [&](const SampledBall& ball) {
    std::vector<Coefficients> cs;
    for (const Point& z : ball.points) cs.push_back(phi.coefficients(z));
    for (std::size_t iy = 0; iy < cs.size(); ++iy) {
      const LocalPhi fy = LocalPhi::from(cs[iy]);
      const double lt[2] = {std::log(fy.inverse(1.0).t), std::log(fy.inverse(std::exp(-ball.log_measure)).t)};
      for (std::size_t ix = 0; ix < cs.size(); ++ix) {
        if (ix == iy) continue;
        const double dp = cs[ix].p - cs[iy].p, dq = cs[ix].q - cs[iy].q, dr = cs[ix].r - cs[iy].r;
        for (double l : lt) {
          ++out.samples;
          const double m = std::max(dp * l, dq * l);
          const double nn = dr * std::log(log_e_plus_exp(l));
          if (m > log_M) {
            log_M = m;
            out.witness_M = ball_json(ball, dim);
            out.witness_M["x"] = point_json(ball.points[ix], dim);
            out.witness_M["y"] = point_json(ball.points[iy], dim);
            out.witness_M["t"] = std::exp(l);
          }
          if (nn > log_N) {
            log_N = nn;
            out.witness_N = ball_json(ball, dim);
            out.witness_N["x"] = point_json(ball.points[ix], dim);
            out.witness_N["y"] = point_json(ball.points[iy], dim);
            out.witness_N["t"] = std::exp(l);
          }
        }
      }
    }
  });
  out.M_empirical = std::exp(log_M);
  out.N_empirical = std::exp(log_N);

  out.K = k_constant(e.a_max, std::max(e.r_max, 0.0));
  out.h_p_max = claim_h_max(dim, hyp.p_holder, hyp.p_alpha, e.p_min);
  out.h_q_max = claim_h_max(dim, hyp.q_holder, hyp.q_alpha, e.p_min);
  out.M_bound = std::max({out.K, std::pow(out.K, (e.q_max - e.q_min) / e.p_min), out.h_p_max, out.h_q_max});

  // loglog(e + |B|^{-1/p-}) <= kappa loglog(e + |x-y|^{-n}) for |x - y| <= 2R.
  const double omega = unit_ball_volume(dim);
  const double r_max = std::pow(omega, -1.0 / dim);
  auto ratio = [&](double R) {
    const double lb = std::log(omega) + dim * std::log(R);
    const double num = std::log(log_e_plus_exp(-lb / e.p_min));
    const double den = std::log(log_e_plus_exp(-dim * std::log(2.0 * R)));
    return num / den;
  };
  out.kappa = std::max(1.0, maximize(ratio, 1e-12 * r_max, r_max));
  out.c0 = hyp.r_loglog * out.kappa;
  out.N_bound = std::exp(out.c0 + out.c0 * std::log(static_cast<double>(dim)) / std::log(std::log(kE + 1.0)));
  return out;
}

json HolderBeta::to_json() const { return {{"beta", beta}, {"S", S}, {"tau", tau}}; }

HolderBeta a1_holder_beta(const PhiFunction& phi, const SampleSet& region, const ClaimConstants& claims, double c_a,
                          double gamma, double safety) {
  const int n = phi.dim();
  const Extremes e = extremes(phi, region);
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("Hölder exponent must lie in (0, 1]");
  if (!(e.qp_max < 1.0 + gamma / n)) throw InvalidArgument("(q/p)+ < 1 + gamma/n fails");
  const double r_plus = std::max(e.r_max, 0.0);
  const double omega = unit_ball_volume(n);
  HolderBeta out;
  out.tau = omega > 1.0 ? e.q_min / e.p_max : e.q_max / e.p_min;
  const double exponent = gamma + n - n * e.qp_max;
  auto g = [&](double R) {
    const double lb = std::log(omega) + n * std::log(R);
    return std::exp(exponent * std::log(R) + log_pow(log_e_plus_exp(-lb / e.p_min), r_plus));
  };
  const double r_top = std::min(1.0, std::pow(omega, -1.0 / n));
  double s = maximize(g, 1e-14 * r_top, r_top);
  if (std::pow(omega, -1.0 / n) > 1.0) {
    const double s_tilde = std::pow(omega, -gamma / n - 1.0 + e.qp_min) *
                           std::exp(log_pow(log_e_plus_exp(-std::log(omega) / e.p_min), r_plus));
    s = std::max(s, s_tilde);
  }
  out.S = std::pow(omega, 1.0 - out.tau) * s;
  const double base = claims.M_bound * claims.N_bound * (1.0 + c_a * std::pow(2.0, gamma) * out.S);
  out.beta = safety * std::pow(base, -1.0 / e.p_min);
  return out;
}

ConditionReport verify_A1_equivalent(const PhiFunction& phi, const SampleSet& region, double beta,
                                     const PairSampling& sampling) {
  if (!(beta > 0.0)) throw InvalidArgument("beta must be positive");
  const int dim = phi.dim();
  const std::size_t n = region.size();
  if (n < 2) throw InvalidArgument("need at least two sample points");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Coefficients c = phi.coefficients(region.points[i]);
    if (c.r < 0.0) throw InvalidArgument("A1-equivalent form needs r >= 0");
    v[i] = c.a > 0.0 ? std::pow(c.a, 1.0 / c.q) : 0.0;
  }
  ConditionReport out;
  out.condition = ConditionKind::A1_equivalent;
  out.beta = beta;
  out.report = VerificationReport("A1-equivalent", kConditionTolerance);
  auto check = [&](std::size_t i, std::size_t j) {
    const double d = distance(region.points[i], region.points[j], dim);
    if (!(d > 0.0) || d > sampling.max_distance) return;
    const double slack = 1.0 / std::log(kE + 1.0 / d);
    for (int order = 0; order < 2; ++order) {
      const std::size_t x = order ? j : i, y = order ? i : j;
      out.report.record(v[x] + slack - beta * v[y], [&] {
        return json{{"x", point_json(region.points[x], dim)},
                    {"y", point_json(region.points[y], dim)},
                    {"distance", d},
                    {"a_q_x", v[x]},
                    {"a_q_y", v[y]}};
      });
    }
  };
  std::mt19937_64 rng(sampling.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t k = 0; k < sampling.random_pairs; ++k) check(pick(rng), pick(rng));
  for (std::size_t i = region.graded_begin; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) check(i, j);
  out.auxiliary = {{"random_pairs", sampling.random_pairs},
                   {"graded_points", n - region.graded_begin},
                   {"max_distance", sampling.max_distance},
                   {"seed", sampling.seed}};
  return out;
}

double a1_equivalent_constant(double c_a, double q_min, double q_max, double a_sup, double q_log_holder) {
  if (!(q_min >= 1.0 && q_max >= q_min)) throw InvalidArgument("need 1 <= q- <= q+");
  double mvt = q_max / kE;
  if (a_sup >= 1.0) mvt = std::max(mvt, a_sup * std::log(a_sup));
  return std::pow(std::max(c_a, 0.0), 1.0 / q_min) + mvt * q_log_holder;
}

ConditionReport verify_A2_prime(const PhiFunction& phi, const SampleSet& region, const A2Options& options) {
  const int dim = phi.dim();
  const Extremes e = extremes(phi, region);
  const double K = k_constant(e.a_max, std::max(e.r_max, 0.0));
  ConditionReport out;
  out.condition = ConditionKind::A2_prime;
  out.report = VerificationReport("A2'", kConditionTolerance);

  double phi_inf_exp = 0.0;
  std::function<double(const Point&)> log_h;
  if (options.mode == A2Mode::bounded) {
    out.beta = 1.0;
    phi_inf_exp = e.p_max + 1.0;
    const double lh = phi_inf_exp * std::log(K);
    log_h = [lh](const Point&) { return lh; };
    out.auxiliary = {{"mode", "bounded"},
                     {"s", 1.0},
                     {"phi_infinity_exponent", phi_inf_exp},
                     {"h", "[1 + |a| log(e+1)^r+]^(p+ + 1)"},
                     {"h_value", std::exp(lh)}};
  } else {
    const ScalarField& p = phi.field().component(Component::p);
    const NekvindaResult decay = check_nekvinda(p, dim, options.p_infty, options.c, options.nekvinda);
    if (!decay.passes) throw InvalidArgument("Nekvinda decay check failed; A2' in nekvinda mode is not available");
    out.beta = options.beta.value_or(0.5 * options.c / K);
    if (!(out.beta > 0.0 && out.beta * K < options.c)) throw InvalidArgument("nekvinda mode needs beta < c / K");
    phi_inf_exp = options.p_infty;
    const double base = out.beta * K;
    const double p_inf = options.p_infty;
    log_h = [&phi, base, p_inf](const Point& x) {
      const double gap = std::fabs(1.0 / phi.coefficients(x).p - 1.0 / p_inf);
      return gap == 0.0 ? -kInf : std::log(base) / gap;
    };
    const NekvindaResult integral = check_nekvinda(p, dim, p_inf, base, options.nekvinda);
    out.auxiliary = {{"mode", "nekvinda"},
                     {"s", 1.0},
                     {"p_infinity", p_inf},
                     {"c", options.c},
                     {"phi_infinity_exponent", p_inf},
                     {"h", "(beta [1 + |a| log(e+1)^r+])^(1/|1/p - 1/p_inf|)"},
                     {"decay_integral", decay.integral},
                     {"h_integral", integral.integral},
                     {"h_integral_converged", integral.passes}};
  }
  out.auxiliary["K"] = K;

  const double lb = std::log(out.beta);
  const std::size_t nt = std::max<std::size_t>(options.t_points, 2);
  const double l_min = std::log(options.t_min);
  for (const Point& x : region.points) {
    const LocalPhi f = phi.at(x);
    const double lh = log_h(x);
    const double l_phi_max = std::log(f.inverse(1.0).t);
    for (int side = 0; side < 2; ++side) {
      const double l_top = side == 0 ? 0.0 : l_phi_max;
      for (std::size_t k = 0; k < nt; ++k) {
        const double lt = l_min + (l_top - l_min) * static_cast<double>(k) / static_cast<double>(nt - 1);
        double lhs, rhs;
        if (side == 0) {  // Phi(x, beta t) <= phi_inf(t) + h(x)
          lhs = f.log_value(lt + lb);
          rhs = log_add_exp(phi_inf_exp * lt, lh);
        } else {          // phi_inf(beta t) <= Phi(x, t) + h(x)
          lhs = phi_inf_exp * (lt + lb);
          rhs = log_add_exp(f.log_value(lt), lh);
        }
        out.report.record(-std::expm1(lhs - rhs), [&] {
          return json{{"x", point_json(x, dim)},
                      {"t", std::exp(lt)},
                      {"inequality", side == 0 ? "Phi(x,beta t) <= phi_inf(t) + h" : "phi_inf(beta t) <= Phi(x,t) + h"}};
        });
      }
    }
  }
  out.auxiliary["samples"] = region.size();
  return out;
}

}  // namespace molab
