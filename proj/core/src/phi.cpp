#include "molab/phi.hpp"

#include <algorithm>
#include <random>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace molab {

namespace {

// t / (e + t) for t = exp(lt), safe for large lt.
double saturation(double lt) { return 1.0 / (1.0 + kE * std::exp(-lt)); }

void check_t(double t) {
  if (std::isnan(t)) throw InvalidArgument("t is NaN");
  if (t < 0.0) throw InvalidArgument("t must be nonnegative");
}

// Smallest lt with log_f(lt) = target, for log_f continuous with
// log_f -> -inf at -inf. Increasing functions are solved on a bracket found
// by doubling steps; otherwise the smallest crossing on a scan is refined.
template <class LogF>
InverseResult solve_log(LogF log_f, double target, double guess, bool monotone) {
  InverseResult res;
  auto g = [&](double lt) { return log_f(lt) - target; };
  double lo = guess, hi = guess;
  if (monotone) {
    double step = 1.0;
    while (g(lo) > 0.0) {
      hi = lo;
      lo -= step;
      step *= 2.0;
      if (lo < -1e4) throw NumericError("inverse bracket search failed");
    }
    step = 1.0;
    while (g(hi) < 0.0) {
      lo = hi;
      hi += step;
      step *= 2.0;
      if (hi > 1e4) throw NumericError("inverse bracket search failed");
    }
  } else {
    // scan upward from far below the guess for the first crossing
    constexpr double kStep = 0.01;
    double prev_lt = guess - 60.0;
    double prev = g(prev_lt);
    double last = prev;
    bool found = false;
    for (double lt = prev_lt + kStep; lt < guess + 200.0; lt += kStep) {
      const double v = g(lt);
      if (v < last) res.non_monotone = true;
      last = v;
      if (prev < 0.0 && v >= 0.0) {
        lo = lt - kStep;
        hi = lt;
        found = true;
        break;
      }
      prev = v;
    }
    if (!found) throw NumericError("no root of the inverse equation found");
  }
  if (g(lo) == 0.0) {
    res.t = std::exp(lo);
    return res;
  }
  if (g(hi) == 0.0) {
    res.t = std::exp(hi);
    return res;
  }
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::fabs(b - a) <= 1e-13; };
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
  res.t = std::exp(0.5 * (r.first + r.second));
  return res;
}

}  // namespace

// ------------------------------------------------------------------- LocalPhi

LocalPhi LocalPhi::from(const Coefficients& c) {
  if (std::isnan(c.p) || std::isnan(c.q) || std::isnan(c.r) || std::isnan(c.a))
    throw InvalidArgument("NaN exponent");
  LocalPhi f;
  f.p = c.p;
  f.q = c.q;
  f.r = c.r;
  f.a = c.a;
  f.log_a = c.a > 0.0 ? std::log(c.a) : -kInf;
  return f;
}

double LocalPhi::log_value(double lt) const {
  if (lt == -kInf) return -kInf;
  const double l1 = p * lt;
  if (a <= 0.0) return l1;
  const double l2 = log_a + q * lt + r * std::log(log_e_plus_exp(lt));
  return log_add_exp(l1, l2);
}

double LocalPhi::value(double t) const {
  check_t(t);
  if (t == 0.0) return 0.0;
  const double lt = std::log(t);
  const double v1 = std::exp(p * lt);
  if (a <= 0.0) return v1;
  return v1 + std::exp(log_a + q * lt + r * std::log(log_e_plus_exp(lt)));
}

Probe LocalPhi::probe(double lt) const {
  if (lt == -kInf) return {};
  const double v1 = std::exp(p * lt);
  if (a <= 0.0) return {v1, p * v1};
  double L, sat;
  if (lt < 700.0) {
    const double t = std::exp(lt);
    L = std::log(kE + t);
    sat = t / (kE + t);
  } else {
    L = log_e_plus_exp(lt);
    sat = saturation(lt);
  }
  const double v2 = std::exp(log_a + q * lt + (r == 0.0 ? 0.0 : r * std::log(L)));
  return {v1 + v2, p * v1 + v2 * (q + r * sat / L)};
}

LogProbe LocalPhi::log_probe(double lt) const {
  if (lt == -kInf) return {};
  const double l1 = p * lt;
  if (a <= 0.0) return {l1, p};
  const double L = log_e_plus_exp(lt);
  const double l2 = log_a + q * lt + r * std::log(L);
  const double lv = log_add_exp(l1, l2);
  const double w1 = std::exp(l1 - lv), w2 = std::exp(l2 - lv);
  return {lv, p * w1 + w2 * (q + r * saturation(lt) / L)};
}

InverseResult LocalPhi::inverse(double s) const {
  check_t(s);
  if (std::isinf(s)) throw InvalidArgument("cannot invert at s = inf");
  if (s == 0.0) return {};
  const double ls = std::log(s);
  if (a <= 0.0) return {std::exp(ls / p), false};
  return solve_log([this](double lt) { return log_value(lt); }, ls, ls / p, surely_monotone());
}

ConjugateValue LocalPhi::conjugate(double s, const ConjugateOptions& opt) const {
  check_t(s);
  if (s == 0.0) return {};
  const double ls = std::log(s);
  // objective in log t; computed as s t - Phi(t) with overflow to -inf
  auto f = [&](double lt) {
    const double lphi = log_value(lt);
    const double st = std::exp(ls + lt);
    if (lphi > 700.0) return -kInf;
    return st - std::exp(lphi);
  };
  const std::size_t n = std::max<std::size_t>(opt.grid_points, 16);
  double lo = std::log(1e-8), hi = std::log(1e8);
  std::size_t best = 0;
  double best_v = -kInf;
  std::vector<double> grid(n);
  for (int round = 0; round < 40; ++round) {
    best_v = -kInf;
    for (std::size_t i = 0; i < n; ++i) {
      grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      const double v = f(grid[i]);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    if (best == n - 1) {
      if (hi > 700.0) return {kInf, kInf};
      const double w = hi - lo;
      lo = hi - 1.0;
      hi = std::min(hi + w, 710.0);
      continue;
    }
    if (best == 0 && best_v > 0.0) {
      if (lo < -700.0) break;
      const double w = hi - lo;
      hi = lo + 1.0;
      lo -= w;
      continue;
    }
    break;
  }
  if (!(best_v > 0.0)) return {0.0, 0.0};
  const double a_lt = grid[best == 0 ? 0 : best - 1];
  const double b_lt = grid[std::min(best + 1, n - 1)];
  const int bits = static_cast<int>(std::ceil(-std::log2(opt.relative_tol)));
  const auto m = boost::math::tools::brent_find_minima([&](double lt) { return -f(lt); }, a_lt, b_lt, bits);
  double v = -m.second, t = std::exp(m.first);
  if (best_v > v) {
    v = best_v;
    t = std::exp(grid[best]);
  }
  return {std::max(v, 0.0), t};
}

// ------------------------------------------------------------------- LocalPsi

LocalPsi LocalPsi::from(const Coefficients& c, int dim) {
  if (std::isnan(c.p) || std::isnan(c.q) || std::isnan(c.r) || std::isnan(c.a))
    throw InvalidArgument("NaN exponent");
  if (c.p >= dim || c.q >= dim) throw InvalidArgument("supercritical exponent");
  LocalPsi f;
  f.p_star = dim * c.p / (dim - c.p);
  f.q_star = dim * c.q / (dim - c.q);
  f.s = c.r * f.q_star / c.q;
  if (c.a > 0.0) {
    const double la = std::log(c.a);
    f.log_A = f.q_star / c.q * la;
    f.log_b = (c.q - 1.0) / c.q * la;
  }
  return f;
}

double LocalPsi::log_value(double lt) const {
  if (lt == -kInf) return -kInf;
  const double l1 = p_star * lt;
  if (log_A == -kInf) return l1;
  const double l2 = log_A + q_star * lt + s * std::log(log_e_plus_exp(lt - log_b));
  return log_add_exp(l1, l2);
}

double LocalPsi::value(double t) const {
  check_t(t);
  if (t == 0.0) return 0.0;
  const double lt = std::log(t);
  const double v1 = std::exp(p_star * lt);
  if (log_A == -kInf) return v1;
  return v1 + std::exp(log_A + q_star * lt + s * std::log(log_e_plus_exp(lt - log_b)));
}

Probe LocalPsi::probe(double lt) const {
  if (lt == -kInf) return {};
  const double v1 = std::exp(p_star * lt);
  if (log_A == -kInf) return {v1, p_star * v1};
  const double lu = lt - log_b;
  const double L = log_e_plus_exp(lu);
  const double v2 = std::exp(log_A + q_star * lt + s * std::log(L));
  return {v1 + v2, p_star * v1 + v2 * (q_star + s * saturation(lu) / L)};
}

LogProbe LocalPsi::log_probe(double lt) const {
  if (lt == -kInf) return {};
  const double l1 = p_star * lt;
  if (log_A == -kInf) return {l1, p_star};
  const double lu = lt - log_b;
  const double L = log_e_plus_exp(lu);
  const double l2 = log_A + q_star * lt + s * std::log(L);
  const double lv = log_add_exp(l1, l2);
  const double w1 = std::exp(l1 - lv), w2 = std::exp(l2 - lv);
  return {lv, p_star * w1 + w2 * (q_star + s * saturation(lu) / L)};
}

InverseResult LocalPsi::inverse(double v) const {
  check_t(v);
  if (std::isinf(v)) throw InvalidArgument("cannot invert at s = inf");
  if (v == 0.0) return {};
  const double lv = std::log(v);
  if (log_A == -kInf) return {std::exp(lv / p_star), false};
  return solve_log([this](double lt) { return log_value(lt); }, lv, lv / p_star, q_star + s >= 0.0);
}

// ---------------------------------------------------------------- PhiFunction

const char* to_string(PhiMode m) { return m == PhiMode::general ? "general" : "equal"; }

PhiFunction::PhiFunction(ExponentField field, PhiMode mode) : field_(std::move(field)), mode_(mode) {}

Coefficients PhiFunction::coefficients(const Point& x) const {
  Coefficients c = field_.at(x);
  if (mode_ == PhiMode::equal) c.q = c.p;
  return c;
}

DeclaredBounds PhiFunction::bounds_over(const SampleSet& samples) const {
  DeclaredBounds b = field_.bounds_over(samples);
  if (mode_ == PhiMode::equal) {
    b.q_min = b.p_min;
    b.q_max = b.p_max;
  }
  return b;
}

json PhiFunction::to_json() const {
  json j = field_.to_json();
  j["mode"] = to_string(mode_);
  return j;
}

double phi_eval(const PhiFunction& phi, const Point& x, double t) { return phi.at(x).value(t); }

InverseResult phi_inverse(const PhiFunction& phi, const Point& x, double s) { return phi.at(x).inverse(s); }

ConjugateValue phi_conjugate(const PhiFunction& phi, const Point& x, double s, const ConjugateOptions& opt) {
  return phi.at(x).conjugate(s, opt);
}

ScalarField sobolev_conjugate(const ExponentField& field, Component which, const SampleSet& samples) {
  if (which != Component::p && which != Component::q)
    throw InvalidArgument("Sobolev conjugate is defined for p or q");
  const auto [lo, hi] = infsup_over(field, samples, which);
  const int n = field.dim();
  if (hi >= n) throw InvalidArgument("supercritical exponent");
  if (lo < 1.0) throw InvalidArgument("exponent below 1");
  return field.component(which).map([n](double v) { return n * v / (n - v); },
                                    std::string(to_string(which)) + "*");
}

PsiFunction::PsiFunction(PhiFunction source, const SampleSet& samples) : source_(std::move(source)) {
  const DeclaredBounds b = source_.bounds_over(samples);
  if (b.p_max >= dim() || b.q_max >= dim()) throw InvalidArgument("supercritical exponent");
  if (b.p_min < 1.0) throw InvalidArgument("p < 1 on the samples");
}

PsiFunction make_target_psi(const PhiFunction& phi, const SampleSet& samples) { return PsiFunction(phi, samples); }

double psi_eval(const PsiFunction& psi, const Point& x, double t) { return psi.at(x).value(t); }

// ------------------------------------------------------------ (Inc) and (Dec)

std::pair<double, double> inc_dec_exponents(const PhiFunction& phi, const SampleSet& samples) {
  const DeclaredBounds b = phi.bounds_over(samples);
  return {b.p_min, b.q_max + std::max(b.r_max, 0.0)};
}

VerificationReport check_inc_dec(const PhiFunction& phi, const SampleSet& samples, double alpha, double beta,
                                 std::size_t pairs, std::uint64_t seed) {
  if (samples.empty()) throw InvalidArgument("empty sample set");
  VerificationReport rep("inc/dec", 1e-12);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lt_dist(-20.0 * kLn2, 20.0 * kLn2);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::size_t inc_viol = 0, dec_viol = 0;
  double inc_worst = kInf, dec_worst = kInf;
  const int n = samples.dim;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Point& x = samples.points[pick(rng)];
    double ls = lt_dist(rng), lt = lt_dist(rng);
    if (ls > lt) std::swap(ls, lt);
    if (ls == lt) continue;
    const LocalPhi f = phi.at(x);
    const double fs = f.log_value(ls), ft = f.log_value(lt);
    const double scale = std::max({1.0, std::fabs(fs), std::fabs(ft)});
    const double inc = ((ft - alpha * lt) - (fs - alpha * ls)) / scale;
    const double dec = ((fs - beta * ls) - (ft - beta * lt)) / scale;
    auto witness = [&](const char* which) {
      return json{{"condition", which}, {"x", point_json(x, n)}, {"s", std::exp(ls)}, {"t", std::exp(lt)}};
    };
    if (!rep.record(inc, [&] { return witness("inc"); })) ++inc_viol;
    if (!rep.record(dec, [&] { return witness("dec"); })) ++dec_viol;
    inc_worst = std::min(inc_worst, inc);
    dec_worst = std::min(dec_worst, dec);
  }
  rep.details = {{"alpha", alpha}, {"beta", beta}, {"inc_violations", inc_viol}, {"dec_violations", dec_viol},
                 {"inc_worst_margin", number_json(inc_worst)}, {"dec_worst_margin", number_json(dec_worst)},
                 {"samples", samples.resolution}};
  return rep;
}

VerificationReport check_inverse_relation(const PhiFunction& phi, const PsiFunction& psi, const SampleSet& samples,
                                          double t_lo, double t_hi, double kappa, std::size_t t_points) {
  if (!(t_lo > 0.0 && t_hi >= t_lo)) throw InvalidArgument("bad t range");
  if (!(kappa >= 1.0)) throw InvalidArgument("kappa must be at least 1");
  VerificationReport rep("inverse relation", 1e-12);
  const int n = phi.dim();
  const std::size_t stride = std::max<std::size_t>(1, samples.size() / 200);
  double lo = kInf, hi = 0.0;
  for (std::size_t i = 0; i < samples.size(); i += stride) {
    const Point& x = samples.points[i];
    const LocalPhi f = phi.at(x);
    const LocalPsi g = psi.at(x);
    for (std::size_t k = 0; k < t_points; ++k) {
      const double frac = t_points == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(t_points - 1);
      const double t = t_lo * std::pow(t_hi / t_lo, frac);
      const double ratio = std::pow(t, -1.0 / n) * f.inverse(t).t / g.inverse(t).t;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      rep.record(std::log(kappa) - std::fabs(std::log(ratio)),
                 [&] { return json{{"x", point_json(x, n)}, {"t", t}, {"ratio", ratio}}; });
    }
  }
  rep.details = {{"min_ratio", lo}, {"max_ratio", hi}, {"kappa", kappa},
                 {"empirical_kappa", std::max(hi, 1.0 / lo)}, {"t_range", {t_lo, t_hi}}};
  return rep;
}

}  // namespace molab
