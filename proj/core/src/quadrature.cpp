#include "molab/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace molab {

namespace {

template <int N>
GaussRule expand_gauss() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  GaussRule rule;
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    rule.nodes.push_back(-x[i]);
    rule.weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule.nodes.push_back(x[i]);
    rule.weights.push_back(w[i]);
  }
  return rule;
}

KronrodRule make_kronrod15() {
  using K = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  const auto& xk = K::abscissa();
  const auto& wk = K::weights();
  const auto& wg = G::weights();
  KronrodRule rule;
  auto gauss_weight = [&](std::size_t i) { return i % 2 == 0 ? wg[i / 2] : 0.0; };
  for (std::size_t i = xk.size(); i-- > 1;) {
    rule.nodes.push_back(-xk[i]);
    rule.kronrod_weights.push_back(wk[i]);
    rule.gauss_weights.push_back(gauss_weight(i));
  }
  for (std::size_t i = 0; i < xk.size(); ++i) {
    rule.nodes.push_back(xk[i]);
    rule.kronrod_weights.push_back(wk[i]);
    rule.gauss_weights.push_back(gauss_weight(i));
  }
  return rule;
}

struct PanelResult {
  double a, b;
  double log_value;
  double log_error;
};

PanelResult eval_panel(const std::function<double(double)>& log_f, double a, double b) {
  const KronrodRule& rule = gauss_kronrod15();
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double lv[15];
  double mx = -kInf;
  for (int i = 0; i < 15; ++i) {
    lv[i] = log_f(mid + half * rule.nodes[i]);
    if (std::isnan(lv[i])) throw NumericError("integrand returned NaN");
    mx = std::max(mx, lv[i]);
  }
  if (mx == -kInf) return {a, b, -kInf, -kInf};
  if (mx == kInf) throw NumericError("integrand is infinite");
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = std::exp(lv[i] - mx);
    k += rule.kronrod_weights[i] * v;
    g += rule.gauss_weights[i] * v;
  }
  const double lh = std::log(half);
  const double err = std::fabs(k - g);
  return {a, b, mx + lh + std::log(k), err > 0 ? mx + lh + std::log(err) : -kInf};
}

}  // namespace

const GaussRule& gauss_legendre(int points) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(points);
  if (it != cache.end()) return it->second;
  GaussRule rule;
  switch (points) {
    case 4: rule = expand_gauss<4>(); break;
    case 8: rule = expand_gauss<8>(); break;
    case 12: rule = expand_gauss<12>(); break;
    case 16: rule = expand_gauss<16>(); break;
    case 24: rule = expand_gauss<24>(); break;
    case 32: rule = expand_gauss<32>(); break;
    default: throw InvalidArgument("unsupported Gauss-Legendre size " + std::to_string(points));
  }
  return cache.emplace(points, std::move(rule)).first->second;
}

const KronrodRule& gauss_kronrod15() {
  static const KronrodRule rule = make_kronrod15();
  return rule;
}

LogIntegral integrate_log(const std::function<double(double)>& log_f, double a, double b,
                          double rel_tol, std::size_t max_panels,
                          const std::vector<double>& breakpoints) {
  LogIntegral out;
  if (!(b > a)) return out;
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && c < b) cuts.push_back(c);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<PanelResult> panels;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    panels.push_back(eval_panel(log_f, cuts[i], cuts[i + 1]));
    out.evaluations += 15;
  }
  const double log_tol = std::log(rel_tol);
  for (;;) {
    LogSum total, error;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total.add(panels[i].log_value);
      error.add(panels[i].log_error);
      if (panels[i].log_error > panels[worst].log_error) worst = i;
    }
    out.log_value = total.value();
    out.log_error = error.value();
    if (out.log_value == -kInf || out.log_error <= log_tol + out.log_value) break;
    if (panels.size() >= max_panels) break;
    const PanelResult w = panels[worst];
    const double m = 0.5 * (w.a + w.b);
    if (!(m > w.a && m < w.b)) break;
    panels[worst] = eval_panel(log_f, w.a, m);
    panels.push_back(eval_panel(log_f, m, w.b));
    out.evaluations += 30;
  }
  std::sort(panels.begin(), panels.end(), [](const PanelResult& x, const PanelResult& y) { return x.a < y.a; });
  for (const auto& p : panels) out.panels.emplace_back(p.a, p.b);
  return out;
}

void Quadrature::finalize() {
  weights.resize(log_weights.size());
  log_space = false;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    weights[i] = std::exp(log_weights[i]);
    if (log_weights[i] != -kInf && log_weights[i] < -600.0) log_space = true;
  }
}

double Quadrature::log_measure() const {
  LogSum s;
  for (double lw : log_weights) s.add(lw);
  return s.value();
}

}  // namespace molab

namespace molab {

void SampledFunction::validate() const {
  if (!support) throw InvalidArgument("sampled function has no support");
  if (values.size() != support->size()) throw InvalidArgument("value count does not match the quadrature");
  if (!grad_norm.empty() && grad_norm.size() != support->size())
    throw InvalidArgument("gradient count does not match the quadrature");
  for (double v : values)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite function value");
  for (double g : grad_norm)
    if (!std::isfinite(g) || g < 0.0) throw InvalidArgument("invalid gradient norm");
}

}  // namespace molab
