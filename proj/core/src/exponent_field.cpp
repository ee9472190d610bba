#include "molab/exponent_field.hpp"

#include <algorithm>
#include <random>

#include "molab/expression.hpp"
#include "molab/quadrature.hpp"

namespace molab {

// ---------------------------------------------------------------- ScalarField

ScalarField::ScalarField() : ScalarField(ScalarField::constant(0.0)) {}

ScalarField::ScalarField(Function f, json spec, std::optional<double> constant)
    : f_(std::move(f)), spec_(std::move(spec)), constant_(constant) {}

ScalarField ScalarField::constant(double value) {
  return ScalarField([value](const Point&) { return value; }, json(value), value);
}

ScalarField ScalarField::affine(double offset, const std::vector<double>& gradient) {
  if (gradient.size() > static_cast<std::size_t>(kMaxDim))
    throw InvalidArgument("affine gradient has more than 3 components");
  Point g{};
  bool zero = true;
  for (std::size_t k = 0; k < gradient.size(); ++k) {
    g[k] = gradient[k];
    zero = zero && gradient[k] == 0.0;
  }
  json spec = {{"kind", "affine"}, {"offset", offset}, {"gradient", gradient}};
  return ScalarField([offset, g](const Point& x) { return offset + g[0] * x[0] + g[1] * x[1] + g[2] * x[2]; },
                     spec, zero ? std::optional<double>(offset) : std::nullopt);
}

ScalarField ScalarField::radial(const Point& center, int dim, double base, double slope, double power) {
  json spec = {{"kind", "radial"}, {"center", point_json(center, dim)}, {"base", base},
               {"slope", slope}, {"power", power}};
  return ScalarField(
      [=](const Point& x) {
        const double d = distance(x, center, dim);
        return base + slope * (d == 0.0 ? (power > 0 ? 0.0 : power == 0 ? 1.0 : kInf) : std::pow(d, power));
      },
      spec, slope == 0.0 ? std::optional<double>(base) : std::nullopt);
}

ScalarField ScalarField::bump(const Point& center, int dim, double radius, double base, double height) {
  if (!(radius > 0)) throw InvalidArgument("bump radius must be positive");
  json spec = {{"kind", "bump"}, {"center", point_json(center, dim)}, {"radius", radius},
               {"base", base}, {"height", height}};
  return ScalarField(
      [=](const Point& x) {
        const double d = distance(x, center, dim) / radius;
        if (d >= 1.0) return base;
        const double s = 1.0 - d * d;
        return base + height * s * s;
      },
      spec, height == 0.0 ? std::optional<double>(base) : std::nullopt);
}

ScalarField ScalarField::step(int axis, double at, double below, double above) {
  if (axis < 0 || axis >= kMaxDim) throw InvalidArgument("step axis out of range");
  json spec = {{"kind", "step"}, {"axis", axis}, {"at", at}, {"below", below}, {"above", above}};
  return ScalarField([=](const Point& x) { return x[axis] < at ? below : above; }, spec,
                     below == above ? std::optional<double>(below) : std::nullopt);
}

ScalarField ScalarField::expression(const std::string& text, int dim) {
  Expression e = Expression::parse(text, dim);
  std::optional<double> c;
  if (e.is_constant()) c = e(Point{});
  return ScalarField([e](const Point& x) { return e(x); }, json(text), c);
}

ScalarField ScalarField::custom(Function f, const std::string& label) {
  return ScalarField(std::move(f), json{{"kind", "custom"}, {"label", label}});
}

ScalarField ScalarField::map(const std::function<double(double)>& g, const std::string& label) const {
  Function f = f_;
  std::optional<double> c;
  if (constant_) c = g(*constant_);
  return ScalarField([f, g](const Point& x) { return g(f(x)); },
                     json{{"kind", "map"}, {"label", label}, {"of", spec_}}, c);
}

namespace {

Point read_point(const json& j, int dim) {
  Point p{};
  if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
    throw ConfigError("point must be an array of " + std::to_string(dim) + " numbers");
  for (int k = 0; k < dim; ++k) p[k] = j.at(k).get<double>();
  return p;
}

}  // namespace

ScalarField ScalarField::from_json(const json& spec, int dim) {
  try {
    if (spec.is_number()) return constant(spec.get<double>());
    if (spec.is_string()) return expression(spec.get<std::string>(), dim);
    if (!spec.is_object() || !spec.contains("kind"))
      throw ConfigError("field must be a number, an expression string or an object with 'kind'");
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "constant") return constant(spec.at("value").get<double>());
    if (kind == "affine") {
      auto g = spec.at("gradient").get<std::vector<double>>();
      if (g.size() != static_cast<std::size_t>(dim)) throw ConfigError("affine gradient has wrong length");
      return affine(spec.value("offset", 0.0), g);
    }
    if (kind == "radial")
      return radial(read_point(spec.at("center"), dim), dim, spec.value("base", 0.0),
                    spec.value("slope", 1.0), spec.value("power", 1.0));
    if (kind == "bump")
      return bump(read_point(spec.at("center"), dim), dim, spec.at("radius").get<double>(),
                  spec.value("base", 0.0), spec.value("height", 1.0));
    if (kind == "step")
      return step(spec.at("axis").get<int>(), spec.value("at", 0.0), spec.at("below").get<double>(),
                  spec.at("above").get<double>());
    if (kind == "expr") return expression(spec.at("text").get<std::string>(), dim);
    throw ConfigError("unknown field kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad field description: ") + e.what());
  }
}

// ------------------------------------------------------------------ SampleSet

SampleSet SampleSet::lattice(const Box& box, std::size_t per_axis) {
  if (per_axis < 1) throw InvalidArgument("lattice needs at least one point per axis");
  SampleSet s;
  s.dim = box.dim;
  std::size_t total = 1;
  for (int k = 0; k < box.dim; ++k) total *= per_axis;
  s.points.reserve(total);
  auto coord = [&](int k, std::size_t i) {
    return per_axis == 1 ? 0.5 * (box.lo[k] + box.hi[k])
                         : box.lo[k] + box.extent(k) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
  };
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point x{};
    std::size_t rem = idx;
    for (int k = box.dim - 1; k >= 0; --k) {
      x[k] = coord(k, rem % per_axis);
      rem /= per_axis;
    }
    s.points.push_back(x);
  }
  s.graded_begin = s.points.size();
  s.resolution = "lattice " + std::to_string(per_axis) + "^" + std::to_string(box.dim);
  return s;
}

SampleSet SampleSet::from_points(int dim, std::vector<Point> points, std::string resolution) {
  SampleSet s;
  s.dim = dim;
  s.points = std::move(points);
  s.graded_begin = s.points.size();
  s.resolution = std::move(resolution);
  return s;
}

SampleSet& SampleSet::refine_near(const Point& center, int levels, int directions, double radius,
                                  const std::function<bool(const Point&)>& keep) {
  auto add = [&](const Point& x) {
    if (!keep || keep(x)) points.push_back(x);
  };
  add(center);
  for (int l = 0; l < levels; ++l) {
    const double d = radius * std::ldexp(1.0, -l);
    for (int j = 0; j < directions; ++j) {
      Point x = center;
      if (dim == 1) {
        x[0] += (j % 2 ? -d : d);
      } else if (dim == 2) {
        const double th = 2.0 * kPi * j / directions;
        x[0] += d * std::cos(th);
        x[1] += d * std::sin(th);
      } else {
        // Fibonacci sphere
        const double z = 1.0 - 2.0 * (j + 0.5) / directions;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = kPi * (3.0 - std::sqrt(5.0)) * j;
        x[0] += d * rho * std::cos(th);
        x[1] += d * rho * std::sin(th);
        x[2] += d * z;
      }
      add(x);
    }
  }
  resolution += " + graded " + std::to_string(levels) + "x" + std::to_string(directions) + " at " +
                format_point(center, dim);
  return *this;
}

SampleSet SampleSet::filtered(const std::function<bool(const Point&)>& keep) const {
  SampleSet s;
  s.dim = dim;
  s.resolution = resolution + " (filtered)";
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i == graded_begin) s.graded_begin = s.points.size();
    if (keep(points[i])) s.points.push_back(points[i]);
  }
  if (graded_begin >= points.size()) s.graded_begin = s.points.size();
  return s;
}

// -------------------------------------------------------------- ExponentField

const char* to_string(Component c) {
  switch (c) {
    case Component::p: return "p";
    case Component::q: return "q";
    case Component::r: return "r";
    case Component::a: return "a";
  }
  return "?";
}

json DeclaredBounds::to_json() const {
  return {{"p_min", p_min}, {"p_max", p_max}, {"q_min", q_min}, {"q_max", q_max},
          {"r_min", r_min}, {"r_max", r_max}, {"a_min", a_min}, {"a_max", a_max},
          {"samples", samples}, {"resolution", resolution}};
}

ExponentField::ExponentField(int dim, ScalarField p, ScalarField q, ScalarField r, ScalarField a)
    : dim_(dim), p_(std::move(p)), q_(std::move(q)), r_(std::move(r)), a_(std::move(a)) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("dimension must be 1, 2 or 3");
}

ExponentField ExponentField::theorem_mode(int dim, ScalarField p, ScalarField q, ScalarField r,
                                          ScalarField a, const SampleSet& samples) {
  ExponentField f(dim, std::move(p), std::move(q), std::move(r), std::move(a));
  if (samples.empty()) throw InvalidArgument("empty sample set");
  for (const Point& x : samples.points) {
    const Coefficients c = f.at(x);
    const std::string where = " at " + format_point(x, dim);
    if (!std::isfinite(c.p) || !std::isfinite(c.q) || !std::isfinite(c.r) || !std::isfinite(c.a))
      throw InvalidArgument("non-finite exponent" + where);
    if (c.p < 1.0) throw InvalidArgument("p < 1" + where);
    if (c.q < c.p) throw InvalidArgument("q < p" + where);
    if (c.a < 0.0) throw InvalidArgument("a < 0" + where);
  }
  f.declared_ = f.bounds_over(samples);
  return f;
}

ExponentField ExponentField::from_json(const json& spec, int dim) {
  if (!spec.is_object() || !spec.contains("p")) throw ConfigError("field needs at least 'p'");
  ScalarField p = ScalarField::from_json(spec.at("p"), dim);
  ScalarField q = spec.contains("q") ? ScalarField::from_json(spec.at("q"), dim) : p;
  ScalarField r = spec.contains("r") ? ScalarField::from_json(spec.at("r"), dim) : ScalarField::constant(0.0);
  ScalarField a = spec.contains("a") ? ScalarField::from_json(spec.at("a"), dim) : ScalarField::constant(0.0);
  return ExponentField(dim, p, q, r, a);
}

const ScalarField& ExponentField::component(Component c) const {
  switch (c) {
    case Component::p: return p_;
    case Component::q: return q_;
    case Component::r: return r_;
    case Component::a: return a_;
  }
  return p_;
}

Coefficients ExponentField::at(const Point& x) const { return {p_(x), q_(x), r_(x), a_(x)}; }

DeclaredBounds ExponentField::bounds_over(const SampleSet& samples) const {
  if (samples.empty()) throw InvalidArgument("empty sample set");
  DeclaredBounds b;
  for (const Point& x : samples.points) {
    const Coefficients c = at(x);
    b.p_min = std::min(b.p_min, c.p);
    b.p_max = std::max(b.p_max, c.p);
    b.q_min = std::min(b.q_min, c.q);
    b.q_max = std::max(b.q_max, c.q);
    b.r_min = std::min(b.r_min, c.r);
    b.r_max = std::max(b.r_max, c.r);
    b.a_min = std::min(b.a_min, c.a);
    b.a_max = std::max(b.a_max, c.a);
  }
  b.samples = samples.size();
  b.resolution = samples.resolution;
  return b;
}

ExponentField ExponentField::with_q_equal_p() const {
  ExponentField f(dim_, p_, p_, r_, a_);
  f.declared_ = declared_;
  if (f.declared_) {
    f.declared_->q_min = f.declared_->p_min;
    f.declared_->q_max = f.declared_->p_max;
  }
  return f;
}

json ExponentField::to_json() const {
  return {{"dim", dim_}, {"p", p_.spec()}, {"q", q_.spec()}, {"r", r_.spec()}, {"a", a_.spec()}};
}

std::pair<double, double> infsup_over(const ScalarField& f, const SampleSet& samples) {
  if (samples.empty()) throw InvalidArgument("empty sample set");
  if (auto c = f.constant_value()) return {*c, *c};
  double lo = kInf, hi = -kInf;
  for (const Point& x : samples.points) {
    const double v = f(x);
    if (std::isnan(v)) throw NumericError("field is NaN at " + format_point(x, samples.dim));
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

std::pair<double, double> infsup_over(const ExponentField& field, const SampleSet& samples,
                                      Component which) {
  return infsup_over(field.component(which), samples);
}

// ----------------------------------------------------------------- regularity

const char* to_string(RegularityKind k) {
  switch (k) {
    case RegularityKind::log_holder: return "log-holder";
    case RegularityKind::loglog_holder: return "log-log-holder";
    case RegularityKind::holder: return "holder";
    case RegularityKind::nekvinda: return "nekvinda";
  }
  return "?";
}

json RegularityEstimate::to_json() const {
  json j = {{"kind", to_string(kind)}, {"constant", number_json(constant)},
            {"witness_x", point_json(x, dim)}, {"witness_y", point_json(y, dim)},
            {"pairs", pairs}, {"resolution", resolution}};
  if (kind == RegularityKind::holder) j["gamma"] = gamma;
  return j;
}

namespace {

// Visits a deterministic set of index pairs: all of them when they fit the
// budget, otherwise pairs touching graded points, all pairs of a strided
// subset, and random local and global pairs.
template <class Visit>
std::size_t for_each_pair(std::size_t n, std::size_t graded_begin, const PairOptions& opt, Visit&& visit) {
  const std::size_t total = n < 2 ? 0 : n * (n - 1) / 2;
  if (total <= opt.max_pairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) visit(i, j);
    return total;
  }
  std::mt19937_64 rng(opt.seed);
  std::size_t budget = opt.max_pairs;
  std::size_t visited = 0;
  const std::size_t g = n - std::min(graded_begin, n);
  const std::size_t u = n - g;

  const std::size_t graded_pairs = g * (g - (g ? 1 : 0)) / 2 + g * u;
  if (graded_pairs <= budget / 2) {
    for (std::size_t i = u; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) visit(j, i);
    visited += graded_pairs;
    budget -= graded_pairs;
  } else if (g > 0) {
    std::uniform_int_distribution<std::size_t> gi(u, n - 1), any(0, n - 1);
    const std::size_t m = budget / 2;
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = gi(rng), j = any(rng);
      if (i != j) visit(std::min(i, j), std::max(i, j));
    }
    visited += m;
    budget -= m;
  }
  if (u < 2) return visited;

  const std::size_t m = std::max<std::size_t>(2, static_cast<std::size_t>(std::sqrt(static_cast<double>(budget))));
  const std::size_t stride = std::max<std::size_t>(1, (u + m - 1) / m);
  std::vector<std::size_t> subset;
  for (std::size_t i = 0; i < u; i += stride) subset.push_back(i);
  if (subset.back() != u - 1) subset.push_back(u - 1);
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = a + 1; b < subset.size(); ++b) visit(subset[a], subset[b]);
  const std::size_t sub_pairs = subset.size() * (subset.size() - 1) / 2;
  visited += sub_pairs;
  budget = budget > sub_pairs ? budget - sub_pairs : 0;

  std::uniform_int_distribution<std::size_t> any(0, u - 1);
  std::uniform_int_distribution<std::size_t> offset(1, std::max<std::size_t>(1, stride * 2));
  for (std::size_t k = 0; k < budget; ++k) {
    const std::size_t i = any(rng);
    std::size_t j = (k % 2 == 0) ? i + offset(rng) : any(rng);
    if (j >= u || i == j) continue;
    visit(std::min(i, j), std::max(i, j));
  }
  return visited + budget;
}

template <class Ratio>
RegularityEstimate scan_modulus(const ScalarField& f, const SampleSet& samples, const PairOptions& opt,
                                RegularityKind kind, Ratio ratio) {
  if (samples.size() < 2) throw InvalidArgument("need at least two sample points");
  RegularityEstimate est;
  est.kind = kind;
  est.dim = samples.dim;
  est.resolution = samples.resolution;
  est.x = samples.points[0];
  est.y = samples.points[1];
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = f(samples.points[i]);
    if (std::isnan(v[i])) throw NumericError("field is NaN at " + format_point(samples.points[i], samples.dim));
  }
  const bool constant = f.constant_value().has_value();
  est.pairs = for_each_pair(samples.size(), samples.graded_begin, opt, [&](std::size_t i, std::size_t j) {
    if (constant) return;
    const double dv = std::fabs(v[i] - v[j]);
    if (dv == 0.0) return;
    const double d = distance(samples.points[i], samples.points[j], samples.dim);
    if (d == 0.0) return;
    const double r = ratio(dv, d);
    if (r > est.constant) {
      est.constant = r;
      est.x = samples.points[i];
      est.y = samples.points[j];
    }
  });
  return est;
}

}  // namespace

RegularityEstimate estimate_log_holder(const ScalarField& f, const SampleSet& samples, const PairOptions& options) {
  return scan_modulus(f, samples, options, RegularityKind::log_holder,
                      [](double dv, double d) { return dv * std::log(kE + 1.0 / d); });
}

RegularityEstimate estimate_loglog_holder(const ScalarField& f, const SampleSet& samples, const PairOptions& options) {
  return scan_modulus(f, samples, options, RegularityKind::loglog_holder,
                      [](double dv, double d) { return dv * std::log(kE + std::log(kE + 1.0 / d)); });
}

RegularityEstimate estimate_holder(const ScalarField& f, const SampleSet& samples, double gamma,
                                   const PairOptions& options) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("Hölder exponent must lie in (0, 1]");
  RegularityEstimate e = scan_modulus(f, samples, options, RegularityKind::holder,
                                      [gamma](double dv, double d) { return dv / std::pow(d, gamma); });
  e.gamma = gamma;
  return e;
}

RegularityEstimate estimate_log_holder(const ExponentField& field, const SampleSet& samples, Component which,
                                       const PairOptions& options) {
  return estimate_log_holder(field.component(which), samples, options);
}

RegularityEstimate estimate_loglog_holder(const ExponentField& field, const SampleSet& samples,
                                          const PairOptions& options) {
  return estimate_loglog_holder(field.component(Component::r), samples, options);
}

RegularityEstimate estimate_holder(const ExponentField& field, const SampleSet& samples, double gamma,
                                   Component which, const PairOptions& options) {
  return estimate_holder(field.component(which), samples, gamma, options);
}

// ------------------------------------------------------------------- Nekvinda

json NekvindaResult::to_json() const {
  return {{"passes", passes}, {"integral", number_json(integral)}, {"radii", radii}, {"partials", partials}};
}

NekvindaResult check_nekvinda(const ScalarField& p, int dim, double p_infty, double c,
                              const NekvindaOptions& options) {
  if (!(c > 0.0 && c < 1.0)) throw InvalidArgument("Nekvinda constant c must lie in (0, 1)");
  if (!(p_infty >= 1.0)) throw InvalidArgument("p_infty must be at least 1");
  const double inv_inf = std::isinf(p_infty) ? 0.0 : 1.0 / p_infty;
  const double log_c = std::log(c);
  auto integrand = [&](const Point& x) {
    const double pv = p(x);
    if (std::isnan(pv)) throw NumericError("p is NaN at " + format_point(x, dim));
    const double gap = std::fabs(inv_inf - 1.0 / pv);
    if (gap == 0.0) return 0.0;
    return std::exp(log_c / gap);
  };

  const GaussRule& radial = gauss_legendre(24);
  const GaussRule& polar = gauss_legendre(16);
  constexpr int kPanels = 4;
  const int n_phi = dim == 2 ? 128 : 32;

  auto shell = [&](double r0, double r1) {
    double sum = 0.0;
    const double h = (r1 - r0) / kPanels;
    for (int pnl = 0; pnl < kPanels; ++pnl) {
      const double a = r0 + pnl * h;
      for (std::size_t i = 0; i < radial.nodes.size(); ++i) {
        const double r = a + 0.5 * h * (radial.nodes[i] + 1.0);
        const double wr = 0.5 * h * radial.weights[i];
        double ang = 0.0;
        if (dim == 1) {
          Point x = options.center;
          x[0] += r;
          ang += integrand(x);
          x[0] = options.center[0] - r;
          ang += integrand(x);
        } else if (dim == 2) {
          for (int j = 0; j < n_phi; ++j) {
            const double th = 2.0 * kPi * j / n_phi;
            Point x = options.center;
            x[0] += r * std::cos(th);
            x[1] += r * std::sin(th);
            ang += integrand(x);
          }
          ang *= 2.0 * kPi / n_phi * r;
        } else {
          for (std::size_t m = 0; m < polar.nodes.size(); ++m) {
            const double z = polar.nodes[m];
            const double s = std::sqrt(1.0 - z * z);
            double ring = 0.0;
            for (int j = 0; j < n_phi; ++j) {
              const double th = 2.0 * kPi * j / n_phi;
              Point x = options.center;
              x[0] += r * s * std::cos(th);
              x[1] += r * s * std::sin(th);
              x[2] += r * z;
              ring += integrand(x);
            }
            ang += polar.weights[m] * ring * 2.0 * kPi / n_phi;
          }
          ang *= r * r;
        }
        sum += wr * ang;
      }
    }
    return sum;
  };

  NekvindaResult res;
  std::vector<double> increments;
  double inner = 0.0, outer = 1.0;
  for (int s = 0; s < options.max_shells; ++s) {
    const double inc = shell(inner, outer);
    res.integral += inc;
    increments.push_back(inc);
    res.radii.push_back(outer);
    res.partials.push_back(res.integral);
    if (static_cast<int>(increments.size()) >= options.stable_shells) {
      bool stable = true;
      for (int k = 0; k < options.stable_shells; ++k) {
        const double d = increments[increments.size() - 1 - k];
        if (!(d <= options.rel_tol * res.integral || (d == 0.0 && res.integral == 0.0))) stable = false;
      }
      if (stable) {
        res.passes = true;
        return res;
      }
    }
    inner = outer;
    outer *= 2.0;
  }
  return res;
}

// ----------------------------------------------------------- ball oscillation

VerificationReport check_ball_oscillation_lemma(const ScalarField& p, const Box& region, std::size_t trials,
                                                std::uint64_t seed) {
  const int n = region.dim;
  VerificationReport rep("ball oscillation", 1e-12);
  const ScalarField inv_p = p.map([](double v) { return 1.0 / v; }, "1/p");
  SampleSet lattice = SampleSet::lattice(region, n == 2 ? 48 : n == 3 ? 14 : 400);
  const RegularityEstimate c_log = estimate_log_holder(inv_p, lattice);
  const double omega = unit_ball_volume(n);
  const double rho_max = std::min(std::pow(omega, -1.0 / n), 0.5 * region.diameter());
  const double rho_min = std::min(1e-4, rho_max);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double empirical = 1.0;
  for (std::size_t t = 0; t < trials; ++t) {
    Point center{};
    for (int k = 0; k < n; ++k) center[k] = region.lo[k] + region.extent(k) * u01(rng);
    const double rho = rho_min * std::pow(rho_max / rho_min, u01(rng));
    const double log_b = std::log(omega) + n * std::log(rho);
    double lo = kInf, hi = -kInf;
    Point xlo{}, xhi{};
    int got = 0;
    for (int attempt = 0; attempt < 400 && got < 16; ++attempt) {
      const Point x = sample_in_ball(rng, center, rho, n);
      if (!region.contains(x)) continue;
      ++got;
      const double v = 1.0 / p(x);
      if (v < lo) { lo = v; xlo = x; }
      if (v > hi) { hi = v; xhi = x; }
    }
    if (got < 2) continue;
    const double log_value = -log_b * (hi - lo);
    const double log_bound = c_log.constant * (-log_b) / std::log(kE + 1.0 / (2.0 * rho));
    empirical = std::max(empirical, std::exp(log_value));
    rep.record(log_bound - log_value, [&] {
      return json{{"center", point_json(center, n)}, {"radius", rho}, {"x", point_json(xhi, n)},
                  {"y", point_json(xlo, n)}, {"value", std::exp(log_value)}, {"bound", std::exp(log_bound)}};
    });
  }
  double bound_sup = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double rho = rho_min * std::pow(rho_max / rho_min, i / 200.0);
    const double log_b = std::log(omega) + n * std::log(rho);
    bound_sup = std::max(bound_sup, std::exp(c_log.constant * (-log_b) / std::log(kE + 1.0 / (2.0 * rho))));
  }
  rep.details = {{"empirical_c", empirical}, {"log_holder_of_inverse_p", c_log.to_json()},
                 {"radius_range", {rho_min, rho_max}}, {"trials", trials}, {"bound_sup", bound_sup}};
  return rep;
}

std::vector<double> ball_oscillation_sweep(const ScalarField& p, int dim, const Point& center,
                                           const std::vector<double>& radii, std::size_t points_per_ball,
                                           std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double omega = unit_ball_volume(dim);
  std::vector<double> out;
  for (double rho : radii) {
    double lo = 1.0 / p(center), hi = lo;
    for (std::size_t i = 0; i < points_per_ball; ++i) {
      const double v = 1.0 / p(sample_in_ball(rng, center, rho, dim));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double log_b = std::log(omega) + dim * std::log(rho);
    out.push_back(std::exp(-log_b * (hi - lo)));
  }
  return out;
}

}  // namespace molab
