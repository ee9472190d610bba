#include "molab/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "molab/conditions.hpp"
#include "molab/domain.hpp"
#include "molab/embedding.hpp"
#include "molab/expression.hpp"
#include "molab/modular.hpp"
#include "molab/phi.hpp"

#ifndef MOLAB_VERSION_STRING
#define MOLAB_VERSION_STRING "0.0.0"
#endif

namespace molab {

const char* library_version() { return MOLAB_VERSION_STRING; }

std::string config_hash(const json& config) {
  const std::string s = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string format_csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json Table::to_json() const {
  json out = json::array();
  for (const auto& r : rows) {
    json o = json::object();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      const json& v = r.at(i);
      o[columns[i]] = v.is_number_float() ? number_json(v.get<double>()) : v;
    }
    out.push_back(o);
  }
  return out;
}

namespace {

std::string csv_cell(const json& v) {
  if (v.is_number_float()) return format_csv_number(v.get<double>());
  if (v.is_number() || v.is_boolean()) return v.dump();
  if (v.is_null()) return "";
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string Table::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << csv_cell(r[i]);
    os << "\n";
  }
  return os.str();
}

// ------------------------------------------------------------ parsing

namespace {

const std::set<std::string> kTopKeys{"schema_version", "name", "seed", "dimension", "field", "domain", "task",
                                     "output"};

const std::map<std::string, std::set<std::string>>& task_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"norm", {"kind", "u", "grad", "space", "scales"}},
      {"conditions",
       {"kind", "conditions", "lattice", "beta_A1", "beta_A1_equivalent", "gamma", "p_alpha", "q_alpha", "balls",
        "pairs", "a2_mode", "p_infty", "c"}},
      {"indicator-bounds", {"kind", "regime", "sets", "max_measure"}},
      {"density-scan", {"kind", "points", "s", "alpha", "radii", "radius_count", "radius_start"}},
      {"embed",
       {"kind", "case", "gamma", "p_alpha", "q_alpha", "count", "lattice", "balls", "john_center",
        "john_threshold", "refine", "stability_tolerance"}},
      {"necessity", {"kind", "x", "R0", "levels", "C1", "min_radius", "sweep", "cutoffs", "expect"}},
  };
  return k;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T read(const json& obj, const char* key, T def, const std::string& where) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <class T>
T require_key(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return read<T>(obj, key, T{}, where);
}

Point read_pt(const json& v, int dim, const std::string& where) {
  if (!v.is_array() || v.size() != static_cast<std::size_t>(dim)) throw ConfigError(where + ": expected " +
                                                                                    std::to_string(dim) + " coordinates");
  Point p{};
  for (int k = 0; k < dim; ++k) {
    if (!v[k].is_number()) throw ConfigError(where + ": coordinates must be numbers");
    p[k] = v[k].get<double>();
  }
  return p;
}

PhiMode read_mode(const json& field) {
  const std::string m = read<std::string>(field, "mode", "general", "field");
  if (m == "general") return PhiMode::general;
  if (m == "equal") return PhiMode::equal;
  throw ConfigError("field.mode: expected 'general' or 'equal'");
}

struct Built {
  ShapePtr shape;
  ExponentField field;
  PhiFunction phi;
};

Built build(const Scenario& sc) {
  const json& c = sc.config;
  const json& d = c.at("domain");
  json shape_spec{{"shape", d.at("shape")}};
  if (d.contains("params")) shape_spec["params"] = d.at("params");
  ShapePtr shape = make_shape(shape_spec);
  if (shape->dim() != sc.dim)
    throw ConfigError("domain: shape '" + d.at("shape").get<std::string>() + "' has dimension " +
                      std::to_string(shape->dim()) + ", config says " + std::to_string(sc.dim));
  const json& f = c.at("field");
  json comp = json::object();
  for (const char* k : {"p", "q", "r", "a"})
    if (f.contains(k)) comp[k] = f.at(k);
  ExponentField field = ExponentField::from_json(comp, sc.dim);
  if (read<bool>(f, "theorem_mode", false, "field")) {
    const SampleSet s = SampleSet::lattice(shape->bounding_box(), sc.dim == 2 ? 33 : 13)
                            .filtered([&](const Point& x) { return shape->contains(x); });
    try {
      field = ExponentField::theorem_mode(sc.dim, field.component(Component::p), field.component(Component::q),
                                          field.component(Component::r), field.component(Component::a), s);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("field: ") + e.what());
    }
  }
  PhiFunction phi(field, read_mode(f));
  return {shape, field, phi};
}

void validate_task(const json& t, int dim) {
  const std::string kind = require_key<std::string>(t, "kind", "task");
  const auto it = task_keys().find(kind);
  if (it == task_keys().end()) throw ConfigError("task.kind: unknown task '" + kind + "'");
  check_keys(t, it->second, "task");
  const std::string w = "task";
  if (kind == "norm") {
    if (t.contains("u")) ScalarField::from_json(t.at("u"), dim);
    if (t.contains("grad")) ScalarField::from_json(t.at("grad"), dim);
    const std::string space = read<std::string>(t, "space", "phi", w);
    if (space != "phi" && space != "psi" && space != "sobolev") throw ConfigError("task.space: phi, psi or sobolev");
    if (space == "sobolev" && !t.contains("grad")) throw ConfigError("task: sobolev norm needs 'grad'");
    read<std::vector<double>>(t, "scales", {}, w);
  } else if (kind == "conditions") {
    for (const auto& n : read<std::vector<std::string>>(t, "conditions", {}, w))
      if (n != "A0" && n != "A1_prime" && n != "A1_equivalent" && n != "A2_prime" && n != "inc_dec")
        throw ConfigError("task.conditions: unknown condition '" + n + "'");
    const std::string m = read<std::string>(t, "a2_mode", "bounded", w);
    if (m != "bounded" && m != "nekvinda") throw ConfigError("task.a2_mode: bounded or nekvinda");
    read<std::size_t>(t, "lattice", 21, w);
    read<double>(t, "beta_A1", 0, w);
    read<double>(t, "beta_A1_equivalent", 0, w);
    read<double>(t, "p_infty", 2, w);
    read<double>(t, "c", 0.5, w);
  } else if (kind == "indicator-bounds") {
    parse_sign_regime(read<std::string>(t, "regime", "r>=0", w));
    read<std::size_t>(t, "sets", 100, w);
    read<double>(t, "max_measure", 0.45, w);
  } else if (kind == "density-scan") {
    if (t.contains("points")) {
      if (!t.at("points").is_array()) throw ConfigError("task.points: expected a list");
      for (const auto& p : t.at("points")) read_pt(p, dim, "task.points");
    }
    read<double>(t, "s", dim, w);
    read<double>(t, "alpha", 0, w);
    read<std::vector<double>>(t, "radii", {}, w);
  } else if (kind == "embed") {
    const std::string c = read<std::string>(t, "case", "holder", w);
    if (c != "holder" && c != "log_holder") throw ConfigError("task.case: holder or log_holder");
    read<std::size_t>(t, "count", 50, w);
    read<std::vector<std::size_t>>(t, "refine", {}, w);
    if (t.contains("john_center")) read_pt(t.at("john_center"), dim, "task.john_center");
  } else if (kind == "necessity") {
    if (t.contains("x")) read_pt(t.at("x"), dim, "task.x");
    if (read<double>(t, "R0", 0.5, w) <= 0) throw ConfigError("task.R0 must be positive");
    read<std::size_t>(t, "levels", 10, w);
    if (t.contains("sweep")) {
      const json& s = t.at("sweep");
      check_keys(s, {"lo", "hi", "count"}, "task.sweep");
      const double lo = require_key<double>(s, "lo", "task.sweep"), hi = require_key<double>(s, "hi", "task.sweep");
      if (!(lo > 0 && hi > lo)) throw ConfigError("task.sweep: need 0 < lo < hi");
      read<std::size_t>(s, "count", 12, "task.sweep");
    }
    const std::string e = read<std::string>(t, "expect", "none", w);
    if (e != "none" && e != "decay" && e != "constant") throw ConfigError("task.expect: none, decay or constant");
  }
}

}  // namespace

Scenario parse_scenario(const json& config, const ScenarioOverrides& ov) {
  check_keys(config, kTopKeys, "config");
  if (require_key<int>(config, "schema_version", "config") != kSchemaVersion)
    throw ConfigError("config.schema_version: expected " + std::to_string(kSchemaVersion));
  Scenario sc;
  sc.config = config;
  sc.name = read<std::string>(config, "name", "scenario", "config");
  for (char ch : sc.name)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-'))
      throw ConfigError("config.name: letters, digits, '_' and '-' only");
  sc.seed = read<std::uint64_t>(config, "seed", kDefaultSeed, "config");
  sc.dim = require_key<int>(config, "dimension", "config");
  if (sc.dim != 2 && sc.dim != 3) throw ConfigError("config.dimension: 2 or 3");
  check_keys(require_key<json>(config, "field", "config"), {"p", "q", "r", "a", "mode", "theorem_mode"}, "field");
  const json& d = require_key<json>(config, "domain", "config");
  check_keys(d, {"shape", "params", "resolution"}, "domain");
  require_key<std::string>(d, "shape", "domain");
  sc.resolution = read<std::size_t>(d, "resolution", 64, "domain");
  if (config.contains("output")) check_keys(config.at("output"), {"csv"}, "output");
  if (ov.seed) {
    sc.overrides["seed"] = *ov.seed;
    sc.seed = *ov.seed;
    sc.config["seed"] = *ov.seed;
  }
  if (ov.resolution) {
    sc.overrides["resolution"] = *ov.resolution;
    sc.resolution = *ov.resolution;
    sc.config["domain"]["resolution"] = *ov.resolution;
  }
  if (sc.resolution < 2 || sc.resolution > 4096) throw ConfigError("domain.resolution: between 2 and 4096");
  const json& t = require_key<json>(config, "task", "config");
  validate_task(t, sc.dim);
  sc.task = t.at("kind").get<std::string>();
  build(sc);  // shape and field errors surface here
  return sc;
}

Scenario load_scenario(const std::string& path, const ScenarioOverrides& ov) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_scenario(j, ov);
}

// ------------------------------------------------------------ tasks

namespace {

struct Output {
  json sub_reports = json::array();
  std::vector<Table> tables;
  bool passed = true;

  void add(const json& r) {
    sub_reports.push_back(r);
    if (r.contains("passed") && !r.at("passed").get<bool>()) passed = false;
  }
  void add(const VerificationReport& r) { add(r.to_json()); }
  void add(const ConditionReport& r) { add(r.to_json()); }
};

SampleSet region_samples(const Shape& shape, std::size_t per_axis) {
  SampleSet s = SampleSet::lattice(shape.bounding_box(), per_axis)
                    .filtered([&](const Point& x) { return shape.contains(x); });
  if (s.size() < 2) throw InvalidArgument("too few lattice points inside the domain");
  return s;
}

Point bbox_center(const Shape& shape) {
  const Box b = shape.bounding_box();
  Point c{};
  for (int k = 0; k < b.dim; ++k) c[k] = 0.5 * (b.lo[k] + b.hi[k]);
  return c;
}

void task_norm(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  const DiscretizedDomain dom(b.shape, sc.resolution, sc.seed);
  const auto& cells = dom.cells();
  const ScalarField u = t.contains("u") ? ScalarField::from_json(t.at("u"), sc.dim) : ScalarField::constant(1.0);
  SampledFunction f;
  f.support = cells;
  for (const Point& x : cells->nodes) f.values.push_back(std::fabs(u(x)));
  if (t.contains("grad")) {
    const ScalarField g = ScalarField::from_json(t.at("grad"), sc.dim);
    for (const Point& x : cells->nodes) f.grad_norm.push_back(std::fabs(g(x)));
  }
  f.validate();
  const std::string space = t.value("space", "phi");
  FamilyPtr fam;
  if (space == "psi") {
    fam = psi_family(make_target_psi(b.phi, SampleSet::from_points(sc.dim, cells->nodes, "cells")), cells);
  } else {
    fam = phi_family(b.phi, cells);
  }
  auto norm_of = [&](const SampledFunction& v) {
    return space == "sobolev" ? sobolev_norm(fam, v) : luxemburg_norm(fam, v);
  };
  auto modular_of = [&](const SampledFunction& v) {
    return space == "sobolev" ? sobolev_modular(fam, v) : modular(*fam, v);
  };
  const NormResult base = norm_of(f);
  VerificationReport rep("norm " + space, 1e-8);
  Table tab{"norm", {"scale", "norm", "log_norm", "modular_at_norm", "iterations", "log_space"}, {}};
  std::vector<double> scales = t.value("scales", std::vector<double>{1.0});
  if (std::find(scales.begin(), scales.end(), 1.0) == scales.end()) scales.insert(scales.begin(), 1.0);
  for (double s : scales) {
    SampledFunction v = f;
    for (double& x : v.values) x *= s;
    for (double& x : v.grad_norm) x *= s;
    const NormResult r = s == 1.0 ? base : norm_of(v);
    double mod = kNaN;
    if (std::isfinite(r.value) && r.value > 0) {
      SampledFunction w = v;
      for (double& x : w.values) x /= r.value;
      for (double& x : w.grad_norm) x /= r.value;
      mod = modular_of(w);
      rep.record(1e-8 - std::fabs(mod - 1.0), [&] { return json{{"scale", s}, {"modular", mod}}; });
    }
    if (s != 1.0 && base.value > 0) {
      const double rel = std::fabs(r.value - s * base.value) / (s * base.value);
      rep.record(1e-9 - rel, [&] { return json{{"scale", s}, {"homogeneity_error", rel}}; });
    }
    tab.rows.push_back({s, r.value, r.log_value, mod, r.iterations, r.log_space});
  }
  rep.details["norm"] = number_json(base.value);
  rep.details["log_norm"] = number_json(base.log_value);
  rep.details["measure"] = dom.measure();
  out.add(rep);
  out.tables.push_back(std::move(tab));
}

void task_conditions(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  const SampleSet region = region_samples(*b.shape, t.value("lattice", std::size_t{21}));
  std::vector<std::string> which = t.value(
      "conditions", std::vector<std::string>{"A0", "A1_prime", "A1_equivalent", "A2_prime", "inc_dec"});
  BallSampling balls;
  balls.balls = t.value("balls", std::size_t{1000});
  balls.seed = sc.seed;
  balls.inside = [shape = b.shape](const Point& x) { return shape->contains(x); };
  PairSampling pairs;
  pairs.random_pairs = t.value("pairs", std::size_t{20000});
  pairs.seed = sc.seed;
  const Component qc = b.phi.mode() == PhiMode::equal ? Component::p : Component::q;
  for (const std::string& c : which) {
    try {
      if (c == "A0") {
        out.add(verify_A0(b.phi, region));
      } else if (c == "A1_prime") {
        double beta = t.value("beta_A1", 0.0);
        if (beta <= 0.0) {
          const double gamma = t.value("gamma", 1.0);
          ClaimHypotheses h;
          h.p_alpha = t.value("p_alpha", 1.0);
          h.q_alpha = t.value("q_alpha", 1.0);
          h.p_holder = estimate_holder(b.field, region, h.p_alpha, Component::p).constant;
          h.q_holder = estimate_holder(b.field, region, h.q_alpha, qc).constant;
          const double c_a = estimate_holder(b.field, region, gamma, Component::a).constant;
          const ClaimConstants cc = compute_claim_constants(b.phi, region, balls, h);
          const HolderBeta hb = a1_holder_beta(b.phi, region, cc, c_a, gamma);
          json cj = cc.to_json();
          cj["name"] = "claim constants";
          cj["passed"] = cc.within_bounds();
          cj["holder_beta"] = hb.to_json();
          out.add(cj);
          beta = hb.beta;
        }
        out.add(verify_A1_prime(b.phi, region, beta, balls));
      } else if (c == "A1_equivalent") {
        double beta = t.value("beta_A1_equivalent", 0.0);
        if (beta <= 0.0) {
          const PhiFunction& phi = b.phi;
          const ScalarField aq = ScalarField::custom(
              [&phi](const Point& x) {
                const Coefficients k = phi.coefficients(x);
                return k.a > 0.0 ? std::pow(k.a, 1.0 / k.q) : 0.0;
              },
              "a^(1/q)");
          beta = 1.0 / std::max(1.0, estimate_log_holder(aq, region).constant);
        }
        out.add(verify_A1_equivalent(b.phi, region, beta, pairs));
      } else if (c == "A2_prime") {
        A2Options o;
        o.mode = t.value("a2_mode", std::string("bounded")) == "nekvinda" ? A2Mode::nekvinda : A2Mode::bounded;
        o.p_infty = t.value("p_infty", 2.0);
        o.c = t.value("c", 0.5);
        out.add(verify_A2_prime(b.phi, region, o));
      } else if (c == "inc_dec") {
        const auto [alpha, beta] = inc_dec_exponents(b.phi, region);
        VerificationReport r = check_inc_dec(b.phi, region, alpha, beta, 4000);
        r.details["alpha"] = alpha;
        r.details["beta"] = beta;
        out.add(r);
      }
    } catch (const InvalidArgument& e) {
      out.add(json{{"name", c}, {"passed", false}, {"error", {{"kind", "precondition"}, {"message", e.what()}}}});
    }
  }
}

void task_indicator(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  const SignRegime regime = parse_sign_regime(t.value("regime", std::string("r>=0")));
  const DiscretizedDomain dom(b.shape, sc.resolution, sc.seed);
  const auto sets = random_cell_unions(dom, t.value("sets", std::size_t{100}), t.value("max_measure", 0.45), sc.seed);
  out.add(check_indicator_norm_bounds(b.phi, dom.cells(), sets, regime));
  Table tab{"sets", {"set", "cells", "measure"}, {}};
  const auto& w = dom.cells()->weights;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    double m = 0.0;
    for (std::size_t i : sets[s]) m += w[i];
    tab.rows.push_back({s, sets[s].size(), m});
  }
  out.tables.push_back(std::move(tab));
}

void task_density(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  std::vector<Point> pts;
  if (t.contains("points"))
    for (const auto& p : t.at("points")) pts.push_back(read_pt(p, sc.dim, "task.points"));
  else
    pts.push_back(bbox_center(*b.shape));
  for (const Point& p : pts)
    if (!b.shape->contains(p) && !b.shape->bounding_box().contains(p))
      throw InvalidArgument("density point " + format_point(p, sc.dim) + " is outside the domain");
  std::vector<double> radii = t.value("radii", std::vector<double>{});
  if (radii.empty()) radii = halving_radius_grid(t.value("radius_count", std::size_t{12}), t.value("radius_start", 0.5));
  const DensityScan scan =
      scan_measure_density(*b.shape, pts, t.value("s", static_cast<double>(sc.dim)), t.value("alpha", 0.0), radii);
  VerificationReport rep("measure density scan", 0.0);
  rep.record(scan.monotone ? 0.0 : -1.0, [&] { return json{{"monotone", scan.monotone}}; });
  json sj = scan.to_json();
  sj.erase("table");
  rep.details = sj;
  out.add(rep);
  Table tab{"density", {"point", "R", "log_measure", "log_ratio"}, {}};
  for (const auto& r : scan.table) tab.rows.push_back({r.point, r.R, r.log_measure, r.log_ratio});
  out.tables.push_back(std::move(tab));
}

void task_embed(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  HypothesisOptions ho;
  ho.which = t.value("case", std::string("holder")) == "log_holder" ? EmbeddingCase::log_holder : EmbeddingCase::holder;
  ho.gamma = t.value("gamma", 1.0);
  ho.p_alpha = t.value("p_alpha", 1.0);
  ho.q_alpha = t.value("q_alpha", 1.0);
  ho.lattice = t.value("lattice", std::size_t{9});
  ho.balls.balls = t.value("balls", std::size_t{1000});
  ho.balls.seed = sc.seed;
  ho.john_threshold = t.value("john_threshold", 1e3);
  if (t.contains("john_center")) ho.john_center = read_pt(t.at("john_center"), sc.dim, "task.john_center");
  const HypothesisReport hyp = certify_embedding_hypotheses(b.phi, *b.shape, ho);
  json hj = hyp.to_json();
  hj["name"] = "embedding hypotheses";
  hj["passed"] = hyp.certified;
  out.add(hj);
  if (!hyp.certified) return;

  const std::vector<TrialSpec> family =
      trial_family(b.shape->bounding_box(), t.value("count", std::size_t{50}), sc.seed);
  std::vector<std::size_t> res{sc.resolution};
  for (std::size_t r : t.value("refine", std::vector<std::size_t>{}))
    if (r != sc.resolution) res.push_back(r);
  Table trials{"trials", {"resolution", "rank", "index", "label", "lhs", "rhs", "ratio"}, {}};
  Table running{"running_max", {"resolution", "index", "running_max"}, {}};
  VerificationReport rep("embedding trials", 0.0);
  std::vector<double> maxima;
  for (std::size_t r : res) {
    const DiscretizedDomain dom(b.shape, r, sc.seed);
    const EmbeddingResult er = run_embedding_trials(b.phi, dom, family, hyp);
    for (std::size_t i = 0; i < er.trials.size(); ++i) {
      const auto& tr = er.trials[i];
      trials.rows.push_back({r, i, tr.index, tr.label, tr.lhs, tr.rhs, tr.ratio});
    }
    for (std::size_t i = 0; i < er.running_max.size(); ++i) running.rows.push_back({r, i, er.running_max[i]});
    rep.record(std::isfinite(er.max_ratio) ? 0.0 : -kInf, [&] { return json{{"resolution", r}}; });
    maxima.push_back(er.max_ratio);
    rep.details["max_ratio"][std::to_string(r)] = er.max_ratio;
  }
  if (maxima.size() > 1) {
    const double tol = t.value("stability_tolerance", 0.05);
    for (std::size_t i = 1; i < maxima.size(); ++i) {
      const double rel = std::fabs(maxima[i] - maxima[0]) / maxima[0];
      rep.record(tol - rel, [&] { return json{{"resolution", res[i]}, {"relative_change", rel}}; });
    }
  }
  out.add(rep);
  out.tables.push_back(std::move(trials));
  out.tables.push_back(std::move(running));
}

void task_necessity(const Scenario& sc, const Built& b, Output& out) {
  const json& t = sc.config.at("task");
  const Point x = t.contains("x") ? read_pt(t.at("x"), sc.dim, "task.x") : bbox_center(*b.shape);
  NecessityOptions no;
  no.levels = t.value("levels", std::size_t{10});
  no.min_radius = t.value("min_radius", 0.0);
  if (t.contains("C1")) no.C1 = t.at("C1").get<double>();
  const NecessityTrace tr = run_necessity_trace(b.phi, *b.shape, x, t.value("R0", 0.5), no);
  VerificationReport rep("necessity trace", 1e-6);
  rep.record(1e-6 - tr.telescoping_error, [&] { return json{{"telescoping_error", tr.telescoping_error}}; });
  json tj = tr.to_json();
  tj.erase("levels");
  rep.details = tj;
  Table trace{"trace",
              {"level", "R", "log_measure", "halving_error", "p_plus", "p_minus", "r_plus", "eta_R",
               "log_density_plain", "log_density_log", "implied_C1"},
              {}};
  for (std::size_t i = 0; i < tr.levels.size(); ++i) {
    const auto& l = tr.levels[i];
    trace.rows.push_back({i, l.R, l.log_measure, l.halving_error, l.p_plus, l.p_minus, l.r_plus, l.eta_R,
                          l.log_density_plain, l.log_density_log, l.implied_C1});
  }
  const std::string expect = t.value("expect", std::string("none"));
  if (expect == "constant") {
    double lo = kInf, hi = -kInf;
    for (const auto& l : tr.levels) {
      lo = std::min(lo, l.log_density_plain);
      hi = std::max(hi, l.log_density_plain);
    }
    const double spread = std::expm1(hi - lo);
    rep.details["density_spread"] = spread;
    rep.record(1e-3 - spread, [&] { return json{{"density_spread", spread}}; });
  }
  out.add(rep);
  out.tables.push_back(std::move(trace));

  if (t.contains("sweep")) {
    const json& s = t.at("sweep");
    const double lo = s.at("lo").get<double>(), hi = s.at("hi").get<double>();
    const std::size_t n = s.value("count", std::size_t{12});
    std::vector<double> radii;
    for (std::size_t i = 0; i < n; ++i)
      radii.push_back(n == 1 ? hi : std::exp(std::log(hi) + (std::log(lo) - std::log(hi)) * i / (n - 1.0)));
    const bool cut = t.value("cutoffs", sc.dim == 2);
    const NecessitySweep sw = run_necessity_sweep(b.phi, *b.shape, x, radii, cut);
    VerificationReport sr("necessity sweep", 0.0);
    json sj = sw.to_json();
    sj.erase("rows");
    sr.details = sj;
    if (expect == "decay") {
      sr.record(sw.density_monotone ? 0.0 : -1.0, [&] { return json{{"density_monotone", false}}; });
      sr.record(sw.log_density_drop - std::log(10.0), [&] { return json{{"log_density_drop", sw.log_density_drop}}; });
      if (cut)
        sr.record(sw.log_ratio_growth - std::log(10.0),
                  [&] { return json{{"log_ratio_growth", sw.log_ratio_growth}}; });
    }
    out.add(sr);
    Table st{"sweep", {"R", "log_measure", "log_density", "log_cutoff_lhs", "log_cutoff_rhs", "log_cutoff_ratio"}, {}};
    for (const auto& r : sw.rows)
      st.rows.push_back({r.R, r.log_measure, r.log_density, cut ? r.cutoff.log_lhs : kNaN,
                         cut ? r.cutoff.log_rhs : kNaN, cut ? r.cutoff.log_ratio : kNaN});
    out.tables.push_back(std::move(st));
  }
}

}  // namespace

ScenarioResult run_scenario(const Scenario& sc) {
  ScenarioResult res;
  json rep;
  rep["schema_version"] = kSchemaVersion;
  rep["name"] = sc.name;
  rep["config_hash"] = config_hash(sc.config);
  rep["seed"] = sc.seed;
  rep["task"] = sc.task;
  rep["library_version"] = library_version();
  rep["resolution"] = sc.resolution;
  rep["overrides"] = sc.overrides;
  Output out;
  try {
    const Built b = build(sc);
    if (sc.task == "norm") task_norm(sc, b, out);
    else if (sc.task == "conditions") task_conditions(sc, b, out);
    else if (sc.task == "indicator-bounds") task_indicator(sc, b, out);
    else if (sc.task == "density-scan") task_density(sc, b, out);
    else if (sc.task == "embed") task_embed(sc, b, out);
    else if (sc.task == "necessity") task_necessity(sc, b, out);
    rep["status"] = out.passed ? "pass" : "fail";
    res.exit_code = out.passed ? 0 : 1;
  } catch (const ConfigError& e) {
    rep["status"] = "error";
    rep["error"] = {{"kind", "config"}, {"message", e.what()}};
    res.exit_code = 2;
  } catch (const InvalidArgument& e) {
    rep["status"] = "error";
    rep["error"] = {{"kind", "precondition"}, {"message", e.what()}};
    res.exit_code = 1;
  } catch (const NumericError& e) {
    rep["status"] = "error";
    rep["error"] = {{"kind", "numeric"}, {"message", e.what()}};
    res.exit_code = 3;
  }
  rep["sub_reports"] = out.sub_reports;
  json tables = json::object();
  for (const Table& t : out.tables) tables[t.name] = t.to_json();
  rep["tables"] = tables;
  res.report = std::move(rep);
  res.tables = std::move(out.tables);
  return res;
}

std::vector<std::string> write_outputs(const ScenarioResult& result, const std::string& name, const std::string& dir,
                                       bool csv) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto put = [&](const fs::path& p, const std::string& body) {
    std::ofstream o(p, std::ios::binary);
    if (!o) throw Error("cannot write '" + p.string() + "'");
    o << body;
    written.push_back(p.string());
  };
  put(fs::path(dir) / (name + ".json"), result.report.dump(2) + "\n");
  if (csv)
    for (const Table& t : result.tables) put(fs::path(dir) / (name + "." + t.name + ".csv"), t.to_csv());
  return written;
}

json gallery_json() {
  json shapes = json::array();
  for (const GalleryEntry& g : shape_gallery())
    shapes.push_back({{"name", g.name}, {"description", g.description}, {"params", g.default_params}});
  json fields = json::array({
      {{"kind", "constant"}, {"keys", {"value"}}},
      {{"kind", "affine"}, {"keys", {"offset", "gradient"}}},
      {{"kind", "radial"}, {"keys", {"center", "base", "slope", "power"}}},
      {{"kind", "bump"}, {"keys", {"center", "radius", "base", "height"}}},
      {{"kind", "step"}, {"keys", {"axis", "at", "below", "above"}}},
      {{"kind", "expr"}, {"keys", {"text"}}},
  });
  return {{"shapes", shapes},
          {"fields", fields},
          {"tasks", {"norm", "conditions", "indicator-bounds", "density-scan", "embed", "necessity"}}};
}

}  // namespace molab
