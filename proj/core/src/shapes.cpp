#include <algorithm>
#include <map>

#include <boost/math/tools/minima.hpp>

#include "molab/domain.hpp"

namespace molab {

namespace {

double segment_distance(const Point& x, const Point& a, const Point& b) {
  const double vx = b[0] - a[0], vy = b[1] - a[1];
  const double wx = x[0] - a[0], wy = x[1] - a[1];
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = wx - t * vx, dy = wy - t * vy;
  return std::sqrt(dx * dx + dy * dy);
}

std::vector<Point> perimeter_points(const std::vector<Point>& loop, std::size_t count) {
  std::vector<double> cum{0.0};
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point& a = loop[i];
    const Point& b = loop[(i + 1) % loop.size()];
    cum.push_back(cum.back() + std::hypot(b[0] - a[0], b[1] - a[1]));
  }
  std::vector<Point> out;
  for (std::size_t j = 0; j < count; ++j) {
    const double s = cum.back() * (static_cast<double>(j) + 0.5) / static_cast<double>(count);
    std::size_t e = std::upper_bound(cum.begin(), cum.end(), s) - cum.begin() - 1;
    e = std::min(e, loop.size() - 1);
    const Point& a = loop[e];
    const Point& b = loop[(e + 1) % loop.size()];
    const double len = cum[e + 1] - cum[e];
    const double t = len > 0 ? (s - cum[e]) / len : 0.0;
    out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0});
  }
  return out;
}

std::vector<Point> with_specials(std::vector<Point> specials, const std::vector<Point>& spread, std::size_t count) {
  for (const Point& p : spread) {
    if (specials.size() >= count) break;
    specials.push_back(p);
  }
  if (specials.size() > count) specials.resize(count);
  return specials;
}

// ----------------------------------------------------------------------- ball

class BallShape final : public Shape {
 public:
  BallShape(int dim, Point center, double radius, std::string name)
      : dim_(dim), c_(center), r_(radius), name_(std::move(name)) {
    if (!(radius > 0)) throw InvalidArgument("ball radius must be positive");
  }
  std::string name() const override { return name_; }
  int dim() const override { return dim_; }
  Box bounding_box() const override {
    Box b;
    b.dim = dim_;
    for (int k = 0; k < dim_; ++k) {
      b.lo[k] = c_[k] - r_;
      b.hi[k] = c_[k] + r_;
    }
    return b;
  }
  bool contains(const Point& x) const override { return distance(x, c_, dim_) < r_; }
  bool is_convex() const override { return true; }
  std::optional<double> exact_measure() const override { return unit_ball_volume(dim_) * std::pow(r_, dim_); }
  double boundary_distance(const Point& x) const override { return std::fabs(r_ - distance(x, c_, dim_)); }
  std::vector<Section> sections(const Point& x) const override {
    double w2 = r_ * r_;
    for (int k = 0; k + 1 < dim_; ++k) w2 -= (x[k] - c_[k]) * (x[k] - c_[k]);
    if (w2 <= 0) return {};
    const double w = std::sqrt(w2);
    const double m = c_[dim_ - 1];
    return {{m - w, m + w, std::log(2.0 * w)}};
  }
  std::vector<double> kinks(int axis) const override { return {c_[axis] - r_, c_[axis], c_[axis] + r_}; }
  std::vector<Point> special_points() const override {
    std::vector<Point> s;
    for (int k = 0; k < dim_; ++k)
      for (int sgn : {1, -1}) {
        Point p = c_;
        p[k] += sgn * r_;
        s.push_back(p);
      }
    return s;
  }
  std::vector<Point> boundary_points(std::size_t count) const override {
    std::vector<Point> spread;
    for (std::size_t j = 0; j < count; ++j) {
      Point p = c_;
      if (dim_ == 2) {
        const double th = 2.0 * kPi * (static_cast<double>(j) + 0.5) / static_cast<double>(count);
        p[0] += r_ * std::cos(th);
        p[1] += r_ * std::sin(th);
      } else {
        const double z = 1.0 - 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(count);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = kPi * (3.0 - std::sqrt(5.0)) * static_cast<double>(j);
        p[0] += r_ * rho * std::cos(th);
        p[1] += r_ * rho * std::sin(th);
        p[2] += r_ * z;
      }
      spread.push_back(p);
    }
    return with_specials(special_points(), spread, count);
  }
  json to_json() const override {
    return {{"shape", name_}, {"params", {{"center", point_json(c_, dim_)}, {"radius", r_}}}};
  }

 private:
  int dim_;
  Point c_;
  double r_;
  std::string name_;
};

// ------------------------------------------------------------------------ box

class BoxShape final : public Shape {
 public:
  BoxShape(int dim, Point lo, Point hi, std::string name, json params)
      : name_(std::move(name)), params_(std::move(params)) {
    box_.dim = dim;
    box_.lo = lo;
    box_.hi = hi;
    for (int k = 0; k < dim; ++k)
      if (!(hi[k] > lo[k])) throw InvalidArgument("box needs lo < hi on every axis");
  }
  std::string name() const override { return name_; }
  int dim() const override { return box_.dim; }
  Box bounding_box() const override { return box_; }
  bool contains(const Point& x) const override {
    for (int k = 0; k < box_.dim; ++k)
      if (!(x[k] > box_.lo[k] && x[k] < box_.hi[k])) return false;
    return true;
  }
  bool is_convex() const override { return true; }
  std::optional<double> exact_measure() const override {
    double v = 1.0;
    for (int k = 0; k < box_.dim; ++k) v *= box_.extent(k);
    return v;
  }
  double boundary_distance(const Point& x) const override {
    double d = kInf;
    for (int k = 0; k < box_.dim; ++k) d = std::min({d, std::fabs(x[k] - box_.lo[k]), std::fabs(box_.hi[k] - x[k])});
    return d;
  }
  std::vector<Section> sections(const Point& x) const override {
    const int n = box_.dim;
    for (int k = 0; k + 1 < n; ++k)
      if (!(x[k] >= box_.lo[k] && x[k] < box_.hi[k])) return {};
    return {{box_.lo[n - 1], box_.hi[n - 1], std::log(box_.extent(n - 1))}};
  }
  std::vector<double> kinks(int axis) const override { return {box_.lo[axis], box_.hi[axis]}; }
  std::vector<Point> special_points() const override {
    std::vector<Point> s;
    const int n = box_.dim;
    for (int m = 0; m < (1 << n); ++m) {
      Point p{};
      for (int k = 0; k < n; ++k) p[k] = (m >> k) & 1 ? box_.hi[k] : box_.lo[k];
      s.push_back(p);
    }
    return s;
  }
  std::vector<Point> boundary_points(std::size_t count) const override {
    std::vector<Point> spread;
    if (box_.dim == 2) {
      spread = perimeter_points({{box_.lo[0], box_.lo[1], 0}, {box_.hi[0], box_.lo[1], 0},
                                 {box_.hi[0], box_.hi[1], 0}, {box_.lo[0], box_.hi[1], 0}},
                                count);
    } else {
      const std::size_t per_face = std::max<std::size_t>(1, count / 6);
      const std::size_t side = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(per_face))));
      for (int axis = 0; axis < 3; ++axis)
        for (int hi_side = 0; hi_side < 2; ++hi_side)
          for (std::size_t i = 0; i < side; ++i)
            for (std::size_t j = 0; j < side; ++j) {
              Point p{};
              const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
              p[axis] = hi_side ? box_.hi[axis] : box_.lo[axis];
              p[a1] = box_.lo[a1] + box_.extent(a1) * (i + 0.5) / side;
              p[a2] = box_.lo[a2] + box_.extent(a2) * (j + 0.5) / side;
              spread.push_back(p);
            }
    }
    return with_specials(special_points(), spread, count);
  }
  json to_json() const override { return {{"shape", name_}, {"params", params_}}; }

 private:
  Box box_;
  std::string name_;
  json params_;
};

// -------------------------------------------------------------------- polygon

class PolygonShape final : public Shape {
 public:
  PolygonShape(std::string name, std::vector<Point> v, bool convex, json params)
      : name_(std::move(name)), v_(std::move(v)), convex_(convex), params_(std::move(params)) {
    if (v_.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
    box_.dim = 2;
    box_.lo = {kInf, kInf, 0};
    box_.hi = {-kInf, -kInf, 0};
    double area = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Point& a = v_[i];
      const Point& b = v_[(i + 1) % v_.size()];
      area += a[0] * b[1] - b[0] * a[1];
      for (int k = 0; k < 2; ++k) {
        box_.lo[k] = std::min(box_.lo[k], a[k]);
        box_.hi[k] = std::max(box_.hi[k], a[k]);
      }
    }
    area_ = 0.5 * std::fabs(area);
  }
  std::string name() const override { return name_; }
  int dim() const override { return 2; }
  Box bounding_box() const override { return box_; }
  bool contains(const Point& x) const override {
    for (const Section& s : sections(x))
      if (x[1] > s.lo && x[1] < s.hi) return true;
    return false;
  }
  bool is_convex() const override { return convex_; }
  std::optional<double> exact_measure() const override { return area_; }
  double boundary_distance(const Point& x) const override {
    double d = kInf;
    for (std::size_t i = 0; i < v_.size(); ++i) d = std::min(d, segment_distance(x, v_[i], v_[(i + 1) % v_.size()]));
    return d;
  }
  std::vector<Section> sections(const Point& x) const override {
    std::vector<double> ys;
    const double t = x[0];
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const Point& a = v_[i];
      const Point& b = v_[(i + 1) % v_.size()];
      if ((a[0] <= t && t < b[0]) || (b[0] <= t && t < a[0]))
        ys.push_back(a[1] + (t - a[0]) * (b[1] - a[1]) / (b[0] - a[0]));
    }
    std::sort(ys.begin(), ys.end());
    std::vector<Section> out;
    for (std::size_t i = 0; i + 1 < ys.size(); i += 2) {
      if (!out.empty() && out.back().hi == ys[i]) {  // merge touching pieces
        out.back().hi = ys[i + 1];
        out.back().log_length = std::log(out.back().hi - out.back().lo);
        continue;
      }
      if (ys[i + 1] > ys[i]) out.push_back({ys[i], ys[i + 1], std::log(ys[i + 1] - ys[i])});
    }
    return out;
  }
  std::vector<double> kinks(int axis) const override {
    std::vector<double> k;
    for (const Point& p : v_) k.push_back(p[axis]);
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }
  std::vector<Point> special_points() const override { return v_; }
  std::vector<Point> boundary_points(std::size_t count) const override {
    return with_specials(v_, perimeter_points(v_, count), count);
  }
  json to_json() const override { return {{"shape", name_}, {"params", params_}}; }

 private:
  std::string name_;
  std::vector<Point> v_;
  bool convex_;
  json params_;
  Box box_;
  double area_ = 0.0;
};

// ---------------------------------------------------------------------- cusps

class CuspShape final : public Shape {
 public:
  // k > 0: power cusp |x2| < x1^k; k == 0: exponential cusp |x2| < exp(-1/x1)
  explicit CuspShape(double k) : k_(k) {
    if (k < 0) throw InvalidArgument("cusp exponent must be positive");
    if (k == 0) {
      // 2 * int_0^1 exp(-1/s) ds
      const LogIntegral li = integrate_log([this](double s) { return log_profile(s); }, 0.0, 1.0, 1e-13);
      area_ = 2.0 * std::exp(li.log_value);
    } else {
      area_ = 2.0 / (k + 1.0);
    }
  }
  std::string name() const override { return k_ == 0 ? "exp_cusp" : "power_cusp"; }
  int dim() const override { return 2; }
  Box bounding_box() const override {
    Box b;
    b.dim = 2;
    b.lo = {0.0, -profile(1.0), 0.0};
    b.hi = {1.0, profile(1.0), 0.0};
    return b;
  }
  double log_profile(double s) const {
    if (s <= 0) return -kInf;
    return k_ == 0 ? -1.0 / s : k_ * std::log(s);
  }
  double profile(double s) const { return std::exp(log_profile(s)); }
  bool contains(const Point& x) const override {
    if (!(x[0] > 0.0 && x[0] < 1.0)) return false;
    if (x[1] == 0.0) return true;
    return std::log(std::fabs(x[1])) < log_profile(x[0]);
  }
  bool is_convex() const override { return k_ > 0 && k_ <= 1.0; }
  std::optional<double> exact_measure() const override { return area_; }
  double boundary_distance(const Point& x) const override {
    const double a = x[0], b = std::fabs(x[1]);
    auto d2 = [&](double s) {
      const double f = profile(s);
      return (s - a) * (s - a) + (f - b) * (f - b);
    };
    constexpr int kGrid = 2000;
    int best = 0;
    double best_v = d2(0.0);
    for (int i = 1; i <= kGrid; ++i) {
      const double v = d2(static_cast<double>(i) / kGrid);
      if (v < best_v) {
        best_v = v;
        best = i;
      }
    }
    const double lo = std::max(0, best - 1) / static_cast<double>(kGrid);
    const double hi = std::min(kGrid, best + 1) / static_cast<double>(kGrid);
    const auto m = boost::math::tools::brent_find_minima(d2, lo, hi, 40);
    const double curve = std::sqrt(std::min(best_v, m.second));
    const double edge = std::hypot(1.0 - a, std::max(0.0, b - profile(1.0)));
    return std::min(curve, edge);
  }
  std::vector<Section> sections(const Point& x) const override {
    if (!(x[0] > 0.0 && x[0] < 1.0)) return {};
    const double lf = log_profile(x[0]);
    const double f = std::exp(lf);
    return {{-f, f, kLn2 + lf}};
  }
  std::vector<double> kinks(int axis) const override {
    if (axis == 0) return {0.0, 1.0};
    return {-profile(1.0), 0.0, profile(1.0)};
  }
  std::vector<Point> special_points() const override {
    const double f1 = profile(1.0);
    return {{0.0, 0.0, 0.0}, {1.0, f1, 0.0}, {1.0, -f1, 0.0}};
  }
  std::vector<Point> boundary_points(std::size_t count) const override {
    std::vector<Point> spread;
    for (std::size_t j = 0; j < count; ++j) {
      const double s = (static_cast<double>(j / 2) + 0.5) / static_cast<double>((count + 1) / 2);
      spread.push_back({s, (j % 2 ? -1.0 : 1.0) * profile(s), 0.0});
    }
    return with_specials(special_points(), spread, count);
  }
  json to_json() const override {
    if (k_ == 0) return {{"shape", "exp_cusp"}, {"params", json::object()}};
    return {{"shape", "power_cusp"}, {"params", {{"k", k_}}}};
  }

 private:
  double k_;
  double area_ = 0.0;
};

Point read_point(const json& j, int dim, const Point& fallback) {
  if (j.is_null()) return fallback;
  if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
    throw ConfigError("point parameter must have " + std::to_string(dim) + " entries");
  Point p{};
  for (int k = 0; k < dim; ++k) p[k] = j.at(k).get<double>();
  return p;
}

}  // namespace

ShapePtr make_disk(const Point& center, double radius) {
  return std::make_shared<BallShape>(2, center, radius, "disk");
}
ShapePtr make_ball(const Point& center, double radius) {
  return std::make_shared<BallShape>(3, center, radius, "ball");
}
ShapePtr make_box(int dim, const Point& lo, const Point& hi, const std::string& name) {
  return std::make_shared<BoxShape>(dim, lo, hi, name,
                                    json{{"lo", point_json(lo, dim)}, {"hi", point_json(hi, dim)}});
}
ShapePtr make_square() {
  return std::make_shared<BoxShape>(2, Point{0, 0, 0}, Point{1, 1, 0}, "square", json::object());
}
ShapePtr make_cube() {
  return std::make_shared<BoxShape>(3, Point{0, 0, 0}, Point{1, 1, 1}, "cube", json::object());
}
ShapePtr make_half_space(int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("half_space dimension must be 2 or 3");
  Point lo{-1, -1, -1}, hi{1, 1, 1};
  lo[dim - 1] = 0.0;
  return std::make_shared<BoxShape>(dim, lo, hi, "half_space", json{{"dim", dim}});
}
ShapePtr make_l_shape() {
  return std::make_shared<PolygonShape>(
      "l_shape", std::vector<Point>{{-1, -1, 0}, {0, -1, 0}, {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {-1, 1, 0}}, false,
      json::object());
}
ShapePtr make_power_cusp(double k) {
  if (!(k > 0)) throw InvalidArgument("power cusp exponent must be positive");
  return std::make_shared<CuspShape>(k);
}
ShapePtr make_exp_cusp() { return std::make_shared<CuspShape>(0.0); }
ShapePtr make_comb(int teeth) {
  if (teeth < 1 || teeth > 20) throw InvalidArgument("comb needs 1..20 teeth");
  std::vector<Point> v{{0, 0, 0}, {1, 0, 0}, {1, 0.2, 0}};
  for (int j = teeth - 1; j >= 0; --j) {
    const double c = (j + 0.5) / teeth;
    const double w = 0.5 / teeth * std::ldexp(1.0, -j);
    v.push_back({c + 0.5 * w, 0.2, 0});
    v.push_back({c + 0.5 * w, 0.8, 0});
    v.push_back({c - 0.5 * w, 0.8, 0});
    v.push_back({c - 0.5 * w, 0.2, 0});
  }
  v.push_back({0, 0.2, 0});
  return std::make_shared<PolygonShape>("comb", v, false, json{{"teeth", teeth}});
}
ShapePtr make_polygon(const std::string& name, const std::vector<Point>& vertices, bool convex) {
  return std::make_shared<PolygonShape>(name, vertices, convex, json::object());
}

const std::vector<GalleryEntry>& shape_gallery() {
  static const std::vector<GalleryEntry> g = {
      {"disk", "unit disk in R^2", {{"center", {0.0, 0.0}}, {"radius", 1.0}}},
      {"ball", "unit ball in R^3", {{"center", {0.0, 0.0, 0.0}}, {"radius", 1.0}}},
      {"square", "unit square [0,1]^2", json::object()},
      {"cube", "unit cube [0,1]^3", json::object()},
      {"box", "axis-aligned box", {{"lo", {0.0, 0.0}}, {"hi", {1.0, 1.0}}}},
      {"half_space", "{x_n > 0} clipped to [-1,1]^(n-1) x [0,1]", {{"dim", 2}}},
      {"l_shape", "[-1,1]^2 minus [0,1] x [-1,0]", json::object()},
      {"power_cusp", "{0 < x1 < 1, |x2| < x1^k}", {{"k", 2.0}}},
      {"exp_cusp", "{0 < x1 < 1, |x2| < exp(-1/x1)}", json::object()},
      {"comb", "spine with shrinking rooms", {{"teeth", 6}}},
  };
  return g;
}

ShapePtr make_shape(const json& spec) {
  try {
    std::string name;
    json params = json::object();
    if (spec.is_string()) {
      name = spec.get<std::string>();
    } else {
      name = spec.at("shape").get<std::string>();
      if (spec.contains("params")) params = spec.at("params");
    }
    auto num = [&](const char* key, double def) { return params.contains(key) ? params.at(key).get<double>() : def; };
    if (name == "disk") return make_disk(read_point(params.value("center", json()), 2, {}), num("radius", 1.0));
    if (name == "ball") return make_ball(read_point(params.value("center", json()), 3, {}), num("radius", 1.0));
    if (name == "square") return make_square();
    if (name == "cube") return make_cube();
    if (name == "box") {
      const json lo = params.at("lo");
      const int dim = static_cast<int>(lo.size());
      if (dim != 2 && dim != 3) throw ConfigError("box corners must have 2 or 3 entries");
      return make_box(dim, read_point(lo, dim, {}), read_point(params.at("hi"), dim, {}));
    }
    if (name == "half_space") return make_half_space(params.value("dim", 2));
    if (name == "l_shape") return make_l_shape();
    if (name == "power_cusp") return make_power_cusp(num("k", 2.0));
    if (name == "exp_cusp") return make_exp_cusp();
    if (name == "comb") return make_comb(params.value("teeth", 6));
    throw ConfigError("unknown shape '" + name + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad domain description: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace molab
