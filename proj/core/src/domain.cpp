#include "molab/domain.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <sstream>

#include "molab/detail/sampling.hpp"

namespace molab {

namespace {

constexpr int kSubsamples = 1024;

std::size_t flat_index(const std::array<std::size_t, 3>& i, const std::array<std::size_t, 3>& c) {
  return (i[0] * c[1] + i[1]) * c[2] + i[2];
}

double chord_half(double R, double d) {
  if (std::fabs(d) >= R) return 0.0;
  return std::sqrt((R - d) * (R + d));
}

// log of the length of [lo, hi] ∩ [c - w, c + w], exact for full sections.
double clipped_log_length(const Section& s, double c, double w) {
  const double lo = std::max(s.lo, c - w);
  const double hi = std::min(s.hi, c + w);
  if (s.lo >= c - w && s.hi <= c + w) return s.log_length;
  if (hi <= lo) return -kInf;
  return std::log(hi - lo);
}

std::vector<double> merged_breaks(std::vector<double> a, std::initializer_list<double> extra) {
  a.insert(a.end(), extra);
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

// Breaks graded toward c +- w: a section can cross the chord arbitrarily close to the ball edge,
// where the Kronrod nodes would step over it.
std::vector<double> with_edge_grading(std::vector<double> br, double c, double w, int levels) {
  for (int k = 1; k <= levels; ++k) {
    const double d = w * std::ldexp(1.0, -k);
    br.push_back(c - w + d);
    br.push_back(c + w - d);
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  return br;
}

}  // namespace

// ------------------------------------------------------------ discretization

DiscretizedDomain::DiscretizedDomain(ShapePtr shape, std::size_t resolution, std::uint64_t seed,
                                     std::size_t boundary_sample_count)
    : shape_(std::move(shape)), resolution_(resolution) {
  if (!shape_) throw InvalidArgument("null shape");
  if (resolution < 2) throw InvalidArgument("resolution must be at least 2");
  const int n = shape_->dim();
  const Box bb = shape_->bounding_box();
  double longest = 0.0;
  for (int k = 0; k < n; ++k) longest = std::max(longest, bb.extent(k));
  h_ = longest / static_cast<double>(resolution);
  counts_ = {1, 1, 1};
  for (int k = 0; k < n; ++k) {
    counts_[k] = static_cast<std::size_t>(std::ceil(bb.extent(k) / h_ - 1e-9));
    counts_[k] = std::max<std::size_t>(counts_[k], 1);
    origin_[k] = bb.lo[k];
  }
  const double log_vol = n * std::log(h_);
  const double vol = std::exp(log_vol);
  const std::size_t total = counts_[0] * counts_[1] * counts_[2];
  fraction_.assign(total, 0.0f);

  auto q = std::make_shared<Quadrature>();
  q->dim = n;
  q->spacing = h_;
  const double shrink = 0.5 * h_ * (1.0 - 1e-9);
  std::array<std::size_t, 3> idx{};
  for (idx[0] = 0; idx[0] < counts_[0]; ++idx[0])
    for (idx[1] = 0; idx[1] < counts_[1]; ++idx[1])
      for (idx[2] = 0; idx[2] < counts_[2]; ++idx[2]) {
        const Point c = cell_center(idx);
        int inside = shape_->contains(c) ? 1 : 0;
        for (int m = 0; m < (1 << n); ++m) {
          Point y = c;
          for (int k = 0; k < n; ++k) y[k] += ((m >> k) & 1) ? shrink : -shrink;
          inside += shape_->contains(y) ? 1 : 0;
        }
        double w;
        if (inside == (1 << n) + 1) {
          w = 1.0;
        } else if (inside == 0) {
          continue;
        } else {
          const std::size_t f = flat_index(idx, counts_);
          std::mt19937_64 rng(mix_seed(seed, f));
          std::uniform_real_distribution<double> u(-0.5, 0.5);
          int hit = 0;
          for (int s = 0; s < kSubsamples; ++s) {
            Point y = c;
            for (int k = 0; k < n; ++k) y[k] += h_ * u(rng);
            hit += shape_->contains(y) ? 1 : 0;
          }
          ++boundary_cells_;
          if (hit == 0) continue;
          w = static_cast<double>(hit) / kSubsamples;
        }
        fraction_[flat_index(idx, counts_)] = static_cast<float>(w);
        q->nodes.push_back(c);
        q->log_weights.push_back(std::log(w) + log_vol);
      }
  if (q->nodes.empty()) throw NumericError("discretization produced no cells; raise the resolution");
  q->finalize();
  measure_ = q->measure();
  eps_geom_ = static_cast<double>(boundary_cells_) * vol;
  cells_ = std::move(q);
  boundary_samples_ = shape_->boundary_points(boundary_sample_count);
}

Point DiscretizedDomain::cell_center(const std::array<std::size_t, 3>& index) const {
  Point c{};
  for (int k = 0; k < dim(); ++k) c[k] = origin_[k] + (static_cast<double>(index[k]) + 0.5) * h_;
  return c;
}

SampleSet DiscretizedDomain::cell_samples() const {
  std::ostringstream os;
  os << "cells h=" << h_;
  return SampleSet::from_points(dim(), cells_->nodes, os.str());
}

json DiscretizedDomain::to_json() const {
  json j;
  j["shape"] = shape_->to_json();
  j["resolution"] = resolution_;
  j["cell_size"] = h_;
  j["counts"] = json::array();
  for (int k = 0; k < dim(); ++k) j["counts"].push_back(counts_[k]);
  j["cells"] = cells_->size();
  j["boundary_cells"] = boundary_cells_;
  j["measure"] = measure_;
  const auto exact = shape_->exact_measure();
  j["exact_measure"] = exact ? number_json(*exact) : json(nullptr);
  j["geometric_tolerance"] = eps_geom_;
  return j;
}

// ---------------------------------------------------------------- ball measure

BallMeasure ball_intersection_measure(const Shape& shape, const Point& x, double R, double rel_tol) {
  if (!(R > 0)) throw InvalidArgument("ball radius must be positive");
  const int n = shape.dim();
  const Box bb = shape.bounding_box();
  BallMeasure out;
  out.method = "sections";
  const double a = std::max(x[0] - R, bb.lo[0]);
  const double b = std::min(x[0] + R, bb.hi[0]);
  if (!(b > a)) return out;
  const std::vector<double> br0 = with_edge_grading(merged_breaks(shape.kinks(0), {x[0]}), x[0], R, n == 2 ? 30 : 12);

  std::function<double(double)> outer;
  if (n == 2) {
    outer = [&](double t) {
      const double w = chord_half(R, t - x[0]);
      if (w <= 0) return -kInf;
      LogSum acc;
      for (const Section& s : shape.sections({t, 0.0, 0.0})) acc.add(clipped_log_length(s, x[1], w));
      return acc.value();
    };
  } else {
    const std::vector<double> br1 = merged_breaks(shape.kinks(1), {x[1]});
    outer = [&, br1](double t) {
      const double w1 = chord_half(R, t - x[0]);
      if (w1 <= 0) return -kInf;
      const double c = std::max(x[1] - w1, bb.lo[1]);
      const double d = std::min(x[1] + w1, bb.hi[1]);
      if (!(d > c)) return -kInf;
      auto inner = [&](double y) {
        const double w2 = chord_half(w1, y - x[1]);
        if (w2 <= 0) return -kInf;
        LogSum acc;
        for (const Section& s : shape.sections({t, y, 0.0})) acc.add(clipped_log_length(s, x[2], w2));
        return acc.value();
      };
      return integrate_log(inner, c, d, rel_tol * 0.1, 2000, with_edge_grading(br1, x[1], w1, 12)).log_value;
    };
  }
  const LogIntegral li = integrate_log(outer, a, b, rel_tol, 4000, br0);
  out.log_value = li.log_value;
  out.value = std::exp(li.log_value);
  out.low_confidence = li.log_error - li.log_value > std::log(std::max(rel_tol, 1e-15)) + std::log(100.0);
  return out;
}

BallMeasure ball_intersection_measure(const DiscretizedDomain& domain, const Point& x, double R) {
  if (!(R > 0)) throw InvalidArgument("ball radius must be positive");
  const int n = domain.dim();
  const double h = domain.cell_size();
  const auto& counts = domain.counts();
  const Point origin = domain.cell_center({0, 0, 0});
  std::array<std::size_t, 3> lo{0, 0, 0}, hi{1, 1, 1};
  for (int k = 0; k < n; ++k) {
    const double a = (x[k] - R - origin[k]) / h;
    const double b = (x[k] + R - origin[k]) / h;
    lo[k] = static_cast<std::size_t>(std::clamp(std::floor(a), 0.0, static_cast<double>(counts[k])));
    hi[k] = static_cast<std::size_t>(std::clamp(std::ceil(b) + 1.0, 0.0, static_cast<double>(counts[k])));
  }
  const double vol = std::pow(h, n);
  double total = 0.0;
  std::array<std::size_t, 3> idx{};
  for (idx[0] = lo[0]; idx[0] < hi[0]; ++idx[0])
    for (idx[1] = lo[1]; idx[1] < hi[1]; ++idx[1])
      for (idx[2] = lo[2]; idx[2] < hi[2]; ++idx[2]) {
        const std::size_t f = flat_index(idx, counts);
        const double frac = domain.cell_fraction(f);
        if (frac <= 0) continue;
        const Point c = domain.cell_center(idx);
        double near2 = 0.0, far2 = 0.0;
        for (int k = 0; k < n; ++k) {
          const double d = std::fabs(c[k] - x[k]);
          const double nd = std::max(0.0, d - 0.5 * h);
          near2 += nd * nd;
          far2 += (d + 0.5 * h) * (d + 0.5 * h);
        }
        if (near2 >= R * R) continue;
        if (far2 <= R * R) {
          total += frac * vol;
          continue;
        }
        std::mt19937_64 rng(mix_seed(0xBA11, f));
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        int hit = 0;
        for (int s = 0; s < kSubsamples; ++s) {
          Point y = c;
          for (int k = 0; k < n; ++k) y[k] += h * u(rng);
          if (distance(y, x, n) < R && domain.shape().contains(y)) ++hit;
        }
        total += vol * hit / kSubsamples;
      }
  BallMeasure out;
  out.method = "grid";
  out.value = total;
  out.log_value = total > 0 ? std::log(total) : -kInf;
  out.low_confidence = R < 4.0 * h;
  return out;
}

HalvingResult halving_radius(const Shape& shape, const Point& x, double R) {
  HalvingResult out;
  out.log_measure = ball_intersection_measure(shape, x, R).log_value;
  if (!std::isfinite(out.log_measure)) throw NumericError("ball misses the domain");
  const double target = out.log_measure - kLn2;
  double lo = 0.0, hi = R;
  double log_hi = out.log_measure;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * R; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double lm = ball_intersection_measure(shape, x, mid).log_value;
    if (lm >= target) {
      hi = mid;
      log_hi = lm;
    } else {
      lo = mid;
    }
  }
  out.radius = hi;
  out.log_half = log_hi;
  out.relative_error = std::fabs(std::expm1(log_hi - target));
  return out;
}

// ---------------------------------------------------------- local quadrature

std::shared_ptr<const Quadrature> local_ball_quadrature(const Shape& shape, const Point& x, double R,
                                                        const std::vector<double>& inner_radii,
                                                        double rel_tol) {
  if (shape.dim() != 2) throw InvalidArgument("local ball quadrature is planar only");
  if (!(R > 0)) throw InvalidArgument("ball radius must be positive");
  const Box bb = shape.bounding_box();
  const double a = std::max(x[0] - R, bb.lo[0]);
  const double b = std::min(x[0] + R, bb.hi[0]);
  if (!(b > a)) throw NumericError("ball misses the domain");
  std::vector<double> br = with_edge_grading(merged_breaks(shape.kinks(0), {x[0]}), x[0], R, 30);
  for (double r : inner_radii) {
    br.push_back(x[0] - r);
    br.push_back(x[0] + r);
  }
  auto chord = [&](double t) {
    const double w = chord_half(R, t - x[0]);
    if (w <= 0) return -kInf;
    LogSum acc;
    for (const Section& s : shape.sections({t, 0.0, 0.0})) acc.add(clipped_log_length(s, x[1], w));
    return acc.value();
  };
  const LogIntegral li = integrate_log(chord, a, b, rel_tol, 4000, br);

  const GaussRule& g1 = gauss_legendre(16);
  const GaussRule& g2 = gauss_legendre(8);
  auto q = std::make_shared<Quadrature>();
  q->dim = 2;
  for (const auto& [pa, pb] : li.panels) {
    const double hx = 0.5 * (pb - pa), mx = 0.5 * (pa + pb);
    for (std::size_t i = 0; i < g1.nodes.size(); ++i) {
      const double t = mx + hx * g1.nodes[i];
      const double lw1 = std::log(hx * g1.weights[i]);
      const double w = chord_half(R, t - x[0]);
      if (w <= 0) continue;
      for (const Section& s : shape.sections({t, 0.0, 0.0})) {
        const double lo = std::max(s.lo, x[1] - w);
        const double hi = std::min(s.hi, x[1] + w);
        const bool full = s.lo >= x[1] - w && s.hi <= x[1] + w;
        std::vector<double> cuts{lo, hi};
        for (double r : inner_radii) {
          const double wr = chord_half(r, t - x[0]);
          if (wr <= 0) continue;
          for (double c : {x[1] - wr, x[1] + wr})
            if (c > lo && c < hi) cuts.push_back(c);
        }
        std::sort(cuts.begin(), cuts.end());
        if (cuts.size() == 2 && full) {
          const double mid = 0.5 * (s.lo + s.hi);
          const double log_half = s.log_length - kLn2;
          const double half = std::exp(log_half);
          for (std::size_t j = 0; j < g2.nodes.size(); ++j) {
            q->nodes.push_back({t, mid + half * g2.nodes[j], 0.0});
            q->log_weights.push_back(lw1 + log_half + std::log(g2.weights[j]));
          }
          continue;
        }
        for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
          const double half = 0.5 * (cuts[c + 1] - cuts[c]);
          if (!(half > 0)) continue;
          const double mid = 0.5 * (cuts[c] + cuts[c + 1]);
          for (std::size_t j = 0; j < g2.nodes.size(); ++j) {
            q->nodes.push_back({t, mid + half * g2.nodes[j], 0.0});
            q->log_weights.push_back(lw1 + std::log(half * g2.weights[j]));
          }
        }
      }
    }
  }
  if (q->nodes.empty()) throw NumericError("ball misses the domain");
  q->spacing = R / 16.0;
  q->finalize();
  return q;
}

SampledFunction make_cutoff(const std::shared_ptr<const Quadrature>& support, const Point& x, double R,
                            double R_tilde) {
  if (!(R_tilde >= 0 && R_tilde < R)) throw InvalidArgument("cutoff needs 0 <= R~ < R");
  SampledFunction f;
  f.support = support;
  f.values.resize(support->size());
  f.grad_norm.resize(support->size());
  const double slope = 1.0 / (R - R_tilde);
  for (std::size_t i = 0; i < support->size(); ++i) {
    const double d = distance(support->nodes[i], x, support->dim);
    if (d <= R_tilde) {
      f.values[i] = 1.0;
      f.grad_norm[i] = 0.0;
    } else if (d < R) {
      f.values[i] = (R - d) * slope;
      f.grad_norm[i] = slope;
    } else {
      f.values[i] = 0.0;
      f.grad_norm[i] = 0.0;
    }
  }
  return f;
}

// ----------------------------------------------------------- density scans

const char* to_string(DecayKind k) {
  switch (k) {
    case DecayKind::none: return "none";
    case DecayKind::polynomial: return "polynomial";
    case DecayKind::super_polynomial: return "super_polynomial";
  }
  return "?";
}

std::vector<double> halving_radius_grid(std::size_t count, double start) {
  std::vector<double> r;
  for (std::size_t i = 0; i < count; ++i) r.push_back(std::ldexp(start, -static_cast<int>(i)));
  return r;
}

DensityScan scan_measure_density(const Shape& shape, const std::vector<Point>& points, double s, double alpha,
                                 const std::vector<double>& R_grid) {
  if (points.empty() || R_grid.empty()) throw InvalidArgument("density scan needs points and radii");
  for (double R : R_grid)
    if (!(R > 0 && R < 1)) throw InvalidArgument("density scan radii must lie in (0, 1)");
  DensityScan out;
  out.exponent_s = s;
  out.alpha = alpha;
  out.points = points;
  out.radii = R_grid;
  std::sort(out.radii.begin(), out.radii.end(), std::greater<>());
  out.dim = shape.dim();
  out.min_ratio_per_R.assign(out.radii.size(), kInf);
  double worst = kInf;
  for (std::size_t p = 0; p < points.size(); ++p) {
    double prev = kInf;
    for (std::size_t k = 0; k < out.radii.size(); ++k) {
      const double R = out.radii[k];
      const double lm = ball_intersection_measure(shape, points[p], R, 1e-10).log_value;
      const double lr = lm - s * std::log(R) + alpha * std::log(std::log(1.0 / R));
      out.table.push_back({p, R, lm, lr});
      if (lm > prev + 1e-10) out.monotone = false;
      prev = lm;
      out.min_ratio_per_R[k] = std::min(out.min_ratio_per_R[k], std::exp(lr));
      if (lr < worst) {
        worst = lr;
        out.witness = points[p];
        out.witness_R = R;
      }
    }
  }
  out.c_hat = std::exp(worst);
  for (std::size_t k = 0; k + 1 < out.radii.size(); ++k) {
    const double num = std::log(out.min_ratio_per_R[k + 1]) - std::log(out.min_ratio_per_R[k]);
    const double den = std::log(out.radii[k + 1]) - std::log(out.radii[k]);
    out.local_slopes.push_back(num / den);
  }
  const auto& sl = out.local_slopes;
  if (!sl.empty()) {
    const double max_slope = *std::max_element(sl.begin(), sl.end());
    if (max_slope < 0.05) {
      out.decay = DecayKind::none;
    } else {
      const double last = sl.back();
      const double mid = sl[sl.size() / 2];
      if (sl.size() >= 3 && last > 1.5 * mid && last > 3.0) {
        out.decay = DecayKind::super_polynomial;
        out.decay_rate = last;
      } else {
        out.decay = DecayKind::polynomial;
        double acc = 0.0;
        std::size_t m = 0;
        for (std::size_t i = sl.size() / 2; i < sl.size(); ++i, ++m) acc += sl[i];
        out.decay_rate = acc / static_cast<double>(m);
      }
    }
  }
  return out;
}

json DensityScan::to_json() const {
  json j;
  j["exponent_s"] = exponent_s;
  j["alpha"] = alpha;
  j["c_hat"] = number_json(c_hat);
  j["witness"] = point_json(witness, dim);
  j["witness_R"] = witness_R;
  j["decay"] = to_string(decay);
  j["decay_rate"] = number_json(decay_rate);
  j["monotone"] = monotone;
  j["radii"] = radii;
  json mins = json::array();
  for (double v : min_ratio_per_R) mins.push_back(number_json(v));
  j["min_ratio_per_R"] = mins;
  json slopes = json::array();
  for (double v : local_slopes) slopes.push_back(number_json(v));
  j["local_slopes"] = slopes;
  return j;
}

// ------------------------------------------------------------ John witness

namespace {

struct Polyline {
  std::vector<Point> pts;
};

double polyline_length(const Polyline& pl, int dim) {
  double l = 0.0;
  for (std::size_t i = 0; i + 1 < pl.pts.size(); ++i) l += distance(pl.pts[i], pl.pts[i + 1], dim);
  return l;
}

// max(l, sup_t t / dist(gamma(t))) along the polyline, t measured from its start.
double john_ratio(const Shape& shape, const Polyline& pl, std::size_t samples) {
  const int n = shape.dim();
  const double total = polyline_length(pl, n);
  double worst = total;
  if (total <= 0) return 0.0;
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (std::size_t k = 1; k <= samples; ++k) {
    const double t = total * static_cast<double>(k) / static_cast<double>(samples);
    while (seg + 2 < pl.pts.size() && seg_start + distance(pl.pts[seg], pl.pts[seg + 1], n) < t) {
      seg_start += distance(pl.pts[seg], pl.pts[seg + 1], n);
      ++seg;
    }
    const double len = distance(pl.pts[seg], pl.pts[seg + 1], n);
    const double u = len > 0 ? std::clamp((t - seg_start) / len, 0.0, 1.0) : 0.0;
    Point y{};
    for (int d = 0; d < n; ++d) y[d] = pl.pts[seg][d] + u * (pl.pts[seg + 1][d] - pl.pts[seg][d]);
    if (!shape.contains(y)) return kInf;
    const double dist = shape.boundary_distance(y);
    worst = std::max(worst, dist > 0 ? t / dist : kInf);
  }
  return worst;
}

bool segment_inside(const Shape& shape, const Point& a, const Point& b, std::size_t samples) {
  for (std::size_t k = 0; k <= samples; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(samples);
    Point y{};
    for (int d = 0; d < shape.dim(); ++d) y[d] = a[d] + u * (b[d] - a[d]);
    if (!shape.contains(y)) return false;
  }
  return true;
}

class GridPaths {
 public:
  GridPaths(const Shape& shape, std::size_t resolution, const Point& source) : shape_(shape), n_(shape.dim()) {
    const Box bb = shape.bounding_box();
    double longest = 0.0;
    for (int k = 0; k < n_; ++k) longest = std::max(longest, bb.extent(k));
    h_ = longest / static_cast<double>(resolution);
    for (int k = 0; k < n_; ++k) {
      c_[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(bb.extent(k) / h_)));
      o_[k] = bb.lo[k];
    }
    inside_.assign(c_[0] * c_[1] * c_[2], 0);
    for (std::size_t f = 0; f < inside_.size(); ++f) inside_[f] = shape.contains(center(f)) ? 1 : 0;
    dist_.assign(inside_.size(), kInf);
    prev_.assign(inside_.size(), kNone);
    const std::size_t s = nearest_inside(source);
    if (s == kNone) throw NumericError("John grid has no cell at the base point");
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist_[s] = 0.0;
    pq.push({0.0, s});
    while (!pq.empty()) {
      const auto [d, f] = pq.top();
      pq.pop();
      if (d > dist_[f]) continue;
      const auto i = unflatten(f);
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dz = (n_ == 3 ? -1 : 0); dz <= (n_ == 3 ? 1 : 0); ++dz) {
            if (!dx && !dy && !dz) continue;
            const std::array<long, 3> j{static_cast<long>(i[0]) + dx, static_cast<long>(i[1]) + dy,
                                        static_cast<long>(i[2]) + dz};
            bool ok = true;
            for (int k = 0; k < 3; ++k) ok = ok && j[k] >= 0 && j[k] < static_cast<long>(c_[k]);
            if (!ok) continue;
            const std::size_t g = (j[0] * c_[1] + j[1]) * c_[2] + j[2];
            if (!inside_[g]) continue;
            // diagonal steps only when the axis neighbours are inside too
            if (dx && dy && (!inside_[(j[0] * c_[1] + i[1]) * c_[2] + i[2]] ||
                             !inside_[(i[0] * c_[1] + j[1]) * c_[2] + i[2]]))
              continue;
            const double nd = d + h_ * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
            if (nd < dist_[g]) {
              dist_[g] = nd;
              prev_[g] = f;
              pq.push({nd, g});
            }
          }
    }
  }

  // Polyline from `target` to `source` through cell centers, or empty.
  Polyline path(const Point& target, const Point& source) const {
    Polyline pl;
    std::size_t f = nearest_inside(target);
    if (f == kNone || !std::isfinite(dist_[f])) return pl;
    pl.pts.push_back(target);
    while (f != kNone) {
      pl.pts.push_back(center(f));
      f = prev_[f];
    }
    pl.pts.push_back(source);
    return pl;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  std::array<std::size_t, 3> unflatten(std::size_t f) const {
    return {f / (c_[1] * c_[2]), (f / c_[2]) % c_[1], f % c_[2]};
  }
  Point center(std::size_t f) const {
    const auto i = unflatten(f);
    Point p{};
    for (int k = 0; k < n_; ++k) p[k] = o_[k] + (static_cast<double>(i[k]) + 0.5) * h_;
    return p;
  }
  std::size_t nearest_inside(const Point& x) const {
    std::array<long, 3> i{0, 0, 0};
    for (int k = 0; k < n_; ++k)
      i[k] = std::clamp(static_cast<long>(std::floor((x[k] - o_[k]) / h_)), 0L, static_cast<long>(c_[k]) - 1);
    std::size_t best = kNone;
    double best_d = kInf;
    for (int r = 0; r <= 3 && best == kNone; ++r)
      for (long a = i[0] - r; a <= i[0] + r; ++a)
        for (long b = i[1] - r; b <= i[1] + r; ++b)
          for (long c = (n_ == 3 ? i[2] - r : 0); c <= (n_ == 3 ? i[2] + r : 0); ++c) {
            if (a < 0 || b < 0 || c < 0 || a >= static_cast<long>(c_[0]) || b >= static_cast<long>(c_[1]) ||
                c >= static_cast<long>(c_[2]))
              continue;
            const std::size_t f = (a * c_[1] + b) * c_[2] + c;
            if (!inside_[f]) continue;
            const double d = distance(center(f), x, n_);
            if (d < best_d) {
              best_d = d;
              best = f;
            }
          }
    return best;
  }

  const Shape& shape_;
  int n_;
  double h_ = 0.0;
  std::array<std::size_t, 3> c_{1, 1, 1};
  Point o_{};
  std::vector<char> inside_;
  std::vector<double> dist_;
  std::vector<std::size_t> prev_;
};

}  // namespace

JohnWitness john_witness(const Shape& shape, const Point& x0, const std::vector<Point>& targets,
                         const JohnOptions& options) {
  if (!shape.contains(x0)) throw InvalidArgument("John base point must lie inside the domain");
  JohnWitness out;
  out.dim = shape.dim();
  out.method = shape.is_convex() ? "segment" : "segment+grid";
  std::unique_ptr<GridPaths> grid;
  const std::size_t samples = std::max<std::size_t>(options.path_samples, 2);
  for (const Point& x : targets) {
    double delta = kInf;
    Polyline seg{{x, x0}};
    if (shape.is_convex() || segment_inside(shape, x, x0, samples)) {
      delta = john_ratio(shape, seg, samples);
      out.max_length = std::max(out.max_length, polyline_length(seg, out.dim));
    }
    if (!std::isfinite(delta)) {
      if (!grid) {
        const std::size_t res =
            out.dim == 3 ? std::min<std::size_t>(options.grid_resolution, 64) : options.grid_resolution;
        grid = std::make_unique<GridPaths>(shape, res, x0);
      }
      const Polyline pl = grid->path(x, x0);
      if (!pl.pts.empty()) {
        delta = john_ratio(shape, pl, samples);
        out.max_length = std::max(out.max_length, polyline_length(pl, out.dim));
      }
    }
    out.per_target.push_back(delta);
    if (delta > out.delta_estimate || out.per_target.size() == 1) {
      out.delta_estimate = delta;
      out.worst_point = x;
    }
  }
  out.verdict = out.delta_estimate > options.threshold ? "witness" : "no witness found";
  return out;
}

json JohnWitness::to_json() const {
  json j;
  j["delta_estimate"] = number_json(delta_estimate);
  j["max_length"] = max_length;
  j["worst_point"] = point_json(worst_point, dim);
  j["method"] = method;
  j["verdict"] = verdict;
  json per = json::array();
  for (double v : per_target) per.push_back(number_json(v));
  j["per_target"] = per;
  return j;
}

}  // namespace molab
