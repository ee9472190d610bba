#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "molab/common.hpp"
#include "molab/exponent_field.hpp"
#include "molab/quadrature.hpp"
#include "molab/report.hpp"

namespace molab {

// Interval of a cross-section along the last axis. log_length stays exact
// when hi - lo underflows (thin cusps).
struct Section {
  double lo = 0.0;
  double hi = 0.0;
  double log_length = -kInf;
};

// Bounded open set in R^2 or R^3 described by its cross-sections.
class Shape {
 public:
  virtual ~Shape() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual Box bounding_box() const = 0;
  virtual bool contains(const Point& x) const = 0;
  virtual bool is_convex() const = 0;
  virtual std::optional<double> exact_measure() const = 0;
  // Distance from x to the boundary (x inside).
  virtual double boundary_distance(const Point& x) const = 0;
  // Cross-section along the last axis; uses the first dim-1 coordinates.
  virtual std::vector<Section> sections(const Point& prefix) const = 0;
  // Coordinates along `axis` where the sections change form.
  virtual std::vector<double> kinks(int axis) const = 0;
  // Corners, tips and other distinguished boundary points.
  virtual std::vector<Point> special_points() const = 0;
  // `count` points spread over the boundary, special points first.
  virtual std::vector<Point> boundary_points(std::size_t count) const = 0;
  virtual json to_json() const = 0;
};

using ShapePtr = std::shared_ptr<const Shape>;

ShapePtr make_disk(const Point& center = {}, double radius = 1.0);
ShapePtr make_ball(const Point& center = {}, double radius = 1.0);
ShapePtr make_box(int dim, const Point& lo, const Point& hi, const std::string& name = "box");
ShapePtr make_square();
ShapePtr make_cube();
// {x_n > 0} clipped to [-1, 1]^(n-1) x [0, 1]
ShapePtr make_half_space(int dim);
ShapePtr make_l_shape();
// {0 < x1 < 1, |x2| < x1^k}
ShapePtr make_power_cusp(double k);
// {0 < x1 < 1, |x2| < exp(-1/x1)}
ShapePtr make_exp_cusp();
// spine [0,1] x [0,0.2] with `teeth` rooms of geometrically shrinking width
ShapePtr make_comb(int teeth = 6);
ShapePtr make_polygon(const std::string& name, const std::vector<Point>& vertices, bool convex);

// Gallery lookup: {"shape": name, "params": {...}}.
ShapePtr make_shape(const json& spec);
struct GalleryEntry {
  std::string name;
  std::string description;
  json default_params;
};
const std::vector<GalleryEntry>& shape_gallery();

class DiscretizedDomain {
 public:
  // Uniform cubic cells, `resolution` cells along the longest side. Cells with
  // all corners and the center inside get weight 1, mixed cells the fraction of
  // 1024 seeded Monte Carlo subsamples inside.
  DiscretizedDomain(ShapePtr shape, std::size_t resolution, std::uint64_t seed = kDefaultSeed,
                    std::size_t boundary_sample_count = 256);

  const Shape& shape() const { return *shape_; }
  const ShapePtr& shape_ptr() const { return shape_; }
  int dim() const { return shape_->dim(); }
  const std::shared_ptr<const Quadrature>& cells() const { return cells_; }
  double cell_size() const { return h_; }
  std::size_t resolution() const { return resolution_; }
  const std::array<std::size_t, 3>& counts() const { return counts_; }
  std::size_t boundary_cell_count() const { return boundary_cells_; }
  double measure() const { return measure_; }
  double geometric_tolerance() const { return eps_geom_; }
  const std::vector<Point>& boundary_samples() const { return boundary_samples_; }
  SampleSet cell_samples() const;
  // Inside fraction of the grid cell with flat index (i0 * c1 + i1) * c2 + i2.
  double cell_fraction(std::size_t flat) const { return fraction_[flat]; }
  Point cell_center(const std::array<std::size_t, 3>& index) const;
  json to_json() const;

 private:
  ShapePtr shape_;
  std::size_t resolution_;
  double h_ = 0.0;
  std::array<std::size_t, 3> counts_{1, 1, 1};
  std::size_t boundary_cells_ = 0;
  double measure_ = 0.0;
  double eps_geom_ = 0.0;
  Point origin_{};
  std::vector<float> fraction_;
  std::shared_ptr<const Quadrature> cells_;
  std::vector<Point> boundary_samples_;
};

struct BallMeasure {
  double value = 0.0;
  double log_value = -kInf;
  bool low_confidence = false;
  std::string method;
};

// |B_R(x) ∩ Ω| by adaptive integration of cross-section lengths.
BallMeasure ball_intersection_measure(const Shape& shape, const Point& x, double R, double rel_tol = 1e-11);
// Same by cell counting with Monte Carlo refinement of cells cut by the ball.
BallMeasure ball_intersection_measure(const DiscretizedDomain& domain, const Point& x, double R);

struct HalvingResult {
  double radius = 0.0;           // R~
  double log_measure = -kInf;    // log |A_R|
  double log_half = -kInf;       // log |A_R~|
  double relative_error = 0.0;   // | |A_R~| / (|A_R|/2) - 1 |
};

// Smallest R~ <= R with |A_R~| = |A_R| / 2, by bisection.
HalvingResult halving_radius(const Shape& shape, const Point& x, double R);

// Quadrature of B_R(x) ∩ Ω for planar shapes: adaptive panels in x1, Gauss
// points along the cross-sections, split at the circles of `inner_radii`.
std::shared_ptr<const Quadrature> local_ball_quadrature(const Shape& shape, const Point& x, double R,
                                                        const std::vector<double>& inner_radii = {},
                                                        double rel_tol = 1e-10);

// u(y) = 1 on |y-x| <= R~, affine to 0 at R, 0 beyond; |grad u| = 1/(R-R~) on
// the annulus.
SampledFunction make_cutoff(const std::shared_ptr<const Quadrature>& support, const Point& x, double R,
                            double R_tilde);

enum class DecayKind { none, polynomial, super_polynomial };
const char* to_string(DecayKind k);

struct DensityRow {
  std::size_t point = 0;
  double R = 0.0;
  double log_measure = -kInf;
  double log_ratio = -kInf;
};

struct DensityScan {
  double exponent_s = 2.0;
  double alpha = 0.0;
  double c_hat = kInf;
  std::vector<Point> points;
  std::vector<double> radii;
  std::vector<DensityRow> table;
  std::vector<double> min_ratio_per_R;  // over points, per radius
  std::vector<double> local_slopes;     // d log(min ratio) / d log R
  DecayKind decay = DecayKind::none;
  double decay_rate = 0.0;
  bool monotone = true;                 // measure nondecreasing in R at every point
  Point witness{};
  double witness_R = 0.0;
  int dim = 2;

  json to_json() const;
};

// ratio = |B_R(x) ∩ Ω| / (R^s log(1/R)^-alpha) for every point and radius.
DensityScan scan_measure_density(const Shape& shape, const std::vector<Point>& points, double s,
                                 double alpha, const std::vector<double>& R_grid);
// Geometric grid 1/2, 1/4, ... with `count` radii.
std::vector<double> halving_radius_grid(std::size_t count, double start = 0.5);

struct JohnOptions {
  double threshold = 1e3;
  std::size_t grid_resolution = 256;
  std::size_t path_samples = 400;
};

struct JohnWitness {
  double delta_estimate = 0.0;
  double max_length = 0.0;
  Point worst_point{};
  std::vector<double> per_target;
  std::string method;
  std::string verdict;  // "witness" or "no witness found"
  int dim = 2;

  json to_json() const;
};

// delta = max over targets of max(l(gamma), sup_t t / dist(gamma(t), boundary)),
// gamma from the target to x0 by a segment or a grid shortest path.
JohnWitness john_witness(const Shape& shape, const Point& x0, const std::vector<Point>& targets,
                         const JohnOptions& options = {});

}  // namespace molab
