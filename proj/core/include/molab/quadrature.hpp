#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "molab/common.hpp"

namespace molab {

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Supported sizes: 4, 8, 12, 16, 24, 32.
const GaussRule& gauss_legendre(int points);

// 15-point Kronrod rule on [-1, 1] with the embedded 7-point Gauss weights
// (zero where a Kronrod node is not a Gauss node).
struct KronrodRule {
  std::vector<double> nodes;
  std::vector<double> kronrod_weights;
  std::vector<double> gauss_weights;
};
const KronrodRule& gauss_kronrod15();

struct LogIntegral {
  double log_value = -kInf;  // log of the integral (-inf when it vanishes)
  double log_error = -kInf;
  std::size_t evaluations = 0;
  std::vector<std::pair<double, double>> panels;  // final subdivision
};

// Adaptive G7/K15 integration of exp(log_f) over [a, b], carried out in
// log space so that integrands far below the double range still resolve.
// `breakpoints` inside (a, b) seed the initial subdivision.
LogIntegral integrate_log(const std::function<double(double)>& log_f, double a, double b,
                          double rel_tol = 1e-10, std::size_t max_panels = 4000,
                          const std::vector<double>& breakpoints = {});

// Weighted point set standing in for a region of R^n. Weights are kept in
// log form so extremely thin regions stay representable.
struct Quadrature {
  int dim = 2;
  std::vector<Point> nodes;
  std::vector<double> log_weights;
  std::vector<double> weights;  // exp(log_weights); may underflow
  double spacing = 0.0;         // characteristic node spacing
  bool log_space = false;       // true when weights underflow double range

  std::size_t size() const { return nodes.size(); }
  // Fills `weights` and `log_space` from `log_weights`.
  void finalize();
  double log_measure() const;
  double measure() const { return std::exp(log_measure()); }
};

// Values of u (and optionally |grad u|) at the nodes of a quadrature.
struct SampledFunction {
  std::shared_ptr<const Quadrature> support;
  std::vector<double> values;
  std::vector<double> grad_norm;  // empty when absent

  bool has_gradient() const { return !grad_norm.empty(); }
  // Throws on length mismatch or non-finite entries.
  void validate() const;
};

}  // namespace molab
