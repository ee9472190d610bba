#include "molab/common.hpp"

#include <algorithm>
#include <cstdio>

namespace molab {

double Box::diameter() const {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += extent(k) * extent(k);
  return std::sqrt(s);
}

bool Box::contains(const Point& x) const {
  for (int k = 0; k < dim; ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

double distance(const Point& x, const Point& y, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = x[k] - y[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double norm(const Point& x, int dim) {
  double s = 0.0;
  for (int k = 0; k < dim; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

double unit_ball_volume(int dim) {
  const double h = 0.5 * dim;
  return std::pow(kPi, h) / std::tgamma(h + 1.0);
}

double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -kInf) return a;
  return a + std::log1p(std::exp(b - a));
}

double log_e_plus_exp(double lt) {
  if (lt == -kInf) return 1.0;
  if (lt > 30.0) return lt + std::log1p(kE * std::exp(-lt));
  return std::log(kE + std::exp(lt));
}

void LogSum::add(double log_value) {
  if (log_value == -kInf) return;
  if (log_value > max_) {
    sum_ = (max_ == -kInf ? 0.0 : sum_ * std::exp(max_ - log_value)) + 1.0;
    max_ = log_value;
  } else {
    sum_ += std::exp(log_value - max_);
  }
}

double LogSum::value() const {
  if (max_ == -kInf) return -kInf;
  return max_ + std::log(sum_);
}

std::string format_point(const Point& x, int dim) {
  std::string s = "(";
  char buf[32];
  for (int k = 0; k < dim; ++k) {
    std::snprintf(buf, sizeof buf, "%.6g", x[k]);
    if (k) s += ", ";
    s += buf;
  }
  return s + ")";
}

}  // namespace molab
