#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace molab {

inline constexpr int kMaxDim = 3;
using Point = std::array<double, kMaxDim>;

inline constexpr double kE = std::numbers::e;
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

// Base of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation does not hold (bad argument, wrong mode).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A configuration document is malformed or violates the schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A numeric procedure could not produce a trustworthy value.
class NumericError : public Error {
 public:
  using Error::Error;
};

struct Box {
  int dim = 2;
  Point lo{0.0, 0.0, 0.0};
  Point hi{1.0, 1.0, 1.0};

  double extent(int axis) const { return hi[axis] - lo[axis]; }
  double diameter() const;
  bool contains(const Point& x) const;
};

double distance(const Point& x, const Point& y, int dim);
double norm(const Point& x, int dim);

// Volume of the unit ball in R^n.
double unit_ball_volume(int dim);

// log(exp(a) + exp(b)) without overflow; -inf is the neutral element.
double log_add_exp(double a, double b);

// log(e + t) for t given through its logarithm lt = log t.
double log_e_plus_exp(double lt);

// Streaming log-sum-exp accumulator.
class LogSum {
 public:
  void add(double log_value);
  double value() const;  // -inf when empty

 private:
  double max_ = -kInf;
  double sum_ = 0.0;
};

std::string format_point(const Point& x, int dim);

}  // namespace molab
