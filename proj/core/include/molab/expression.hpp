#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "molab/common.hpp"

namespace molab {

// Exponent expressions: numbers, coordinates x1..xn, the constants e and pi,
// + - * / ^ with unary minus, and calls log exp abs sqrt sin cos min max pow
// dist_to_point dist_to_plane.
enum class ParseErrorKind { syntax, unknown_identifier, arity, invalid_constant };

class ParseError : public ConfigError {
 public:
  ParseError(ParseErrorKind kind, std::size_t offset, const std::string& message);
  ParseErrorKind kind() const { return kind_; }
  std::size_t offset() const { return offset_; }

 private:
  ParseErrorKind kind_;
  std::size_t offset_;
};

const char* to_string(ParseErrorKind kind);

struct ExprNode {
  enum class Kind { number, constant, coordinate, negate, add, sub, mul, div, pow, call };
  Kind kind = Kind::number;
  double value = 0.0;          // number, constant
  int index = 0;               // coordinate (0-based)
  std::string name;            // constant or function name
  std::vector<std::shared_ptr<const ExprNode>> args;

  bool operator==(const ExprNode& other) const;
};

class Expression {
 public:
  // Parses `text` for points of R^dim. Throws ParseError.
  static Expression parse(const std::string& text, int dim);

  double operator()(const Point& x) const;
  int dim() const { return dim_; }
  bool is_constant() const;
  const ExprNode& root() const { return *root_; }

  // Canonical text; parse(print()) yields an identical tree.
  std::string print() const;

 private:
  struct Op {
    int code;
    double value;
    int arg;
  };

  int dim_ = 0;
  std::shared_ptr<const ExprNode> root_;
  std::vector<Op> program_;
  std::size_t stack_depth_ = 0;

  void compile();
};

std::string print_expression(const ExprNode& node);

}  // namespace molab
