#include <gtest/gtest.h>

#include <cmath>

#include "molab/expression.hpp"

using namespace molab;

namespace {

double eval(const std::string& text, Point x = {}, int dim = 2) { return Expression::parse(text, dim)(x); }

ParseError parse_error(const std::string& text, int dim = 2) {
  try {
    Expression::parse(text, dim);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for " << text;
  return ParseError(ParseErrorKind::syntax, 0, "");
}

}  // namespace

TEST(Expression, EvaluatesCoordinates) {
  EXPECT_DOUBLE_EQ(eval("2 + x1", {0.5, 0.0, 0.0}), 2.5);
  EXPECT_DOUBLE_EQ(eval("x1*x2 - x3", {2.0, 3.0, 1.0}, 3), 5.0);
}

TEST(Expression, NamedConstants) {
  EXPECT_DOUBLE_EQ(eval("log(e + 1/abs(x1))", {1.0, 0.0, 0.0}), std::log(std::exp(1.0) + 1.0));
  EXPECT_DOUBLE_EQ(eval("cos(pi)"), -1.0);
}

TEST(Expression, Precedence) {
  EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("8/4/2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("1-2-3"), -4.0);
  EXPECT_DOUBLE_EQ(eval("1+2*3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("(1+2)*3"), 9.0);
}

TEST(Expression, Functions) {
  EXPECT_DOUBLE_EQ(eval("min(2, 3) + max(2, 3)"), 5.0);
  EXPECT_DOUBLE_EQ(eval("pow(2, 10)"), 1024.0);
  EXPECT_DOUBLE_EQ(eval("sqrt(16)"), 4.0);
  EXPECT_NEAR(eval("dist_to_point(3, 4)"), 5.0, 1e-15);
  // |3 x1 + 4 x2 - 5| / 5 at (1, 1)
  EXPECT_NEAR(eval("dist_to_plane(3, 4, 5)", {1.0, 1.0, 0.0}), 0.4, 1e-15);
}

TEST(Expression, ArityErrorOffset) {
  const ParseError e = parse_error("min(2,)");
  EXPECT_EQ(e.kind(), ParseErrorKind::arity);
  EXPECT_EQ(e.offset(), 6u);
}

TEST(Expression, UnknownIdentifiers) {
  EXPECT_EQ(parse_error("y1 + 2").kind(), ParseErrorKind::unknown_identifier);
  EXPECT_EQ(parse_error("x3", 2).kind(), ParseErrorKind::unknown_identifier);
  EXPECT_EQ(parse_error("foo(1)").kind(), ParseErrorKind::unknown_identifier);
}

TEST(Expression, SyntaxErrors) {
  EXPECT_EQ(parse_error("1 +").kind(), ParseErrorKind::syntax);
  EXPECT_EQ(parse_error("(1 + 2").kind(), ParseErrorKind::syntax);
  EXPECT_EQ(parse_error("1 2").kind(), ParseErrorKind::syntax);
  EXPECT_THROW(Expression::parse("", 2), ParseError);
}

TEST(Expression, RejectsInvalidConstantSubtrees) {
  EXPECT_EQ(parse_error("log(-1)").kind(), ParseErrorKind::invalid_constant);
  EXPECT_EQ(parse_error("x1 + 1/0").kind(), ParseErrorKind::invalid_constant);
}

TEST(Expression, PrintRoundTrip) {
  for (const char* text : {"2 + x1", "-2^2", "2^3^2", "(1-x1)*(x2+3)/4", "log(e + 1/abs(x1))",
                           "min(x1, max(x2, 0.5))", "-(x1 - -x2)", "1.25e-3*x1^0.5"}) {
    const Expression a = Expression::parse(text, 2);
    const Expression b = Expression::parse(a.print(), 2);
    EXPECT_TRUE(a.root() == b.root()) << text << " -> " << a.print();
    EXPECT_EQ(a.print(), b.print());
  }
}

TEST(Expression, ConstantDetection) {
  EXPECT_TRUE(Expression::parse("2*pi + 1", 2).is_constant());
  EXPECT_FALSE(Expression::parse("x1 + 1", 2).is_constant());
}
