#include "molab/expression.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>

namespace molab {

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;
using Kind = ExprNode::Kind;

struct FunctionInfo {
  const char* name;
  int min_args;
  int max_args;  // -1: unbounded; -2: dim; -3: dim + 1
};

constexpr FunctionInfo kFunctions[] = {
    {"log", 1, 1},  {"exp", 1, 1},  {"abs", 1, 1},  {"sqrt", 1, 1},
    {"sin", 1, 1},  {"cos", 1, 1},  {"min", 2, -1}, {"max", 2, -1},
    {"pow", 2, 2},  {"dist_to_point", -2, -2},      {"dist_to_plane", -3, -3},
};

enum OpCode {
  kPushNumber,
  kPushCoordinate,
  kNegate,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kPow,
  kLog,
  kExp,
  kAbs,
  kSqrt,
  kSin,
  kCos,
  kMin,
  kMax,
  kDistPoint,
  kDistPlane,
};

const FunctionInfo* find_function(const std::string& name) {
  for (const auto& f : kFunctions)
    if (name == f.name) return &f;
  return nullptr;
}

double eval_node(const ExprNode& n, const Point& x, int dim) {
  auto arg = [&](std::size_t i) { return eval_node(*n.args[i], x, dim); };
  switch (n.kind) {
    case Kind::number:
    case Kind::constant:
      return n.value;
    case Kind::coordinate:
      return x[n.index];
    case Kind::negate:
      return -arg(0);
    case Kind::add:
      return arg(0) + arg(1);
    case Kind::sub:
      return arg(0) - arg(1);
    case Kind::mul:
      return arg(0) * arg(1);
    case Kind::div:
      return arg(0) / arg(1);
    case Kind::pow:
      return std::pow(arg(0), arg(1));
    case Kind::call:
      break;
  }
  const std::string& f = n.name;
  if (f == "log") return std::log(arg(0));
  if (f == "exp") return std::exp(arg(0));
  if (f == "abs") return std::fabs(arg(0));
  if (f == "sqrt") return std::sqrt(arg(0));
  if (f == "sin") return std::sin(arg(0));
  if (f == "cos") return std::cos(arg(0));
  if (f == "pow") return std::pow(arg(0), arg(1));
  if (f == "min" || f == "max") {
    double v = arg(0);
    for (std::size_t i = 1; i < n.args.size(); ++i)
      v = f == "min" ? std::min(v, arg(i)) : std::max(v, arg(i));
    return v;
  }
  if (f == "dist_to_point") {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = x[k] - arg(k);
      s += d * d;
    }
    return std::sqrt(s);
  }
  // dist_to_plane(n1..nd, c): |n.x - c| / |n|
  double dot = 0.0, nn = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double c = arg(k);
    dot += c * x[k];
    nn += c * c;
  }
  return std::fabs(dot - arg(dim)) / std::sqrt(nn);
}

bool node_is_constant(const ExprNode& n) {
  if (n.kind == Kind::coordinate) return false;
  if (n.kind == Kind::call && (n.name == "dist_to_point" || n.name == "dist_to_plane"))
    return false;
  return std::all_of(n.args.begin(), n.args.end(),
                     [](const NodePtr& a) { return node_is_constant(*a); });
}

class Parser {
 public:
  Parser(const std::string& text, int dim) : s_(text), dim_(dim) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail(ParseErrorKind::syntax, pos_, "empty expression");
    NodePtr root = parse_sum();
    skip_ws();
    if (pos_ < s_.size()) fail(ParseErrorKind::syntax, pos_, "unexpected character");
    return root;
  }

 private:
  const std::string& s_;
  int dim_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(ParseErrorKind kind, std::size_t at, const std::string& what) {
    throw ParseError(kind, at, what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr make(Kind kind, std::vector<NodePtr> args, std::size_t at, std::string name = {}) {
    auto n = std::make_shared<ExprNode>();
    n->kind = kind;
    n->args = std::move(args);
    n->name = std::move(name);
    validate_constant(*n, at);
    return n;
  }

  // Constant subtrees must evaluate to a finite number.
  void validate_constant(const ExprNode& n, std::size_t at) {
    if (!node_is_constant(n)) return;
    const double v = eval_node(n, Point{}, dim_);
    if (!std::isfinite(v)) fail(ParseErrorKind::invalid_constant, at, "constant subexpression is not finite");
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('+')) {
        lhs = make(Kind::add, {lhs, parse_product()}, at);
      } else if (accept('-')) {
        lhs = make(Kind::sub, {lhs, parse_product()}, at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_unary();
    for (;;) {
      skip_ws();
      const std::size_t at = pos_;
      if (accept('*')) {
        lhs = make(Kind::mul, {lhs, parse_unary()}, at);
      } else if (accept('/')) {
        lhs = make(Kind::div, {lhs, parse_unary()}, at);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    skip_ws();
    const std::size_t at = pos_;
    if (accept('-')) return make(Kind::negate, {parse_unary()}, at);
    return parse_power();
  }

  // Exponentiation binds tighter than unary minus and is right-associative.
  NodePtr parse_power() {
    NodePtr base = parse_primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) return make(Kind::pow, {base, parse_unary()}, at);
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail(ParseErrorKind::syntax, pos_, "unexpected end of input");
    const char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!accept(')')) fail(ParseErrorKind::syntax, pos_, "expected ')'");
      return inner;
    }
    fail(ParseErrorKind::syntax, pos_, std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    std::size_t i = pos_;
    auto digits = [&] {
      while (i < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i]))) ++i;
    };
    digits();
    if (i < s_.size() && s_[i] == '.') {
      ++i;
      digits();
    }
    if (i < s_.size() && (s_[i] == 'e' || s_[i] == 'E')) {
      std::size_t j = i + 1;
      if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
      if (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) {
        i = j;
        digits();
      }
    }
    double v = 0.0;
    const auto res = std::from_chars(s_.data() + start, s_.data() + i, v);
    if (res.ec != std::errc() || res.ptr != s_.data() + i)
      fail(ParseErrorKind::syntax, start, "malformed number");
    pos_ = i;
    auto n = std::make_shared<ExprNode>();
    n->kind = Kind::number;
    n->value = v;
    if (!std::isfinite(v)) fail(ParseErrorKind::invalid_constant, start, "number out of range");
    return n;
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string id = s_.substr(start, pos_ - start);
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') return parse_call(id, start);

    auto n = std::make_shared<ExprNode>();
    if (id == "e" || id == "pi") {
      n->kind = Kind::constant;
      n->name = id;
      n->value = id == "e" ? kE : kPi;
      return n;
    }
    if (id.size() >= 2 && id[0] == 'x' &&
        std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }) &&
        id[1] != '0') {
      const int k = std::stoi(id.substr(1));
      if (k >= 1 && k <= dim_) {
        n->kind = Kind::coordinate;
        n->index = k - 1;
        return n;
      }
    }
    fail(ParseErrorKind::unknown_identifier, start, "unknown identifier '" + id + "'");
  }

  NodePtr parse_call(const std::string& name, std::size_t start) {
    const FunctionInfo* f = find_function(name);
    if (!f) fail(ParseErrorKind::unknown_identifier, start, "unknown function '" + name + "'");
    ++pos_;  // '('
    std::vector<NodePtr> args;
    for (;;) {
      skip_ws();
      if (pos_ < s_.size() && s_[pos_] == ')')
        fail(ParseErrorKind::arity, pos_, "missing argument in call to " + name);
      args.push_back(parse_sum());
      skip_ws();
      if (accept(',')) continue;
      if (pos_ < s_.size() && s_[pos_] == ')') break;
      fail(ParseErrorKind::syntax, pos_, "expected ',' or ')'");
    }
    const std::size_t close = pos_;
    ++pos_;
    auto bound = [&](int b) { return b == -2 ? dim_ : b == -3 ? dim_ + 1 : b; };
    const int lo = bound(f->min_args);
    const int hi = f->max_args == -1 ? 1 << 20 : bound(f->max_args);
    const int count = static_cast<int>(args.size());
    if (count < lo || count > hi)
      fail(ParseErrorKind::arity, close,
           name + " takes " + std::to_string(lo) + (hi == lo ? "" : "+") + " arguments, got " +
               std::to_string(count));
    return make(Kind::call, std::move(args), start, name);
  }
};

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ParseError::ParseError(ParseErrorKind kind, std::size_t offset, const std::string& message)
    : ConfigError(std::string(to_string(kind)) + " error at offset " + std::to_string(offset) +
                  ": " + message),
      kind_(kind),
      offset_(offset) {}

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::syntax:
      return "syntax";
    case ParseErrorKind::unknown_identifier:
      return "unknown identifier";
    case ParseErrorKind::arity:
      return "arity";
    case ParseErrorKind::invalid_constant:
      return "invalid constant";
  }
  return "?";
}

bool ExprNode::operator==(const ExprNode& other) const {
  if (kind != other.kind || name != other.name || args.size() != other.args.size()) return false;
  if ((kind == Kind::number || kind == Kind::constant) && value != other.value) return false;
  if (kind == Kind::coordinate && index != other.index) return false;
  for (std::size_t i = 0; i < args.size(); ++i)
    if (!(*args[i] == *other.args[i])) return false;
  return true;
}

std::string print_expression(const ExprNode& n) {
  auto bin = [&](const char* op) {
    return "(" + print_expression(*n.args[0]) + " " + op + " " + print_expression(*n.args[1]) + ")";
  };
  switch (n.kind) {
    case Kind::number:
      return number_text(n.value);
    case Kind::constant:
      return n.name;
    case Kind::coordinate:
      return "x" + std::to_string(n.index + 1);
    case Kind::negate:
      return "(-" + print_expression(*n.args[0]) + ")";
    case Kind::add:
      return bin("+");
    case Kind::sub:
      return bin("-");
    case Kind::mul:
      return bin("*");
    case Kind::div:
      return bin("/");
    case Kind::pow:
      return bin("^");
    case Kind::call:
      break;
  }
  std::string s = n.name + "(";
  for (std::size_t i = 0; i < n.args.size(); ++i) {
    if (i) s += ", ";
    s += print_expression(*n.args[i]);
  }
  return s + ")";
}

Expression Expression::parse(const std::string& text, int dim) {
  if (dim < 1 || dim > kMaxDim) throw InvalidArgument("expression dimension must be 1..3");
  Expression e;
  e.dim_ = dim;
  e.root_ = Parser(text, dim).parse();
  e.compile();
  return e;
}

bool Expression::is_constant() const { return node_is_constant(*root_); }

std::string Expression::print() const { return print_expression(*root_); }

void Expression::compile() {
  program_.clear();
  std::size_t depth = 0;
  std::function<void(const ExprNode&)> emit = [&](const ExprNode& n) {
    auto push = [&](int code, double value = 0.0, int arg = 0) {
      program_.push_back({code, value, arg});
    };
    switch (n.kind) {
      case Kind::number:
      case Kind::constant:
        push(kPushNumber, n.value);
        depth = std::max(depth, ++stack_depth_);
        return;
      case Kind::coordinate:
        push(kPushCoordinate, 0.0, n.index);
        depth = std::max(depth, ++stack_depth_);
        return;
      default:
        break;
    }
    for (const auto& a : n.args) emit(*a);
    const int argc = static_cast<int>(n.args.size());
    stack_depth_ -= argc;
    int code = kNegate;
    switch (n.kind) {
      case Kind::negate: code = kNegate; break;
      case Kind::add: code = kAdd; break;
      case Kind::sub: code = kSub; break;
      case Kind::mul: code = kMul; break;
      case Kind::div: code = kDiv; break;
      case Kind::pow: code = kPow; break;
      default: {
        const std::string& f = n.name;
        code = f == "log" ? kLog : f == "exp" ? kExp : f == "abs" ? kAbs : f == "sqrt" ? kSqrt
             : f == "sin" ? kSin : f == "cos" ? kCos : f == "min" ? kMin : f == "max" ? kMax
             : f == "pow" ? kPow : f == "dist_to_point" ? kDistPoint : kDistPlane;
      }
    }
    push(code, 0.0, argc);
    ++stack_depth_;
  };
  stack_depth_ = 0;
  emit(*root_);
  stack_depth_ = depth;
}

double Expression::operator()(const Point& x) const {
  constexpr std::size_t kInline = 64;
  double inline_stack[kInline] = {};
  std::vector<double> heap;
  double* st = inline_stack;
  if (stack_depth_ > kInline) {
    heap.resize(stack_depth_);
    st = heap.data();
  }
  std::size_t sp = 0;
  for (const Op& op : program_) {
    switch (op.code) {
      case kPushNumber: st[sp++] = op.value; break;
      case kPushCoordinate: st[sp++] = x[op.arg]; break;
      case kNegate: st[sp - 1] = -st[sp - 1]; break;
      case kAdd: --sp; st[sp - 1] += st[sp]; break;
      case kSub: --sp; st[sp - 1] -= st[sp]; break;
      case kMul: --sp; st[sp - 1] *= st[sp]; break;
      case kDiv: --sp; st[sp - 1] /= st[sp]; break;
      case kPow: --sp; st[sp - 1] = std::pow(st[sp - 1], st[sp]); break;
      case kLog: st[sp - 1] = std::log(st[sp - 1]); break;
      case kExp: st[sp - 1] = std::exp(st[sp - 1]); break;
      case kAbs: st[sp - 1] = std::fabs(st[sp - 1]); break;
      case kSqrt: st[sp - 1] = std::sqrt(st[sp - 1]); break;
      case kSin: st[sp - 1] = std::sin(st[sp - 1]); break;
      case kCos: st[sp - 1] = std::cos(st[sp - 1]); break;
      case kMin:
      case kMax: {
        const std::size_t base = sp - op.arg;
        double v = st[base];
        for (std::size_t i = base + 1; i < sp; ++i)
          v = op.code == kMin ? std::min(v, st[i]) : std::max(v, st[i]);
        sp = base + 1;
        st[base] = v;
        break;
      }
      case kDistPoint: {
        const std::size_t base = sp - op.arg;
        double s = 0.0;
        for (int k = 0; k < op.arg; ++k) {
          const double d = x[k] - st[base + k];
          s += d * d;
        }
        sp = base + 1;
        st[base] = std::sqrt(s);
        break;
      }
      case kDistPlane: {
        const std::size_t base = sp - op.arg;
        const int d = op.arg - 1;
        double dot = 0.0, nn = 0.0;
        for (int k = 0; k < d; ++k) {
          dot += st[base + k] * x[k];
          nn += st[base + k] * st[base + k];
        }
        sp = base + 1;
        st[base] = std::fabs(dot - st[base + d]) / std::sqrt(nn);
        break;
      }
    }
  }
  return st[0];
}

}  // namespace molab
