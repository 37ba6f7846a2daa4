#include "ergoline/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>

namespace ergoline {
namespace {

bool is_integer_valued(double v) {
  return std::isfinite(v) && v == std::nearbyint(v) && std::abs(v) < 1e15;
}

const char* fn_name(UnaryFn fn) {
  switch (fn) {
    case UnaryFn::Exp:
      return "exp";
    case UnaryFn::Log:
      return "log";
    case UnaryFn::Sqrt:
      return "sqrt";
    case UnaryFn::Abs:
      return "abs";
  }
  return "?";
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  ExprPtr run() {
    ExprPtr e = parse_expr(0);
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  static constexpr int kMaxDepth = 200;

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, pos_);
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool consume(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr parse_expr(int depth) {
    check_depth(depth);
    ExprPtr lhs = parse_term(depth + 1);
    for (;;) {
      if (consume('+')) {
        lhs = binary(BinOp::Add, lhs, parse_term(depth + 1));
      } else if (consume('-')) {
        lhs = binary(BinOp::Sub, lhs, parse_term(depth + 1));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_term(int depth) {
    check_depth(depth);
    ExprPtr lhs = parse_unary(depth + 1);
    for (;;) {
      if (consume('*')) {
        lhs = binary(BinOp::Mul, lhs, parse_unary(depth + 1));
      } else if (consume('/')) {
        lhs = binary(BinOp::Div, lhs, parse_unary(depth + 1));
      } else {
        return lhs;
      }
    }
  }

  ExprPtr parse_unary(int depth) {
    check_depth(depth);
    if (consume('-')) {
      return std::make_shared<const ExprNode>(
          ExprNode{Negate{parse_unary(depth + 1)}});
    }
    return parse_power(depth + 1);
  }

  ExprPtr parse_power(int depth) {
    check_depth(depth);
    ExprPtr base = parse_atom(depth + 1);
    if (consume('^')) {
      // right-associative: exponent is a unary production, so x^-0.5 and
      // x^y^z both parse without parentheses.
      return binary(BinOp::Pow, base, parse_unary(depth + 1));
    }
    return base;
  }

  ExprPtr parse_atom(int depth) {
    check_depth(depth);
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      ExprPtr inner = parse_expr(depth + 1);
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      return parse_ident(depth);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  ExprPtr parse_number() {
    double value = 0.0;
    const char* begin = src_.data() + pos_;
    const char* end = src_.data() + src_.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    if (!std::isfinite(value)) fail("numeric literal out of range");
    return std::make_shared<const ExprNode>(ExprNode{Literal{value}});
  }

  ExprPtr parse_ident(int depth) {
    std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    std::string_view name = src_.substr(start, pos_ - start);
    if (name == "x") {
      return std::make_shared<const ExprNode>(ExprNode{Variable{}});
    }
    UnaryFn fn;
    if (name == "exp")
      fn = UnaryFn::Exp;
    else if (name == "log")
      fn = UnaryFn::Log;
    else if (name == "sqrt")
      fn = UnaryFn::Sqrt;
    else if (name == "abs")
      fn = UnaryFn::Abs;
    else {
      pos_ = start;
      fail("unknown identifier '" + std::string(name) + "'");
    }
    if (!consume('(')) fail("expected '(' after function name");
    ExprPtr arg = parse_expr(depth + 1);
    if (!consume(')')) fail("expected ')'");
    return std::make_shared<const ExprNode>(ExprNode{Call{fn, arg}});
  }

  static ExprPtr binary(BinOp op, ExprPtr lhs, ExprPtr rhs) {
    return std::make_shared<const ExprNode>(
        ExprNode{Binary{op, std::move(lhs), std::move(rhs)}});
  }

  void check_depth(int depth) const {
    if (depth > kMaxDepth) {
      throw ParseError("expression too deeply nested", pos_);
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

double eval_checked(const ExprNode& n, double x);

double apply_fn_checked(UnaryFn fn, double v) {
  switch (fn) {
    case UnaryFn::Exp: {
      double r = std::exp(v);
      if (!std::isfinite(r)) throw EvalDomainError("exp overflow");
      return r;
    }
    case UnaryFn::Log:
      if (!(v > 0.0)) throw EvalDomainError("log of non-positive value");
      return std::log(v);
    case UnaryFn::Sqrt:
      if (v < 0.0) throw EvalDomainError("sqrt of negative value");
      return std::sqrt(v);
    case UnaryFn::Abs:
      return std::fabs(v);
  }
  throw EvalDomainError("unknown function");
}

double eval_checked(const ExprNode& n, double x) {
  return std::visit(
      [x](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return node.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return x;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return -eval_checked(*node.arg, x);
        } else if constexpr (std::is_same_v<T, Call>) {
          return apply_fn_checked(node.fn, eval_checked(*node.arg, x));
        } else {
          double a = eval_checked(*node.lhs, x);
          double b = eval_checked(*node.rhs, x);
          switch (node.op) {
            case BinOp::Add:
              return a + b;
            case BinOp::Sub:
              return a - b;
            case BinOp::Mul: {
              double r = a * b;
              if (!std::isfinite(r)) throw EvalDomainError("multiply overflow");
              return r;
            }
            case BinOp::Div:
              if (b == 0.0) throw EvalDomainError("division by zero");
              return a / b;
            case BinOp::Pow: {
              if (a < 0.0 && !is_integer_valued(b)) {
                throw EvalDomainError(
                    "fractional power of a negative base");
              }
              if (a == 0.0 && b < 0.0) {
                throw EvalDomainError("negative power of zero");
              }
              double r = pow_value(a, b);
              if (!std::isfinite(r)) throw EvalDomainError("pow overflow");
              return r;
            }
          }
          throw EvalDomainError("unknown operator");
        }
      },
      n.node);
}

double eval_raw_node(const ExprNode& n, double x) noexcept {
  return std::visit(
      [x](const auto& node) noexcept -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return node.value;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return x;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return -eval_raw_node(*node.arg, x);
        } else if constexpr (std::is_same_v<T, Call>) {
          double v = eval_raw_node(*node.arg, x);
          switch (node.fn) {
            case UnaryFn::Exp:
              return __builtin_exp(v);
            case UnaryFn::Log:
              return __builtin_log(v);
            case UnaryFn::Sqrt:
              return __builtin_sqrt(v);
            case UnaryFn::Abs:
              return __builtin_fabs(v);
          }
          return 0.0;
        } else {
          double a = eval_raw_node(*node.lhs, x);
          double b = eval_raw_node(*node.rhs, x);
          switch (node.op) {
            case BinOp::Add:
              return a + b;
            case BinOp::Sub:
              return a - b;
            case BinOp::Mul:
              return a * b;
            case BinOp::Div:
              return a / b;
            case BinOp::Pow:
              return pow_value(a, b);
          }
          return 0.0;
        }
      },
      n.node);
}

int precedence(const ExprNode& n) {
  // atoms 5, pow 4, negate 3, mul/div 2, add/sub 1
  return std::visit(
      [](const auto& node) -> int {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal> ||
                      std::is_same_v<T, Variable> || std::is_same_v<T, Call>) {
          return 5;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return 3;
        } else {
          const Binary& b = static_cast<const Binary&>(node);
          switch (b.op) {
            case BinOp::Add:
            case BinOp::Sub:
              return 1;
            case BinOp::Mul:
            case BinOp::Div:
              return 2;
            case BinOp::Pow:
              return 4;
          }
          return 0;
        }
      },
      n.node);
}

void format_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, ptr);
}

void serialize(const ExprNode& n, std::string& out);

void serialize_child(const ExprNode& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out.push_back('(');
    serialize(child, out);
    out.push_back(')');
  } else {
    serialize(child, out);
  }
}

void serialize(const ExprNode& n, std::string& out) {
  std::visit(
      [&out](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal>) {
          if (node.value < 0 || std::signbit(node.value)) {
            // parsing never produces negative literals; keep the output
            // grammatical for hand-built trees
            out.push_back('(');
            out.push_back('-');
            format_double(out, -node.value);
            out.push_back(')');
          } else {
            format_double(out, node.value);
          }
        } else if constexpr (std::is_same_v<T, Variable>) {
          out.push_back('x');
        } else if constexpr (std::is_same_v<T, Negate>) {
          out.push_back('-');
          serialize_child(*node.arg, 3, out);
        } else if constexpr (std::is_same_v<T, Call>) {
          out.append(fn_name(node.fn));
          out.push_back('(');
          serialize(*node.arg, out);
          out.push_back(')');
        } else {
          switch (node.op) {
            case BinOp::Add:
              serialize_child(*node.lhs, 1, out);
              out.append(" + ");
              serialize_child(*node.rhs, 2, out);
              break;
            case BinOp::Sub:
              serialize_child(*node.lhs, 1, out);
              out.append(" - ");
              serialize_child(*node.rhs, 2, out);
              break;
            case BinOp::Mul:
              serialize_child(*node.lhs, 2, out);
              out.push_back('*');
              serialize_child(*node.rhs, 3, out);
              break;
            case BinOp::Div:
              serialize_child(*node.lhs, 2, out);
              out.push_back('/');
              serialize_child(*node.rhs, 3, out);
              break;
            case BinOp::Pow:
              // base must be an atom (pow is right-assoc, minus binds looser)
              serialize_child(*node.lhs, 5, out);
              out.push_back('^');
              serialize_child(*node.rhs, 3, out);
              break;
          }
        }
      },
      n.node);
}

bool identical_nodes(const ExprNode& a, const ExprNode& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* la = std::get_if<Literal>(&a.node)) {
    return la->value == std::get<Literal>(b.node).value;
  }
  if (std::holds_alternative<Variable>(a.node)) return true;
  if (const auto* na = std::get_if<Negate>(&a.node)) {
    return identical_nodes(*na->arg, *std::get<Negate>(b.node).arg);
  }
  if (const auto* ca = std::get_if<Call>(&a.node)) {
    const auto& cb = std::get<Call>(b.node);
    return ca->fn == cb.fn && identical_nodes(*ca->arg, *cb.arg);
  }
  const auto& ba = std::get<Binary>(a.node);
  const auto& bb = std::get<Binary>(b.node);
  return ba.op == bb.op && identical_nodes(*ba.lhs, *bb.lhs) &&
         identical_nodes(*ba.rhs, *bb.rhs);
}

bool node_is_constant(const ExprNode& n) {
  return std::visit(
      [](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Literal>) {
          return true;
        } else if constexpr (std::is_same_v<T, Variable>) {
          return false;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return node_is_constant(*node.arg);
        } else if constexpr (std::is_same_v<T, Call>) {
          return node_is_constant(*node.arg);
        } else {
          return node_is_constant(*node.lhs) && node_is_constant(*node.rhs);
        }
      },
      n.node);
}

}  // namespace

ParseError::ParseError(const std::string& message, std::size_t offset)
    : std::runtime_error(message + " at offset " + std::to_string(offset)),
      offset_(offset) {}

Expr::Expr(ExprPtr root) : root_(std::move(root)) { compile(); }

Expr Expr::parse(std::string_view source) {
  if (source.empty()) throw ParseError("empty expression", 0);
  Parser p(source);
  return Expr(p.run());
}

double Expr::eval(double x) const {
  if (!root_) throw EvalDomainError("empty expression");
  return eval_checked(*root_, x);
}

std::string Expr::str() const {
  std::string out;
  if (root_) serialize(*root_, out);
  return out;
}

bool Expr::identical(const Expr& other) const {
  if (!root_ || !other.root_) return root_ == other.root_;
  return identical_nodes(*root_, *other.root_);
}

bool Expr::is_constant() const { return root_ && node_is_constant(*root_); }

void Expr::compile() {
  program_.clear();
  if (!root_) return;
  std::size_t depth = 0;
  std::size_t max_depth = 0;
  // iterative post-order emission via an explicit visit stack
  struct Frame {
    const ExprNode* node;
    int stage;
  };
  std::vector<Frame> stack{{root_.get(), 0}};
  auto push_value = [&] {
    ++depth;
    if (depth > max_depth) max_depth = depth;
  };
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const ExprNode& n = *f.node;
    if (const auto* lit = std::get_if<Literal>(&n.node)) {
      program_.push_back({OpCode::PushConst, lit->value});
      push_value();
    } else if (std::holds_alternative<Variable>(n.node)) {
      program_.push_back({OpCode::PushX, 0.0});
      push_value();
    } else if (const auto* neg = std::get_if<Negate>(&n.node)) {
      if (f.stage == 0) {
        stack.push_back({f.node, 1});
        stack.push_back({neg->arg.get(), 0});
      } else {
        program_.push_back({OpCode::Neg, 0.0});
      }
    } else if (const auto* call = std::get_if<Call>(&n.node)) {
      if (f.stage == 0) {
        stack.push_back({f.node, 1});
        stack.push_back({call->arg.get(), 0});
      } else {
        OpCode op = OpCode::Exp;
        switch (call->fn) {
          case UnaryFn::Exp:
            op = OpCode::Exp;
            break;
          case UnaryFn::Log:
            op = OpCode::Log;
            break;
          case UnaryFn::Sqrt:
            op = OpCode::Sqrt;
            break;
          case UnaryFn::Abs:
            op = OpCode::Abs;
            break;
        }
        program_.push_back({op, 0.0});
      }
    } else {
      const auto& bin = std::get<Binary>(n.node);
      if (f.stage == 0) {
        if (bin.op == BinOp::Pow) {
          if (const auto* lit = std::get_if<Literal>(&bin.rhs->node)) {
            // constant exponent: fold into a single instruction
            stack.push_back({f.node, 2});
            stack.push_back({bin.lhs.get(), 0});
            (void)lit;
            continue;
          }
        }
        stack.push_back({f.node, 1});
        stack.push_back({bin.rhs.get(), 0});
        stack.push_back({bin.lhs.get(), 0});
      } else if (f.stage == 2) {
        program_.push_back(
            {OpCode::PowConst, std::get<Literal>(bin.rhs->node).value});
      } else {
        OpCode op = OpCode::Add;
        switch (bin.op) {
          case BinOp::Add:
            op = OpCode::Add;
            break;
          case BinOp::Sub:
            op = OpCode::Sub;
            break;
          case BinOp::Mul:
            op = OpCode::Mul;
            break;
          case BinOp::Div:
            op = OpCode::Div;
            break;
          case BinOp::Pow:
            op = OpCode::Pow;
            break;
        }
        program_.push_back({op, 0.0});
        --depth;
      }
    }
  }
  stack_need_ = max_depth + 1;
}

double Expr::eval_raw(double x) const noexcept {
  double local[32];
  double* sp = local;
  std::vector<double> heap;
  if (stack_need_ > 32) {
    heap.resize(stack_need_);
    sp = heap.data();
  }
  std::size_t top = 0;
  for (const Instr& in : program_) {
    switch (in.op) {
      case OpCode::PushConst:
        sp[top++] = in.imm;
        break;
      case OpCode::PushX:
        sp[top++] = x;
        break;
      case OpCode::Neg:
        sp[top - 1] = -sp[top - 1];
        break;
      case OpCode::Add:
        sp[top - 2] += sp[top - 1];
        --top;
        break;
      case OpCode::Sub:
        sp[top - 2] -= sp[top - 1];
        --top;
        break;
      case OpCode::Mul:
        sp[top - 2] *= sp[top - 1];
        --top;
        break;
      case OpCode::Div:
        sp[top - 2] /= sp[top - 1];
        --top;
        break;
      case OpCode::Pow:
        sp[top - 2] = pow_value(sp[top - 2], sp[top - 1]);
        --top;
        break;
      case OpCode::PowConst:
        sp[top - 1] = pow_value(sp[top - 1], in.imm);
        break;
      case OpCode::Exp:
        sp[top - 1] = __builtin_exp(sp[top - 1]);
        break;
      case OpCode::Log:
        sp[top - 1] = __builtin_log(sp[top - 1]);
        break;
      case OpCode::Sqrt:
        sp[top - 1] = __builtin_sqrt(sp[top - 1]);
        break;
      case OpCode::Abs:
        sp[top - 1] = __builtin_fabs(sp[top - 1]);
        break;
    }
  }
  return top > 0 ? sp[top - 1] : 0.0;
}

double default_deriv_step(double x) { return std::max(1e-4, 1e-4 * x); }

double deriv(const Expr& e, double x, int order, double step) {
  if (order != 1 && order != 2) {
    throw std::invalid_argument("deriv: order must be 1 or 2");
  }
  if (!(step > 0.0)) {
    throw std::invalid_argument("deriv: step must be positive");
  }
  if (!(x - 2.0 * step > 0.0)) {
    throw std::invalid_argument("deriv: step too large for x");
  }
  const double h = step;
  const double f_p1 = e.eval(x + h);
  const double f_m1 = e.eval(x - h);
  const double f_p2 = e.eval(x + 2.0 * h);
  const double f_m2 = e.eval(x - 2.0 * h);
  if (order == 1) {
    const double d_h = (f_p1 - f_m1) / (2.0 * h);
    const double d_2h = (f_p2 - f_m2) / (4.0 * h);
    return (4.0 * d_h - d_2h) / 3.0;
  }
  const double f_0 = e.eval(x);
  const double s_h = (f_p1 - 2.0 * f_0 + f_m1) / (h * h);
  const double s_2h = (f_p2 - 2.0 * f_0 + f_m2) / (4.0 * h * h);
  return (4.0 * s_h - s_2h) / 3.0;
}

double deriv(const Expr& e, double x, int order) {
  return deriv(e, x, order, default_deriv_step(x));
}

}  // namespace ergoline
