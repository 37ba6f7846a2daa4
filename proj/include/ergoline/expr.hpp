#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ergoline {

/// Syntax error produced by Expr::parse. Carries the byte offset of the
/// offending token in the source string.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Domain error raised by checked evaluation: log/sqrt of a negative
/// argument, division by zero, fractional power of a negative base, or a
/// non-finite intermediate result.
class EvalDomainError : public std::runtime_error {
 public:
  explicit EvalDomainError(const std::string& message)
      : std::runtime_error(message) {}
};

enum class UnaryFn { Exp, Log, Sqrt, Abs };
enum class BinOp { Add, Sub, Mul, Div, Pow };

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct Literal {
  double value;
};
struct Variable {};
struct Negate {
  ExprPtr arg;
};
struct Call {
  UnaryFn fn;
  ExprPtr arg;
};
struct Binary {
  BinOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct ExprNode {
  std::variant<Literal, Variable, Negate, Call, Binary> node;
};

/// An immutable arithmetic expression in the single variable `x`.
///
/// Grammar (whitespace insignificant):
///   expr  := term (('+'|'-') term)*
///   term  := unary (('*'|'/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' unary)?
///   atom  := number | 'x' | ident '(' expr ')' | '(' expr ')'
///
/// `^` is right-associative and binds tighter than unary minus, so -x^2
/// parses as -(x^2). Known functions: exp, log, sqrt, abs.
class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view source);

  /// Checked evaluation: throws EvalDomainError instead of producing
  /// NaN or infinity.
  double eval(double x) const;

  /// Unchecked evaluation with plain IEEE-754 semantics (may return
  /// NaN/inf). This is the hot path used by the simulation kernels.
  double eval_raw(double x) const noexcept;

  /// Serializes with minimal parentheses; parsing the result yields a
  /// structurally identical tree.
  std::string str() const;

  bool identical(const Expr& other) const;
  bool is_constant() const;
  bool empty() const { return root_ == nullptr; }
  const ExprPtr& root() const { return root_; }

 private:
  explicit Expr(ExprPtr root);

  enum class OpCode : std::uint8_t {
    PushConst,
    PushX,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowConst,
    Exp,
    Log,
    Sqrt,
    Abs,
  };
  struct Instr {
    OpCode op;
    double imm;
  };

  void compile();

  ExprPtr root_;
  std::vector<Instr> program_;  // postfix form of root_
  std::size_t stack_need_ = 0;
};

/// Power with the same fast paths in every evaluator, so that tree and
/// compiled evaluation agree bit for bit.
inline double pow_value(double base, double exponent) noexcept {
  if (exponent == 2.0) return base * base;
  if (exponent == 1.0) return base;
  if (exponent == 0.5) return __builtin_sqrt(base);
  if (exponent == -0.5) return 1.0 / __builtin_sqrt(base);
  if (exponent == -1.0) return 1.0 / base;
  return __builtin_pow(base, exponent);
}

double default_deriv_step(double x);

/// Central finite difference of order 1 or 2 with one Richardson
/// extrapolation level over steps h and 2h. Requires x - 2*step > 0;
/// domain errors from evaluation propagate.
double deriv(const Expr& e, double x, int order, double step);
double deriv(const Expr& e, double x, int order);

}  // namespace ergoline
