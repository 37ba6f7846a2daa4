#pragma once

#include <span>
#include <stdexcept>
#include <string>

namespace ergoline {

enum class LyapunovFamily { Affine, PowerAffine, Exp, FracPower };

/// Parametric Lyapunov function family on [0, inf). All four variants
/// satisfy V >= 1 and are nondecreasing; first and second derivatives are
/// closed-form (FracPower derivatives are singular at 0, callers evaluate
/// them on x > 0 only).
class LyapunovSpec {
 public:
  /// V(x) = 1 + c x
  static LyapunovSpec affine(double c);
  /// V(x) = (1 + lambda x)^beta, beta > 1
  static LyapunovSpec power_affine(double lambda, double beta);
  /// V(x) = e^{lambda x}
  static LyapunovSpec exponential(double lambda);
  /// V(x) = 1 + x^beta, beta in (0, 1)
  static LyapunovSpec frac_power(double beta);

  LyapunovFamily family() const noexcept { return family_; }
  double param_a() const noexcept { return a_; }  // c / lambda / lambda / beta
  double param_b() const noexcept { return b_; }  // - / beta / - / -

  double value(double x) const;
  double d1(double x) const;
  double d2(double x) const;

  std::string describe() const;

 private:
  LyapunovSpec(LyapunovFamily family, double a, double b)
      : family_(family), a_(a), b_(b) {}
  LyapunovFamily family_;
  double a_;
  double b_;
};

/// Truncated Lyapunov function V-hat = V(psi(x)) with psi = 0 on [0, x1],
/// psi = identity on [x2, inf), and a monotone C^1 interpolation between.
/// psi(x) <= x everywhere.
class TruncatedLyapunov {
 public:
  TruncatedLyapunov(LyapunovSpec base, double x1, double x2);

  double psi(double x) const;
  double value(double x) const { return base_.value(psi(x)); }
  const LyapunovSpec& base() const { return base_; }
  double x1() const { return x1_; }
  double x2() const { return x2_; }

  /// Largest ratio V(x)/V-hat(x) over the grid: the constant C with
  /// V-hat <= V <= C * V-hat.
  double comparability_constant(std::span<const double> grid) const;

 private:
  LyapunovSpec base_;
  double x1_;
  double x2_;
};

TruncatedLyapunov truncate(const LyapunovSpec& v, double x1, double x2);

}  // namespace ergoline
