#include "ergoline/lyapunov.hpp"

#include <cmath>

namespace ergoline {

LyapunovSpec LyapunovSpec::affine(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("affine V: c must be > 0");
  return {LyapunovFamily::Affine, c, 0.0};
}

LyapunovSpec LyapunovSpec::power_affine(double lambda, double beta) {
  if (!(lambda > 0.0) || !(beta > 1.0)) {
    throw std::invalid_argument(
        "power-affine V: need lambda > 0 and beta > 1");
  }
  return {LyapunovFamily::PowerAffine, lambda, beta};
}

LyapunovSpec LyapunovSpec::exponential(double lambda) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("exp V: lambda must be > 0");
  }
  return {LyapunovFamily::Exp, lambda, 0.0};
}

LyapunovSpec LyapunovSpec::frac_power(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("frac-power V: beta must be in (0, 1)");
  }
  return {LyapunovFamily::FracPower, beta, 0.0};
}

double LyapunovSpec::value(double x) const {
  switch (family_) {
    case LyapunovFamily::Affine:
      return 1.0 + a_ * x;
    case LyapunovFamily::PowerAffine:
      return std::pow(1.0 + a_ * x, b_);
    case LyapunovFamily::Exp:
      return std::exp(a_ * x);
    case LyapunovFamily::FracPower:
      return 1.0 + std::pow(x, a_);
  }
  return 0.0;
}

double LyapunovSpec::d1(double x) const {
  switch (family_) {
    case LyapunovFamily::Affine:
      return a_;
    case LyapunovFamily::PowerAffine:
      return b_ * a_ * std::pow(1.0 + a_ * x, b_ - 1.0);
    case LyapunovFamily::Exp:
      return a_ * std::exp(a_ * x);
    case LyapunovFamily::FracPower:
      return a_ * std::pow(x, a_ - 1.0);
  }
  return 0.0;
}

double LyapunovSpec::d2(double x) const {
  switch (family_) {
    case LyapunovFamily::Affine:
      return 0.0;
    case LyapunovFamily::PowerAffine:
      return b_ * (b_ - 1.0) * a_ * a_ * std::pow(1.0 + a_ * x, b_ - 2.0);
    case LyapunovFamily::Exp:
      return a_ * a_ * std::exp(a_ * x);
    case LyapunovFamily::FracPower:
      return a_ * (a_ - 1.0) * std::pow(x, a_ - 2.0);
  }
  return 0.0;
}

std::string LyapunovSpec::describe() const {
  switch (family_) {
    case LyapunovFamily::Affine:
      return "V(x) = 1 + " + std::to_string(a_) + "*x";
    case LyapunovFamily::PowerAffine:
      return "V(x) = (1 + " + std::to_string(a_) + "*x)^" +
             std::to_string(b_);
    case LyapunovFamily::Exp:
      return "V(x) = exp(" + std::to_string(a_) + "*x)";
    case LyapunovFamily::FracPower:
      return "V(x) = 1 + x^" + std::to_string(a_);
  }
  return {};
}

TruncatedLyapunov::TruncatedLyapunov(LyapunovSpec base, double x1, double x2)
    : base_(base), x1_(x1), x2_(x2) {
  if (!(0.0 < x1 && x1 < x2)) {
    throw std::invalid_argument("truncate: need 0 < x1 < x2");
  }
}

double TruncatedLyapunov::psi(double x) const {
  if (x <= x1_) return 0.0;
  if (x >= x2_) return x;
  // psi(x) = x * s(u), u in (0,1), with the cubic smoothstep
  // s(u) = u^2 (3 - 2u): s(0)=s'(0)=0, s(1)=1, s'(1)=0, so psi is C^1 at
  // both knots, nondecreasing, and psi(x) <= x.
  const double u = (x - x1_) / (x2_ - x1_);
  const double s = u * u * (3.0 - 2.0 * u);
  return x * s;
}

double TruncatedLyapunov::comparability_constant(
    std::span<const double> grid) const {
  double c = 1.0;
  for (double x : grid) {
    const double vh = value(x);
    const double v = base_.value(x);
    if (vh > 0.0) c = std::max(c, v / vh);
  }
  return c;
}

TruncatedLyapunov truncate(const LyapunovSpec& v, double x1, double x2) {
  return TruncatedLyapunov(v, x1, x2);
}

}  // namespace ergoline
