#include "ergoline/numerics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>

namespace ergoline::num {

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  if (!(b >= a)) throw QuadratureError("integrate: inverted interval");
  if (a == b) return 0.0;
  boost::math::quadrature::tanh_sinh<double> integrator(15);
  double error = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  double result;
  try {
    result = integrator.integrate(f, a, b, rel_tol, &error, &l1, &levels);
  } catch (const std::exception& e) {
    throw QuadratureError(std::string("integrate: ") + e.what());
  }
  if (!std::isfinite(result)) {
    throw QuadratureError("integrate: non-finite result (divergent?)");
  }
  const double scale = std::max(1e-300, std::abs(result));
  if (error > 1e3 * rel_tol && error * l1 > 1e3 * rel_tol * scale) {
    throw QuadratureError("integrate: failed to reach requested tolerance");
  }
  return result;
}

double integrate_half_line(const std::function<double(double)>& f,
                           double rel_tol) {
  boost::math::quadrature::exp_sinh<double> integrator(12);
  double error = 0.0, l1 = 0.0;
  double result;
  try {
    result = integrator.integrate(f, rel_tol, &error, &l1);
  } catch (const std::exception& e) {
    throw QuadratureError(std::string("integrate_half_line: ") + e.what());
  }
  if (!std::isfinite(result)) {
    throw QuadratureError(
        "integrate_half_line: non-finite result (divergent?)");
  }
  const double scale = std::max(1e-300, std::abs(result));
  if (error > 1e3 * rel_tol && error * l1 > 1e3 * rel_tol * scale) {
    throw QuadratureError(
        "integrate_half_line: failed to reach requested tolerance");
  }
  return result;
}

double find_root_increasing(const std::function<double(double)>& f, double lo,
                            double hi, double rel_tol) {
  if (!(lo <= hi)) throw RootFindError("find_root_increasing: bad bracket");
  double flo = f(lo);
  double fhi = f(hi);
  if (flo > 0.0 || fhi < 0.0) {
    throw RootFindError("find_root_increasing: root not bracketed");
  }
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  const int bits = std::max(10, static_cast<int>(-std::log2(rel_tol)) + 2);
  boost::math::tools::eps_tolerance<double> tol(
      std::min(bits, std::numeric_limits<double>::digits - 2));
  std::uintmax_t max_iter = 200;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol,
                                             max_iter);
  return 0.5 * (r.first + r.second);
}

std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw std::invalid_argument("geometric_grid: need 0 < lo < hi, n >= 2");
  }
  std::vector<double> g(n);
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo * std::exp(ratio * static_cast<double>(i) /
                         static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (!(hi >= lo) || n < 2) {
    throw std::invalid_argument("linear_grid: need lo <= hi, n >= 2");
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

MeanSe mean_se(std::span<const double> values) {
  MeanSe out;
  out.n = values.size();
  if (out.n == 0) return out;
  out.mean = compensated_sum(values) / static_cast<double>(out.n);
  if (out.n == 1) return out;
  double ss = 0.0;
  double comp = 0.0;
  for (double v : values) {
    double d = (v - out.mean) * (v - out.mean);
    double t = ss + d;
    comp += (ss - t) + d;
    ss = t;
  }
  ss += comp;
  const double var = ss / static_cast<double>(out.n - 1);
  out.se = std::sqrt(var / static_cast<double>(out.n));
  return out;
}

WilsonInterval wilson95(std::size_t successes, std::size_t n) {
  WilsonInterval w;
  if (n == 0) return w;
  const double z = 1.959963984540054;
  const double z2 = z * z;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  w.estimate = p;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  w.lo = std::max(0.0, center - half);
  w.hi = std::min(1.0, center + half);
  return w;
}

}  // namespace ergoline::num
