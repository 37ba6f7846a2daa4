#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace ergoline::num {

class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& message)
      : std::runtime_error(message) {}
};

class RootFindError : public std::runtime_error {
 public:
  explicit RootFindError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Adaptive (tanh-sinh) quadrature of f over [a, b] to the requested
/// relative tolerance. Handles integrable endpoint singularities.
/// Throws QuadratureError on divergence or non-finite results.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol);

/// Quadrature of f over (0, inf); the integrand must decay at infinity and
/// be integrable at 0 (exp-sinh transform).
double integrate_half_line(const std::function<double(double)>& f,
                           double rel_tol);

/// Root of a continuous increasing function on [lo, hi] with
/// f(lo) <= 0 <= f(hi), to the requested relative tolerance.
double find_root_increasing(const std::function<double(double)>& f, double lo,
                            double hi, double rel_tol);

std::vector<double> geometric_grid(double lo, double hi, std::size_t n);
std::vector<double> linear_grid(double lo, double hi, std::size_t n);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

/// Mean and standard error with Neumaier-compensated, index-ordered
/// summation (deterministic regardless of how the data was produced).
MeanSe mean_se(std::span<const double> values);

double compensated_sum(std::span<const double> values);

struct WilsonInterval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson 95% score interval for a binomial proportion.
WilsonInterval wilson95(std::size_t successes, std::size_t n);

}  // namespace ergoline::num
