#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ergoline/certify.hpp"
#include "ergoline/coupling.hpp"
#include "ergoline/lyapunov.hpp"
#include "ergoline/rate.hpp"

namespace ergoline {

struct DistanceEstimate {
  double estimate = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Coupling upper estimate of the U-norm distance between the two time-t
/// laws: plug-in mean of [U(X1(t)) + U(X2(t))] 1{meet > t} with a normal
/// 95% interval. This estimates an upper bound for the norm, not the norm
/// itself.
DistanceEstimate empirical_U_distance(const CoupledSample& sample,
                                      const std::function<double(double)>& U,
                                      double t);

/// Theoretical bound 2 V(x2) / h(t); +inf where h(t) = 0 (t = 0 for the
/// Young decompositions).
double theoretical_bound(const ProductDecomposition& decomp,
                         const LyapunovSpec& V, double x2, double t);

enum class VerifyStatus { Pass, Fail, Inconclusive };

std::string to_string(VerifyStatus s);

struct BoundPoint {
  double t = 0.0;
  double empirical = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct BoundReport {
  std::vector<BoundPoint> points;
  VerifyStatus status = VerifyStatus::Inconclusive;
  bool tainted = false;
  std::uint64_t order_violations = 0;
  std::uint64_t hit_before_meet = 0;
  double x1 = 0.0;
  double x2 = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  std::string decomposition;
  std::string certificate_note;
};

/// Runs the coupled simulation and compares the empirical distance
/// against the theoretical curve at every checkpoint. PASS requires an
/// untainted run with ci_lo <= bound everywhere; any order violation
/// yields INCONCLUSIVE, never PASS.
BoundReport verify_bound(const ProcessModel& model,
                         const RateCertificate& cert,
                         const ProductDecomposition& decomp, double x1,
                         double x2, const SimConfig& config,
                         std::span<const double> t_grid);

/// Initial-law variant: the bound numerator (2 (rho1 v rho2, V) for law
/// starts) is supplied by the caller; the copies start from comonotone
/// inverse-CDF draws.
BoundReport verify_bound(const ProcessModel& model,
                         const RateCertificate& cert,
                         const ProductDecomposition& decomp,
                         const InitialLaw& law1, const InitialLaw& law2,
                         const SimConfig& config,
                         std::span<const double> t_grid, double numerator);

struct EmpiricalStationary {
  std::vector<double> states;  // harvested after burn-in and thinning
  double burn_in = 0.0;
  std::size_t thin_stride = 1;
  double iact_steps = 1.0;  // integrated autocorrelation, in kept steps
  double ess = 0.0;
  double mean_x = 0.0;
  double se_x = 0.0;
  double pi_v = 0.0;
  double se_pi_v = 0.0;
  bool v_moment_diverging = false;
};

/// Long-run harvest from n_paths independent runs started at 0, with
/// burn-in (default horizon/2 when negative) and thinning by the
/// estimated integrated autocorrelation time (when thin = 0).
EmpiricalStationary stationary_estimate(const ProcessModel& model,
                                        const SimConfig& config,
                                        const LyapunovSpec& V,
                                        double burn_in = -1.0,
                                        std::size_t thin = 0);

/// (rho1 v rho2, V): expectation of V under the stochastic maximum of the
/// two empirical laws (pointwise max of survival functions).
double stochastic_max_expectation(std::span<const double> sample1,
                                  std::span<const double> sample2,
                                  const LyapunovSpec& V);

}  // namespace ergoline
