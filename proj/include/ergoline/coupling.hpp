#pragma once

#include <span>
#include <vector>

#include "ergoline/lyapunov.hpp"
#include "ergoline/models.hpp"
#include "ergoline/numerics.hpp"
#include "ergoline/rate.hpp"

namespace ergoline {

/// Initial distribution for one copy. Non-point laws are sampled by
/// inverse CDF from a uniform shared between the two copies, so a
/// stochastically dominated pair starts ordered path by path.
struct InitialLaw {
  enum class Kind { Point, Exponential };
  Kind kind = Kind::Point;
  double param = 0.0;  // the point, or the exponential mean

  static InitialLaw point(double x);
  static InitialLaw exponential_mean(double mean);
  double icdf(double u) const;
  bool is_point() const { return kind == Kind::Point; }
};

/// Outcome of a shared-noise coupling run: per-path meeting time (first
/// step with X1 = X2, exact equality), the time X2 first hits 0, and the
/// states of both copies at the requested checkpoints. Any order
/// violation taints the whole sample.
struct CoupledSample {
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<double> checkpoint_times;
  std::vector<double> meet_time;  // +inf when not met by the horizon
  std::vector<double> hit_time;   // +inf when X2 never hit 0
  std::vector<std::vector<double>> x1_at;  // [checkpoint][path]
  std::vector<std::vector<double>> x2_at;
  std::uint64_t order_violations = 0;
  std::uint64_t hit_before_meet = 0;
  bool tainted = false;

  std::size_t n_paths() const { return meet_time.size(); }
  std::size_t checkpoint_index(double t) const;
};

/// Estimates max |g'| on a geometric grid and rejects dt when
/// dt * Lip(g) >= 1 (the one-step coupled map is monotone below that
/// threshold for constant sigma).
void check_monotone_dt(const ProcessModel& model, double dt);

CoupledSample coupled_paths(const ProcessModel& model, double x1, double x2,
                            const SimConfig& config,
                            std::vector<double> checkpoints);

CoupledSample coupled_paths(const ProcessModel& model, const InitialLaw& law1,
                            const InitialLaw& law2, const SimConfig& config,
                            std::vector<double> checkpoints);

/// P(meeting time > t) with a Wilson 95% interval. Requires t <= horizon.
num::WilsonInterval survival(const CoupledSample& sample, double t);

struct AuditPoint {
  double t = 0.0;
  double mean = 0.0;
  double se = 0.0;
};

/// Monte Carlo audit of the supermartingale property of
/// K(t) = G(t ^ tau, V(X(t ^ tau))), tau the hitting time of 0.
struct SupermartingaleAudit {
  std::vector<AuditPoint> curve;
  /// mean(K_{j+1} - K_j) - 2 se of the paired difference, per adjacent
  /// grid pair; nonpositive entries are consistent with nonincreasing.
  std::vector<double> pair_slack;
  bool nonincreasing_within_2se = false;
};

SupermartingaleAudit supermartingale_audit(const ProcessModel& model,
                                           const LyapunovSpec& V,
                                           const RateKernel& kernel, double x0,
                                           const SimConfig& config,
                                           std::span<const double> t_grid);

}  // namespace ergoline
