#include "ergoline/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergoline/parallel.hpp"

namespace ergoline {
namespace {

constexpr double kZ95 = 1.959963984540054;

}  // namespace

DistanceEstimate empirical_U_distance(const CoupledSample& sample,
                                      const std::function<double(double)>& U,
                                      double t) {
  const std::size_t j = sample.checkpoint_index(t);
  const std::size_t n = sample.n_paths();
  std::vector<double> terms(n, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    if (sample.meet_time[p] > t) {
      terms[p] = U(sample.x1_at[j][p]) + U(sample.x2_at[j][p]);
    }
  }
  const auto ms = num::mean_se(terms);
  DistanceEstimate est;
  est.estimate = ms.mean;
  est.ci_lo = std::max(0.0, ms.mean - kZ95 * ms.se);
  est.ci_hi = ms.mean + kZ95 * ms.se;
  return est;
}

double theoretical_bound(const ProductDecomposition& decomp,
                         const LyapunovSpec& V, double x2, double t) {
  const double h = decomp.h(t);
  const double num = 2.0 * V.value(x2);
  if (h <= 0.0) return std::numeric_limits<double>::infinity();
  return num / h;
}

std::string to_string(VerifyStatus s) {
  switch (s) {
    case VerifyStatus::Pass:
      return "PASS";
    case VerifyStatus::Fail:
      return "FAIL";
    case VerifyStatus::Inconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

namespace {

BoundReport verify_bound_impl(const ProcessModel& model,
                              const RateCertificate& cert,
                              const ProductDecomposition& decomp,
                              const InitialLaw& law1, const InitialLaw& law2,
                              const SimConfig& config,
                              std::span<const double> t_grid,
                              double numerator) {
  if (!cert.pass) {
    throw std::invalid_argument(
        "verify_bound: certificate does not pass; refusing to verify a "
        "bound with no certified rate");
  }
  std::vector<double> checkpoints(t_grid.begin(), t_grid.end());
  const CoupledSample sample =
      coupled_paths(model, law1, law2, config, checkpoints);

  BoundReport report;
  report.x1 = law1.is_point() ? law1.param
                              : std::numeric_limits<double>::quiet_NaN();
  report.x2 = law2.is_point() ? law2.param
                              : std::numeric_limits<double>::quiet_NaN();
  report.n_paths = config.n_paths;
  report.seed = config.master_seed;
  report.tainted = sample.tainted;
  report.order_violations = sample.order_violations;
  report.hit_before_meet = sample.hit_before_meet;
  report.decomposition = decomp.describe();
  report.certificate_note = cert.notes;

  bool all_pass = true;
  for (double t : t_grid) {
    auto est = empirical_U_distance(
        sample, [&decomp](double x) { return decomp.U(x); }, t);
    BoundPoint point;
    point.t = t;
    point.empirical = est.estimate;
    point.ci_lo = est.ci_lo;
    point.ci_hi = est.ci_hi;
    const double h = decomp.h(t);
    point.bound =
        h > 0.0 ? numerator / h : std::numeric_limits<double>::infinity();
    point.pass = est.ci_lo <= point.bound;
    all_pass = all_pass && point.pass;
    report.points.push_back(point);
  }
  if (sample.tainted) {
    report.status = VerifyStatus::Inconclusive;
  } else {
    report.status = all_pass ? VerifyStatus::Pass : VerifyStatus::Fail;
  }
  return report;
}

}  // namespace

BoundReport verify_bound(const ProcessModel& model,
                         const RateCertificate& cert,
                         const ProductDecomposition& decomp, double x1,
                         double x2, const SimConfig& config,
                         std::span<const double> t_grid) {
  if (!(x1 <= x2)) {
    throw std::invalid_argument("verify_bound: requires x1 <= x2");
  }
  const double numerator = 2.0 * decomp.lyapunov().value(x2);
  return verify_bound_impl(model, cert, decomp, InitialLaw::point(x1),
                           InitialLaw::point(x2), config, t_grid, numerator);
}

BoundReport verify_bound(const ProcessModel& model,
                         const RateCertificate& cert,
                         const ProductDecomposition& decomp,
                         const InitialLaw& law1, const InitialLaw& law2,
                         const SimConfig& config,
                         std::span<const double> t_grid, double numerator) {
  return verify_bound_impl(model, cert, decomp, law1, law2, config, t_grid,
                           numerator);
}

namespace {

/// Integrated autocorrelation time of a series, in units of its own
/// spacing: 1 + 2 sum of autocorrelations up to the first nonpositive
/// term (initial positive sequence cutoff).
double integrated_autocorrelation(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 8) return 1.0;
  const double mean = num::compensated_sum(series) / static_cast<double>(n);
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  if (!(var > 0.0)) return 1.0;
  double tau = 1.0;
  const std::size_t max_lag = std::min<std::size_t>(n / 4, 2048);
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) {
      acc += (series[i] - mean) * (series[i + lag] - mean);
    }
    const double rho = acc / (static_cast<double>(n - lag) * var);
    if (rho <= 0.0) break;
    tau += 2.0 * rho;
  }
  return tau;
}

}  // namespace

EmpiricalStationary stationary_estimate(const ProcessModel& model,
                                        const SimConfig& config,
                                        const LyapunovSpec& V, double burn_in,
                                        std::size_t thin) {
  config.validate();
  if (burn_in < 0.0) burn_in = 0.5 * config.horizon;
  if (!(burn_in < config.horizon)) {
    throw std::invalid_argument(
        "stationary_estimate: burn_in must be below the horizon");
  }
  const std::size_t n_steps = config.n_steps();
  const std::size_t burn_steps =
      static_cast<std::size_t>(std::llround(burn_in / config.dt));
  const std::size_t kept_per_path = n_steps - burn_steps;
  // pilot stride caps the raw harvest at ~2^17 states per path
  const std::size_t pilot =
      std::max<std::size_t>(1, kept_per_path / (1u << 17));
  const std::size_t stored_per_path = (kept_per_path + pilot - 1) / pilot;

  const std::size_t n = config.n_paths;
  std::vector<std::vector<double>> traces(n);
  const Stepper stepper(model, config);

  const auto blocks = make_blocks(n, config.threads);
  run_blocks(blocks, [&](std::size_t, BlockRange range) {
    for (std::size_t p = range.begin; p < range.end; ++p) {
      PathRng rng(config.master_seed, p);
      double x = 0.0;
      std::vector<double>& trace = traces[p];
      trace.reserve(stored_per_path);
      for (std::size_t i = 1; i <= n_steps; ++i) {
        x = stepper.step_one(x, rng);
        if (i > burn_steps && (i - burn_steps - 1) % pilot == 0) {
          trace.push_back(x);
        }
      }
    }
  });

  EmpiricalStationary out;
  out.burn_in = burn_in;

  // thinning stride from the integrated autocorrelation of the first path
  const double iact = integrated_autocorrelation(traces[0]);
  out.iact_steps = iact;
  std::size_t stride = thin;
  if (stride == 0) {
    stride = static_cast<std::size_t>(std::ceil(iact));
    stride = std::max<std::size_t>(1, stride);
  }
  out.thin_stride = stride * pilot;  // in simulation steps

  for (const auto& trace : traces) {
    for (std::size_t i = 0; i < trace.size(); i += stride) {
      out.states.push_back(trace[i]);
    }
  }
  out.ess = static_cast<double>(out.states.size());

  const auto ms_x = num::mean_se(out.states);
  out.mean_x = ms_x.mean;
  out.se_x = ms_x.se;

  std::vector<double> v_values(out.states.size());
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    v_values[i] = V.value(out.states[i]);
  }
  const auto ms_v = num::mean_se(v_values);
  out.pi_v = ms_v.mean;
  out.se_pi_v = ms_v.se;

  // running-mean convergence diagnostic for the V-moment: compare the
  // first and second halves of the harvested series
  const std::size_t half = v_values.size() / 2;
  if (half >= 8) {
    const auto first = num::mean_se(
        std::span<const double>(v_values.data(), half));
    const auto second = num::mean_se(
        std::span<const double>(v_values.data() + half, v_values.size() - half));
    const double gap = std::abs(second.mean - first.mean);
    const double scale = std::hypot(first.se, second.se);
    if (scale > 0.0 && gap > 6.0 * scale) out.v_moment_diverging = true;
  }
  return out;
}

double stochastic_max_expectation(std::span<const double> sample1,
                                  std::span<const double> sample2,
                                  const LyapunovSpec& V) {
  if (sample1.empty() || sample2.empty()) {
    throw std::invalid_argument(
        "stochastic_max_expectation: samples must be nonempty");
  }
  std::vector<double> s1(sample1.begin(), sample1.end());
  std::vector<double> s2(sample2.begin(), sample2.end());
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  std::vector<double> pooled;
  pooled.reserve(s1.size() + s2.size());
  pooled.insert(pooled.end(), s1.begin(), s1.end());
  pooled.insert(pooled.end(), s2.begin(), s2.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  const double n1 = static_cast<double>(s1.size());
  const double n2 = static_cast<double>(s2.size());
  // survival S_i(z) = #{ x in s_i : x > z } / n_i; the stochastic max has
  // survival max(S1, S2). Walk the pooled support accumulating the mass
  // dropped at each point times V there.
  double result = 0.0;
  double prev_surv = 1.0;
  std::size_t i1 = 0, i2 = 0;
  for (double z : pooled) {
    while (i1 < s1.size() && s1[i1] <= z) ++i1;
    while (i2 < s2.size() && s2[i2] <= z) ++i2;
    const double surv1 = static_cast<double>(s1.size() - i1) / n1;
    const double surv2 = static_cast<double>(s2.size() - i2) / n2;
    const double surv = std::max(surv1, surv2);
    const double mass = prev_surv - surv;
    if (mass > 0.0) result += mass * V.value(z);
    prev_surv = surv;
  }
  return result;
}

}  // namespace ergoline
