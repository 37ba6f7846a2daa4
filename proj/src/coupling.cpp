#include "ergoline/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergoline/expr.hpp"
#include "ergoline/parallel.hpp"

namespace ergoline {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> checkpoint_steps(std::span<const double> times,
                                          const SimConfig& config) {
  std::vector<std::size_t> idx(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (!(t >= 0.0) || t > config.horizon * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "checkpoint outside [0, horizon]: t = " + std::to_string(t));
    }
    idx[j] = static_cast<std::size_t>(std::llround(t / config.dt));
  }
  return idx;
}

const Expr* drift_expr(const ProcessModel& model) {
  if (const auto* d = std::get_if<DiffusionModel>(&model)) return &d->drift;
  if (const auto* jd = std::get_if<JumpDiffusionModel>(&model)) {
    return &jd->base.drift;
  }
  return nullptr;  // Levy drift is constant
}

}  // namespace

InitialLaw InitialLaw::point(double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("initial point must be >= 0");
  return {Kind::Point, x};
}

InitialLaw InitialLaw::exponential_mean(double mean) {
  if (!(mean > 0.0)) {
    throw std::invalid_argument("initial exponential mean must be > 0");
  }
  return {Kind::Exponential, mean};
}

double InitialLaw::icdf(double u) const {
  switch (kind) {
    case Kind::Point:
      return param;
    case Kind::Exponential:
      return -param * std::log1p(-u);
  }
  return 0.0;
}

std::size_t CoupledSample::checkpoint_index(double t) const {
  for (std::size_t j = 0; j < checkpoint_times.size(); ++j) {
    if (std::abs(checkpoint_times[j] - t) <=
        1e-12 * std::max(1.0, std::abs(t))) {
      return j;
    }
  }
  throw std::invalid_argument("t is not a stored checkpoint: t = " +
                              std::to_string(t));
}

void check_monotone_dt(const ProcessModel& model, double dt) {
  const Expr* g = drift_expr(model);
  if (g == nullptr || g->is_constant()) return;
  double lip = 0.0;
  for (double x : num::geometric_grid(1e-3, 1e3, 128)) {
    const double step = std::min(default_deriv_step(x), x / 4.0);
    lip = std::max(lip, std::abs(deriv(*g, x, 1, step)));
  }
  if (dt * lip >= 1.0) {
    throw ModelError(
        "dt too large for monotone coupling: dt * Lip(g) = " +
        std::to_string(dt * lip) + " >= 1 (estimated Lip(g) = " +
        std::to_string(lip) + ")");
  }
}

CoupledSample coupled_paths(const ProcessModel& model, double x1, double x2,
                            const SimConfig& config,
                            std::vector<double> checkpoints) {
  return coupled_paths(model, InitialLaw::point(x1), InitialLaw::point(x2),
                       config, std::move(checkpoints));
}

CoupledSample coupled_paths(const ProcessModel& model, const InitialLaw& law1,
                            const InitialLaw& law2, const SimConfig& config,
                            std::vector<double> checkpoints) {
  config.validate();
  if (law1.is_point() && law2.is_point() && law1.param > law2.param) {
    throw std::invalid_argument("coupled_paths: requires x1 <= x2");
  }
  check_monotone_dt(model, config.dt);

  CoupledSample sample;
  sample.dt = config.dt;
  sample.horizon = config.horizon;
  sample.checkpoint_times = std::move(checkpoints);
  const auto cp_steps = checkpoint_steps(sample.checkpoint_times, config);
  const std::size_t n = config.n_paths;
  const std::size_t n_cp = cp_steps.size();
  sample.meet_time.assign(n, kInf);
  sample.hit_time.assign(n, kInf);
  sample.x1_at.assign(n_cp, std::vector<double>(n, 0.0));
  sample.x2_at.assign(n_cp, std::vector<double>(n, 0.0));

  const std::size_t n_steps = config.n_steps();
  std::size_t last_step = 0;
  for (std::size_t s : cp_steps) last_step = std::max(last_step, s);
  last_step = std::max(last_step, n_steps);

  // (step, checkpoint slot) in step order, so each path walks the
  // checkpoint list with a single cursor
  std::vector<std::pair<std::size_t, std::size_t>> cp_sorted;
  cp_sorted.reserve(n_cp);
  for (std::size_t j = 0; j < n_cp; ++j) cp_sorted.emplace_back(cp_steps[j], j);
  std::stable_sort(cp_sorted.begin(), cp_sorted.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  const Stepper stepper(model, config);
  const bool random_start = !law1.is_point() || !law2.is_point();

  const auto blocks = make_blocks(n, config.threads);
  std::vector<std::uint64_t> violations(blocks.size(), 0);
  std::vector<std::uint64_t> hit_before(blocks.size(), 0);

  run_blocks(blocks, [&](std::size_t b, BlockRange range) {
    std::uint64_t local_viol = 0;
    std::uint64_t local_hbm = 0;
    for (std::size_t p = range.begin; p < range.end; ++p) {
      PathRng rng(config.master_seed, p);
      double u0 = 0.0;
      if (random_start) u0 = rng.uniform();
      double x1 = law1.is_point() ? law1.param : law1.icdf(u0);
      double x2 = law2.is_point() ? law2.param : law2.icdf(u0);
      double meet = kInf;
      double hit = kInf;
      if (x1 > x2) ++local_viol;
      if (x1 == x2) meet = 0.0;
      if (x2 == 0.0) {
        hit = 0.0;
        if (!(meet == 0.0)) ++local_hbm;
      }
      std::size_t cursor = 0;
      while (cursor < cp_sorted.size() && cp_sorted[cursor].first == 0) {
        const std::size_t j = cp_sorted[cursor].second;
        sample.x1_at[j][p] = x1;
        sample.x2_at[j][p] = x2;
        ++cursor;
      }
      for (std::size_t i = 1; i <= last_step; ++i) {
        stepper.step_pair(x1, x2, rng);
        if (meet < kInf) {
          x1 = x2;  // fused after the meeting time
        } else if (x1 == x2) {
          meet = static_cast<double>(i) * config.dt;
        }
        if (x1 > x2) ++local_viol;
        if (hit == kInf && x2 == 0.0) {
          hit = static_cast<double>(i) * config.dt;
          if (meet == kInf) ++local_hbm;
        }
        while (cursor < cp_sorted.size() && cp_sorted[cursor].first == i) {
          const std::size_t j = cp_sorted[cursor].second;
          sample.x1_at[j][p] = x1;
          sample.x2_at[j][p] = x2;
          ++cursor;
        }
      }
      sample.meet_time[p] = meet;
      sample.hit_time[p] = hit;
    }
    violations[b] = local_viol;
    hit_before[b] = local_hbm;
  });

  for (std::uint64_t v : violations) sample.order_violations += v;
  for (std::uint64_t v : hit_before) sample.hit_before_meet += v;
  sample.tainted = sample.order_violations > 0 || sample.hit_before_meet > 0;
  return sample;
}

num::WilsonInterval survival(const CoupledSample& sample, double t) {
  if (!(t >= 0.0) || t > sample.horizon * (1.0 + 1e-12)) {
    throw std::invalid_argument("survival: t must lie in [0, horizon]");
  }
  std::size_t alive = 0;
  for (double m : sample.meet_time) {
    if (m > t) ++alive;
  }
  return num::wilson95(alive, sample.n_paths());
}

SupermartingaleAudit supermartingale_audit(const ProcessModel& model,
                                           const LyapunovSpec& V,
                                           const RateKernel& kernel, double x0,
                                           const SimConfig& config,
                                           std::span<const double> t_grid) {
  config.validate();
  if (!(x0 >= 0.0)) {
    throw std::invalid_argument("supermartingale_audit: x0 must be >= 0");
  }
  if (t_grid.empty()) {
    throw std::invalid_argument("supermartingale_audit: empty time grid");
  }
  for (std::size_t j = 0; j + 1 < t_grid.size(); ++j) {
    if (!(t_grid[j] < t_grid[j + 1])) {
      throw std::invalid_argument(
          "supermartingale_audit: time grid must be increasing");
    }
  }
  const auto cp_steps = checkpoint_steps(t_grid, config);
  const std::size_t n = config.n_paths;
  const std::size_t m = t_grid.size();
  std::vector<std::vector<double>> K(m, std::vector<double>(n, 0.0));

  const Stepper stepper(model, config);
  const double v_at_zero = V.value(0.0);
  const std::size_t last_step = cp_steps.empty() ? 0 : *std::max_element(
      cp_steps.begin(), cp_steps.end());

  const auto blocks = make_blocks(n, config.threads);
  run_blocks(blocks, [&](std::size_t, BlockRange range) {
    for (std::size_t p = range.begin; p < range.end; ++p) {
      PathRng rng(config.master_seed, p);
      double x = x0;
      double tau = (x == 0.0) ? 0.0 : kInf;
      std::size_t j = 0;
      while (j < m && cp_steps[j] == 0) {
        K[j][p] = kernel.G(0.0, V.value(x));
        ++j;
      }
      for (std::size_t i = 1; i <= last_step && j < m; ++i) {
        if (tau == kInf) {
          x = stepper.step_one(x, rng);
          if (x == 0.0) tau = static_cast<double>(i) * config.dt;
        }
        if (tau < kInf) {
          // stopped: K is frozen at G(tau, V(0)) for every later time
          const double frozen = kernel.G(tau, v_at_zero);
          while (j < m) {
            K[j][p] = frozen;
            ++j;
          }
          break;
        }
        while (j < m && cp_steps[j] == i) {
          K[j][p] = kernel.G(t_grid[j], V.value(x));
          ++j;
        }
      }
    }
  });

  SupermartingaleAudit audit;
  audit.curve.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto ms = num::mean_se(K[j]);
    audit.curve[j] = {t_grid[j], ms.mean, ms.se};
  }
  audit.nonincreasing_within_2se = true;
  std::vector<double> diff(n);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    for (std::size_t p = 0; p < n; ++p) diff[p] = K[j + 1][p] - K[j][p];
    const auto ms = num::mean_se(diff);
    const double slack = ms.mean - 2.0 * ms.se;
    audit.pair_slack.push_back(slack);
    // rounding floor so the deterministic equality case reads as flat
    const double tol = 1e-9 * std::max(1.0, std::abs(audit.curve[j].mean));
    if (slack > tol) audit.nonincreasing_within_2se = false;
  }
  return audit;
}

}  // namespace ergoline
