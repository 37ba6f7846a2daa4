#include "ergoline/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergoline/numerics.hpp"

namespace ergoline {
namespace {

void check_evaluable(const Expr& e, const char* what) {
  if (e.empty()) throw ModelError(std::string(what) + ": empty expression");
  std::vector<double> probe{0.0};
  for (double x : num::geometric_grid(1e-6, 1e6, 25)) probe.push_back(x);
  for (double x : probe) {
    try {
      (void)e.eval(x);
    } catch (const EvalDomainError& err) {
      throw ModelError(std::string(what) + " not evaluable at x = " +
                       std::to_string(x) + ": " + err.what());
    }
  }
}

void check_nonnegative(const Expr& e, const char* what) {
  std::vector<double> probe{0.0};
  for (double x : num::geometric_grid(1e-6, 1e6, 25)) probe.push_back(x);
  for (double x : probe) {
    if (e.eval(x) < 0.0) {
      throw ModelError(std::string(what) + " negative at x = " +
                       std::to_string(x));
    }
  }
}

}  // namespace

DisplacementLaw DisplacementLaw::exponential(double rate) {
  if (!(rate > 0.0)) {
    throw ModelError("exponential displacement law: rate must be > 0");
  }
  return {Kind::Exponential, rate};
}

DisplacementLaw DisplacementLaw::point_mass(double value) {
  if (!(value >= 0.0)) {
    throw ModelError("point-mass displacement law: value must be >= 0");
  }
  return {Kind::PointMass, value};
}

double DisplacementLaw::mean() const {
  switch (kind) {
    case Kind::Exponential:
      return 1.0 / param;
    case Kind::PointMass:
      return param;
  }
  return 0.0;
}

double DisplacementLaw::icdf(double u) const {
  switch (kind) {
    case Kind::Exponential:
      return -std::log1p(-u) / param;
    case Kind::PointMass:
      return param;
  }
  return 0.0;
}

double DisplacementLaw::mgf_term(double lambda) const {
  switch (kind) {
    case Kind::Exponential:
      if (lambda >= param) {
        throw ModelError(
            "exponential displacement law: e^{lambda Z} not integrable "
            "(lambda >= rate)");
      }
      return lambda / (param - lambda);
    case Kind::PointMass:
      return std::expm1(lambda * param);
  }
  return 0.0;
}

double DisplacementLaw::sup_lambda() const {
  switch (kind) {
    case Kind::Exponential:
      return param;
    case Kind::PointMass:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

JumpKernel JumpKernel::exp_displacement(Expr rate_expr) {
  JumpKernel k;
  k.kind = Kind::ExpDisplacement;
  k.rate = std::move(rate_expr);
  check_evaluable(k.rate, "jump rate");
  std::vector<double> probe{0.0};
  for (double x : num::geometric_grid(1e-6, 1e6, 25)) probe.push_back(x);
  for (double x : probe) {
    if (!(k.rate.eval(x) > 0.0)) {
      throw ModelError("jump rate must be positive, fails at x = " +
                       std::to_string(x));
    }
  }
  return k;
}

JumpKernel JumpKernel::translation(DisplacementLaw law_) {
  JumpKernel k;
  k.kind = Kind::Translation;
  k.law = law_;
  return k;
}

double JumpKernel::sample(double x, double u) const {
  switch (kind) {
    case Kind::ExpDisplacement:
      return -std::log1p(-u) / rate.eval_raw(x);
    case Kind::Translation:
      return law.icdf(u);
  }
  return 0.0;
}

double JumpKernel::mean_displacement(double x) const {
  switch (kind) {
    case Kind::ExpDisplacement:
      return 1.0 / rate.eval(x);
    case Kind::Translation:
      return law.mean();
  }
  return 0.0;
}

LevyMeasure LevyMeasure::compound(double rate_, DisplacementLaw law_) {
  if (!(rate_ >= 0.0)) {
    throw ModelError("compound Levy measure: rate must be >= 0");
  }
  LevyMeasure m;
  m.kind = Kind::FiniteCompound;
  m.rate = rate_;
  m.law = law_;
  return m;
}

LevyMeasure LevyMeasure::infinite_activity(Expr density,
                                           std::optional<double> lambda0_) {
  LevyMeasure m;
  m.kind = Kind::InfiniteActivity;
  m.density = std::move(density);
  m.lambda0 = lambda0_;
  if (m.density.empty()) {
    throw ModelError("infinite-activity Levy measure: empty density");
  }
  // eq:finite — int (1 ^ z) mu(dz) < inf, checked numerically
  const Expr& d = m.density;
  try {
    double near0 = num::integrate(
        [&d](double z) {
          const double w = d.eval_raw(z);
          if (!std::isfinite(w)) return 0.0;  // sub-representable z
          return z * w;
        },
        0.0, 1.0, 1e-8);
    double tail = num::integrate_half_line(
        [&d](double w) { return d.eval_raw(1.0 + w); }, 1e-8);
    if (!(near0 >= 0.0) || !(tail >= 0.0)) {
      throw ModelError("Levy density must be nonnegative");
    }
  } catch (const num::QuadratureError& e) {
    throw ModelError(std::string("Levy measure violates the (1 ^ z) "
                                 "integrability condition: ") +
                     e.what());
  }
  return m;
}

double LevyMeasure::m1() const {
  switch (kind) {
    case Kind::FiniteCompound:
      return rate * law.mean();
    case Kind::InfiniteActivity: {
      const Expr& d = density;
      try {
        return num::integrate_half_line(
            [&d](double z) {
              const double w = d.eval_raw(z);
              if (!std::isfinite(w)) return 0.0;
              return z * w;
            },
            1e-9);
      } catch (const num::QuadratureError& e) {
        throw ModelError(std::string("divergent first moment: ") + e.what());
      }
    }
  }
  return 0.0;
}

double LevyMeasure::tail_mass(double eps) const {
  switch (kind) {
    case Kind::FiniteCompound: {
      if (eps <= 0.0) return rate;
      switch (law.kind) {
        case DisplacementLaw::Kind::Exponential:
          return rate * std::exp(-law.param * eps);
        case DisplacementLaw::Kind::PointMass:
          return law.param >= eps ? rate : 0.0;
      }
      return rate;
    }
    case Kind::InfiniteActivity: {
      const Expr& d = density;
      return num::integrate_half_line(
          [&d, eps](double w) { return d.eval_raw(eps + w); }, 1e-9);
    }
  }
  return 0.0;
}

double LevyMeasure::small_jump_mean(double eps) const {
  switch (kind) {
    case Kind::FiniteCompound:
      // no truncation for finite measures
      return 0.0;
    case Kind::InfiniteActivity: {
      if (eps <= 0.0) return 0.0;
      const Expr& d = density;
      return num::integrate(
          [&d](double z) {
            const double w = d.eval_raw(z);
            if (!std::isfinite(w)) return 0.0;
            return z * w;
          },
          0.0, eps, 1e-10);
    }
  }
  return 0.0;
}

double LevyMeasure::sup_lambda() const {
  switch (kind) {
    case Kind::FiniteCompound:
      if (rate == 0.0) return std::numeric_limits<double>::infinity();
      return law.sup_lambda();
    case Kind::InfiniteActivity:
      return lambda0.value_or(std::numeric_limits<double>::infinity());
  }
  return 0.0;
}

std::string model_family_name(const ProcessModel& model) {
  if (std::holds_alternative<DiffusionModel>(model)) return "diffusion";
  if (std::holds_alternative<JumpDiffusionModel>(model)) {
    return "jump_diffusion";
  }
  return "levy";
}

std::size_t SimConfig::n_steps() const {
  return static_cast<std::size_t>(std::llround(horizon / dt));
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ModelError("sim config: dt must be > 0");
  if (!(horizon >= dt)) throw ModelError("sim config: horizon must be >= dt");
  if (n_paths == 0) throw ModelError("sim config: n_paths must be >= 1");
  if (!(small_jump_cutoff > 0.0)) {
    throw ModelError("sim config: small_jump_cutoff must be > 0");
  }
  if (threads == 0) throw ModelError("sim config: threads must be >= 1");
}

ReflectResult reflect_step(double x, double increment) {
  const double s = x + increment;
  if (s <= 0.0) return {0.0, -s};
  return {s, 0.0};
}

double diffusion_increment(const DiffusionModel& m, double x, double dt,
                           double gauss) {
  return m.drift.eval(x) * dt + m.sigma.eval(x) * std::sqrt(dt) * gauss;
}

std::vector<double> jump_events(const JumpDiffusionModel& m, double x,
                                double dt, PathRng& rng) {
  std::vector<double> displacements;
  const std::uint64_t n = rng.poisson(m.intensity * dt);
  displacements.reserve(n);
  double state = x;
  for (std::uint64_t k = 0; k < n; ++k) {
    const double u = rng.uniform();
    const double d = m.kernel.sample(state, u);
    displacements.push_back(d);
    state += d;
  }
  return displacements;
}

Stepper::Stepper(const ProcessModel& model, const SimConfig& config)
    : model_(model), dt_(config.dt), sqrt_dt_(std::sqrt(config.dt)) {
  config.validate();
  if (const auto* d = std::get_if<DiffusionModel>(&model_)) {
    kind_ = Kind::Diffusion;
    check_evaluable(d->drift, "drift");
    check_evaluable(d->sigma, "sigma");
    check_nonnegative(d->sigma, "sigma");
  } else if (const auto* jd = std::get_if<JumpDiffusionModel>(&model_)) {
    kind_ = Kind::JumpDiffusion;
    check_evaluable(jd->base.drift, "drift");
    check_evaluable(jd->base.sigma, "sigma");
    check_nonnegative(jd->base.sigma, "sigma");
    if (!(jd->intensity >= 0.0)) {
      throw ModelError("jump intensity must be >= 0");
    }
    event_rate_ = jd->intensity;
  } else {
    kind_ = Kind::Levy;
    const auto& lv = std::get<LevyModel>(model_);
    if (!(lv.sigma >= 0.0)) throw ModelError("Levy sigma must be >= 0");
    if (lv.measure.kind == LevyMeasure::Kind::FiniteCompound) {
      event_rate_ = lv.measure.rate;
      compensator_ = 0.0;
    } else {
      const double eps = config.small_jump_cutoff;
      event_rate_ = lv.measure.tail_mass(eps);
      compensator_ = dt_ * lv.measure.small_jump_mean(eps);
      // tabulate the inverse CDF of the retained jump law on [eps, z_hi]
      double z_hi = std::max(1.0, 4.0 * eps);
      int guard = 0;
      while (lv.measure.tail_mass(z_hi) > 1e-12 * event_rate_) {
        z_hi *= 2.0;
        if (++guard > 64) {
          throw ModelError("Levy jump law: tail does not decay");
        }
      }
      const std::size_t n = 8192;
      const auto zs = num::geometric_grid(eps, z_hi, n);
      std::vector<double> dens(n);
      for (std::size_t i = 0; i < n; ++i) {
        dens[i] = lv.measure.density.eval_raw(zs[i]);
        if (!(dens[i] >= 0.0) || !std::isfinite(dens[i])) {
          throw ModelError("Levy density not finite/nonnegative at z = " +
                           std::to_string(zs[i]));
        }
      }
      icdf_u_.resize(n);
      icdf_z_ = zs;
      double cum = 0.0;
      icdf_u_[0] = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        cum += 0.5 * (dens[i] + dens[i - 1]) * (zs[i] - zs[i - 1]);
        icdf_u_[i] = cum;
      }
      if (!(cum > 0.0)) throw ModelError("Levy jump law has zero mass");
      for (double& u : icdf_u_) u /= cum;
      icdf_u_.back() = 1.0;
      tabulated_ = true;
    }
  }
}

double Stepper::sample_levy_jump(double u) const {
  if (!tabulated_) {
    const auto& lv = std::get<LevyModel>(model_);
    return lv.measure.law.icdf(u);
  }
  const auto it = std::lower_bound(icdf_u_.begin(), icdf_u_.end(), u);
  if (it == icdf_u_.begin()) return icdf_z_.front();
  if (it == icdf_u_.end()) return icdf_z_.back();
  const std::size_t i = static_cast<std::size_t>(it - icdf_u_.begin());
  const double u0 = icdf_u_[i - 1], u1 = icdf_u_[i];
  const double z0 = icdf_z_[i - 1], z1 = icdf_z_[i];
  const double w = (u1 > u0) ? (u - u0) / (u1 - u0) : 0.0;
  return z0 + w * (z1 - z0);
}

double Stepper::step_one(double x, PathRng& rng) const {
  const double xi = rng.gauss();
  switch (kind_) {
    case Kind::Diffusion: {
      const auto& m = std::get<DiffusionModel>(model_);
      const double inc = m.drift.eval_raw(x) * dt_ +
                         m.sigma.eval_raw(x) * sqrt_dt_ * xi;
      const double s = x + inc;
      return s <= 0.0 ? 0.0 : s;
    }
    case Kind::JumpDiffusion: {
      const auto& m = std::get<JumpDiffusionModel>(model_);
      const std::uint64_t n = rng.poisson(event_rate_ * dt_);
      double chain = x;
      for (std::uint64_t k = 0; k < n; ++k) {
        chain += m.kernel.sample(chain, rng.uniform());
      }
      const double inc = m.base.drift.eval_raw(x) * dt_ +
                         m.base.sigma.eval_raw(x) * sqrt_dt_ * xi +
                         (chain - x);
      const double s = x + inc;
      return s <= 0.0 ? 0.0 : s;
    }
    case Kind::Levy: {
      const auto& m = std::get<LevyModel>(model_);
      const std::uint64_t n = rng.poisson(event_rate_ * dt_);
      double jumps = 0.0;
      for (std::uint64_t k = 0; k < n; ++k) {
        jumps += sample_levy_jump(rng.uniform());
      }
      const double inc =
          m.drift * dt_ + m.sigma * sqrt_dt_ * xi + jumps + compensator_;
      const double s = x + inc;
      return s <= 0.0 ? 0.0 : s;
    }
  }
  return x;
}

double Stepper::levy_increment(PathRng& rng) const {
  if (kind_ != Kind::Levy) {
    throw ModelError("levy_increment: not a Levy model");
  }
  const auto& m = std::get<LevyModel>(model_);
  const double xi = rng.gauss();
  const std::uint64_t n = rng.poisson(event_rate_ * dt_);
  double jumps = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    jumps += sample_levy_jump(rng.uniform());
  }
  return m.drift * dt_ + m.sigma * sqrt_dt_ * xi + jumps + compensator_;
}

void Stepper::step_pair(double& x1, double& x2, PathRng& rng) const {
  const double xi = rng.gauss();
  switch (kind_) {
    case Kind::Diffusion: {
      const auto& m = std::get<DiffusionModel>(model_);
      const double inc2 =
          m.drift.eval_raw(x2) * dt_ + m.sigma.eval_raw(x2) * sqrt_dt_ * xi;
      double inc1 = inc2;
      if (x1 != x2) {
        inc1 =
            m.drift.eval_raw(x1) * dt_ + m.sigma.eval_raw(x1) * sqrt_dt_ * xi;
      }
      const double s1 = x1 + inc1;
      const double s2 = x2 + inc2;
      x1 = s1 <= 0.0 ? 0.0 : s1;
      x2 = s2 <= 0.0 ? 0.0 : s2;
      return;
    }
    case Kind::JumpDiffusion: {
      const auto& m = std::get<JumpDiffusionModel>(model_);
      const std::uint64_t n = rng.poisson(event_rate_ * dt_);
      double c1 = x1, c2 = x2;
      for (std::uint64_t k = 0; k < n; ++k) {
        const double u = rng.uniform();
        c2 += m.kernel.sample(c2, u);
        if (x1 != x2) {
          c1 += m.kernel.sample(c1, u);
        } else {
          c1 = c2;
        }
      }
      const double inc2 = m.base.drift.eval_raw(x2) * dt_ +
                          m.base.sigma.eval_raw(x2) * sqrt_dt_ * xi +
                          (c2 - x2);
      double inc1 = inc2;
      if (x1 != x2) {
        inc1 = m.base.drift.eval_raw(x1) * dt_ +
               m.base.sigma.eval_raw(x1) * sqrt_dt_ * xi + (c1 - x1);
      }
      const double s1 = x1 + inc1;
      const double s2 = x2 + inc2;
      x1 = s1 <= 0.0 ? 0.0 : s1;
      x2 = s2 <= 0.0 ? 0.0 : s2;
      return;
    }
    case Kind::Levy: {
      const auto& m = std::get<LevyModel>(model_);
      const std::uint64_t n = rng.poisson(event_rate_ * dt_);
      double jumps = 0.0;
      for (std::uint64_t k = 0; k < n; ++k) {
        jumps += sample_levy_jump(rng.uniform());
      }
      const double shared =
          m.drift * dt_ + m.sigma * sqrt_dt_ * xi + jumps + compensator_;
      const double s1 = x1 + shared;
      const double s2 = x2 + shared;
      x1 = s1 <= 0.0 ? 0.0 : s1;
      x2 = s2 <= 0.0 ? 0.0 : s2;
      return;
    }
  }
}

double step(const ProcessModel& model, double x, double dt, PathRng& rng) {
  SimConfig cfg;
  cfg.dt = dt;
  cfg.horizon = dt;
  Stepper stepper(model, cfg);
  return stepper.step_one(x, rng);
}

}  // namespace ergoline
