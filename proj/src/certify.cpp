#include "ergoline/certify.hpp"

#include <cmath>
#include <limits>

#include "ergoline/numerics.hpp"

namespace ergoline {
namespace {

constexpr double kJumpQuadTol = 1e-8;

/// E[V(x + Z) - V(x)] against an exponential displacement with the given
/// rate, by quadrature over (0, inf).
double exp_displacement_integral(const LyapunovSpec& V, double x,
                                 double rate) {
  const double vx = V.value(x);
  auto f = [&V, x, vx, rate](double z) {
    const double dens = rate * std::exp(-rate * z);
    if (dens == 0.0) return 0.0;  // no mass: V may overflow out here
    return (V.value(x + z) - vx) * dens;
  };
  try {
    return num::integrate_half_line(f, kJumpQuadTol);
  } catch (const num::QuadratureError& e) {
    throw CertifyError(
        std::string("jump integral diverges for this V (exponential "
                    "displacement): ") +
        e.what());
  }
}

/// E[V(x + Z) - V(x)] for a displacement law.
double law_integral(const LyapunovSpec& V, double x,
                    const DisplacementLaw& law) {
  switch (law.kind) {
    case DisplacementLaw::Kind::Exponential:
      if (V.family() == LyapunovFamily::Affine) {
        // V' is constant: E[dV] = c E[Z]
        return V.param_a() / law.param;
      }
      if (V.family() == LyapunovFamily::Exp) {
        const double lam = V.param_a();
        if (lam >= law.param) {
          throw CertifyError(
              "jump integral diverges: exp V with lambda >= displacement "
              "rate");
        }
        return V.value(x) * (lam / (law.param - lam));
      }
      return exp_displacement_integral(V, x, law.param);
    case DisplacementLaw::Kind::PointMass:
      return V.value(x + law.param) - V.value(x);
  }
  return 0.0;
}

double jump_diffusion_jump_part(const JumpDiffusionModel& m,
                                const LyapunovSpec& V, double x) {
  if (m.intensity == 0.0) return 0.0;
  switch (m.kernel.kind) {
    case JumpKernel::Kind::ExpDisplacement: {
      const double rate = m.kernel.rate.eval(x);
      if (!(rate > 0.0)) {
        throw CertifyError("jump rate not positive at x = " +
                           std::to_string(x));
      }
      if (V.family() == LyapunovFamily::Affine) {
        return m.intensity * V.param_a() / rate;
      }
      if (V.family() == LyapunovFamily::Exp && V.param_a() >= rate) {
        throw CertifyError(
            "jump integral diverges: exp V with lambda >= displacement "
            "rate");
      }
      return m.intensity * exp_displacement_integral(V, x, rate);
    }
    case JumpKernel::Kind::Translation:
      return m.intensity * law_integral(V, x, m.kernel.law);
  }
  return 0.0;
}

double levy_jump_part(const LevyModel& m, const LyapunovSpec& V, double x) {
  switch (m.measure.kind) {
    case LevyMeasure::Kind::FiniteCompound:
      if (m.measure.rate == 0.0) return 0.0;
      return m.measure.rate * law_integral(V, x, m.measure.law);
    case LevyMeasure::Kind::InfiniteActivity: {
      const Expr& dens = m.measure.density;
      const double vx = V.value(x);
      auto f = [&, x, vx](double z) {
        const double d = dens.eval_raw(z);
        if (d == 0.0 || !std::isfinite(d)) return 0.0;
        return (V.value(x + z) - vx) * d;
      };
      try {
        return num::integrate_half_line(f, kJumpQuadTol);
      } catch (const num::QuadratureError& e) {
        throw CertifyError(
            std::string("Levy jump integral diverges for this V: ") +
            e.what());
      }
    }
  }
  return 0.0;
}

}  // namespace

std::vector<double> default_certification_grid() {
  return num::geometric_grid(1e-3, 1e3, 512);
}

double generator_apply(const ProcessModel& model, const LyapunovSpec& V,
                       double x) {
  if (!(x > 0.0)) {
    throw std::invalid_argument("generator_apply: x must be > 0");
  }
  if (const auto* d = std::get_if<DiffusionModel>(&model)) {
    const double s = d->sigma.eval(x);
    return d->drift.eval(x) * V.d1(x) + 0.5 * s * s * V.d2(x);
  }
  if (const auto* jd = std::get_if<JumpDiffusionModel>(&model)) {
    const double s = jd->base.sigma.eval(x);
    return jd->base.drift.eval(x) * V.d1(x) + 0.5 * s * s * V.d2(x) +
           jump_diffusion_jump_part(*jd, V, x);
  }
  const auto& lv = std::get<LevyModel>(model);
  return lv.drift * V.d1(x) + 0.5 * lv.sigma * lv.sigma * V.d2(x) +
         levy_jump_part(lv, V, x);
}

RateCertificate drift_check(const ProcessModel& model, const LyapunovSpec& V,
                            const PhiSpec& phi, std::span<const double> x_grid,
                            double tolerance) {
  if (x_grid.empty()) {
    throw std::invalid_argument("drift_check: empty grid");
  }
  RateCertificate cert;
  cert.model_id = model_family_name(model);
  cert.lyapunov = V;
  cert.phi = phi;
  cert.grid.assign(x_grid.begin(), x_grid.end());
  cert.tolerance = tolerance;
  cert.worst_margin_rel = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    if (!(x > 0.0)) {
      throw std::invalid_argument("drift_check: grid points must be > 0");
    }
    const double lv = generator_apply(model, V, x);
    const double margin = lv + phi(V.value(x));
    const double rel = margin / std::max(1.0, std::abs(lv));
    if (rel > cert.worst_margin_rel) {
      cert.worst_margin_rel = rel;
      cert.worst_margin_abs = margin;
      cert.worst_x = x;
    }
  }
  cert.pass = cert.worst_margin_rel <= tolerance;
  return cert;
}

double mean_drift(const JumpDiffusionModel& model, double x) {
  if (!(x >= 0.0)) throw std::invalid_argument("mean_drift: x must be >= 0");
  double jump_mean = 0.0;
  if (model.intensity > 0.0) {
    jump_mean = model.intensity * model.kernel.mean_displacement(x);
  }
  return model.base.drift.eval(x) + jump_mean;
}

double levy_k(const LevyModel& model, double lambda) {
  if (!(lambda < model.measure.sup_lambda())) {
    throw CertifyError("levy_k: lambda must lie below the exponential "
                       "moment bound of the measure");
  }
  double jump_term = 0.0;
  switch (model.measure.kind) {
    case LevyMeasure::Kind::FiniteCompound:
      if (model.measure.rate > 0.0) {
        jump_term = model.measure.rate * model.measure.law.mgf_term(lambda);
      }
      break;
    case LevyMeasure::Kind::InfiniteActivity: {
      const Expr& dens = model.measure.density;
      auto f = [&dens, lambda](double z) {
        const double d = dens.eval_raw(z);
        if (d == 0.0 || !std::isfinite(d)) return 0.0;
        return std::expm1(lambda * z) * d;
      };
      try {
        jump_term = num::integrate_half_line(f, 1e-9);
      } catch (const num::QuadratureError& e) {
        throw CertifyError(std::string("levy_k: divergent integral: ") +
                           e.what());
      }
      break;
    }
  }
  return lambda * model.drift +
         0.5 * model.sigma * model.sigma * lambda * lambda + jump_term;
}

LambdaSearch levy_find_lambda(const LevyModel& model, double lambda_cap,
                              std::size_t grid_size) {
  const double m1 = model.measure.m1();
  if (!(model.drift < -m1)) {
    throw CertifyError(
        "levy_find_lambda: requires g < -m1 (mean drift must be negative); "
        "g = " +
        std::to_string(model.drift) + ", m1 = " + std::to_string(m1));
  }
  double hi = model.measure.sup_lambda();
  if (std::isfinite(hi)) {
    hi *= 1.0 - 1e-9;
  } else {
    hi = lambda_cap;
  }
  LambdaSearch out;
  out.grid = num::geometric_grid(hi * 1e-6, hi, grid_size);
  double best = std::numeric_limits<double>::infinity();
  double best_lambda = 0.0;
  for (double lam : out.grid) {
    const double k = levy_k(model, lam);
    if (k < best) {
      best = k;
      best_lambda = lam;
    }
  }
  if (!(best < 0.0)) {
    throw CertifyError(
        "levy_find_lambda: no grid point with k(lambda) < 0 (max scanned "
        "lambda = " +
        std::to_string(hi) + ")");
  }
  out.lambda_star = best_lambda;
  out.k_value = best;
  return out;
}

FeasibleInterval power_affine_feasible(double a, double c, double sigma,
                                       double beta) {
  if (!(a > 0.0) || !(c > 0.0) || !(sigma > 0.0)) {
    throw std::invalid_argument(
        "power_affine_feasible: a, c, sigma must be > 0");
  }
  if (!(beta > 1.0)) {
    throw std::invalid_argument("power_affine_feasible: beta must be > 1");
  }
  FeasibleInterval out;
  out.lo = c;
  out.hi = 2.0 * a / (sigma * sigma * (beta - 1.0));
  out.feasible = out.hi > c;
  out.note =
      "feasibility derived from lambda < 2a/(sigma^2(beta-1)) with "
      "lambda >= c, i.e. beta < 1 + 2a/(c sigma^2)";
  if (out.feasible) {
    const double mid = 0.5 * (out.lo + out.hi);
    out.A_mid = a * beta * mid -
                0.5 * sigma * sigma * beta * (beta - 1.0) * mid * mid;
  }
  return out;
}

PhiSpec fit_phi(const ProcessModel& model, const LyapunovSpec& V,
                PhiFamily family, std::span<const double> x_grid,
                double gamma) {
  if (x_grid.empty()) throw std::invalid_argument("fit_phi: empty grid");
  double coeff = std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    const double lv = generator_apply(model, V, x);
    double denom;
    switch (family) {
      case PhiFamily::Constant:
        denom = 1.0;
        break;
      case PhiFamily::Linear:
        denom = V.value(x);
        break;
      case PhiFamily::Power:
        denom = std::pow(V.value(x), gamma);
        break;
      default:
        throw std::invalid_argument(
            "fit_phi: family must be Constant, Linear or Power");
    }
    coeff = std::min(coeff, -lv / denom);
  }
  if (!(coeff > 0.0) || !std::isfinite(coeff)) {
    throw CertifyError(
        "fit_phi: no admissible positive coefficient on this grid (min "
        "-LV/denominator = " +
        std::to_string(coeff) + ")");
  }
  switch (family) {
    case PhiFamily::Constant:
      return PhiSpec::constant(coeff);
    case PhiFamily::Linear:
      return PhiSpec::linear(coeff);
    default:
      return PhiSpec::power(coeff, gamma);
  }
}

}  // namespace ergoline
