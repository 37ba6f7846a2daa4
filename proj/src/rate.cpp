#include "ergoline/rate.hpp"

#include <cmath>

#include "ergoline/numerics.hpp"

namespace ergoline {
namespace {

constexpr double kQuadTol = 1e-10;
constexpr double kRootTol = 1e-12;

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

PhiSpec PhiSpec::linear(double k) {
  require(k > 0.0, "phi linear: k must be > 0");
  return {PhiFamily::Linear, k, 0.0};
}

PhiSpec PhiSpec::power(double c, double gamma) {
  require(c > 0.0, "phi power: c must be > 0");
  require(gamma > 0.0 && gamma < 1.0, "phi power: gamma must be in (0, 1)");
  return {PhiFamily::Power, c, gamma};
}

PhiSpec PhiSpec::constant(double k) {
  require(k > 0.0, "phi constant: k must be > 0");
  return {PhiFamily::Constant, k, 0.0};
}

PhiSpec PhiSpec::custom(Expr phi_of_s) {
  PhiSpec spec(PhiFamily::Custom, 0.0, 0.0);
  spec.expr_ = std::move(phi_of_s);
  // Validate positive, nondecreasing, concave on a geometric grid.
  const auto grid = num::geometric_grid(1.0, 1e6, 241);
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double v = spec.expr_.eval(grid[i]);
    if (!(v > 0.0)) {
      throw PhiValidationError("custom phi must be positive on [1, 1e6]");
    }
    vals[i] = v;
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double slope_tol = 1e-9 * std::max(1.0, std::abs(vals[i]));
    if (vals[i + 1] < vals[i] - slope_tol) {
      throw PhiValidationError("custom phi must be nondecreasing");
    }
  }
  // Concavity via slopes on the (irregular) grid: difference quotients
  // must be nonincreasing.
  for (std::size_t i = 0; i + 2 < grid.size(); ++i) {
    const double s1 = (vals[i + 1] - vals[i]) / (grid[i + 1] - grid[i]);
    const double s2 =
        (vals[i + 2] - vals[i + 1]) / (grid[i + 2] - grid[i + 1]);
    const double tol =
        1e-7 * std::max({1.0, std::abs(s1), std::abs(s2)});
    if (s2 > s1 + tol) {
      throw PhiValidationError("custom phi must be concave");
    }
  }
  return spec;
}

double PhiSpec::operator()(double s) const {
  if (!(s >= 1.0)) throw std::invalid_argument("phi: s must be >= 1");
  switch (family_) {
    case PhiFamily::Linear:
      return coeff_ * s;
    case PhiFamily::Power:
      return coeff_ * std::pow(s, gamma_);
    case PhiFamily::Constant:
      return coeff_;
    case PhiFamily::Custom:
      return expr_.eval(s);
  }
  return 0.0;
}

std::string PhiSpec::describe() const {
  switch (family_) {
    case PhiFamily::Linear:
      return "phi(s) = " + std::to_string(coeff_) + "*s";
    case PhiFamily::Power:
      return "phi(s) = " + std::to_string(coeff_) + "*s^" +
             std::to_string(gamma_);
    case PhiFamily::Constant:
      return "phi(s) = " + std::to_string(coeff_);
    case PhiFamily::Custom:
      return "phi(s) = " + expr_.str();
  }
  return {};
}

RateKernel::RateKernel(PhiSpec phi) : phi_(std::move(phi)) {}

double RateKernel::capital_phi(double s) const {
  if (!(s >= 1.0)) throw std::invalid_argument("capital_phi: s must be >= 1");
  switch (phi_.family()) {
    case PhiFamily::Linear:
      return std::log(s) / phi_.coeff();
    case PhiFamily::Power: {
      const double alpha = 1.0 - phi_.gamma();
      return (std::pow(s, alpha) - 1.0) / (phi_.coeff() * alpha);
    }
    case PhiFamily::Constant:
      return (s - 1.0) / phi_.coeff();
    case PhiFamily::Custom: {
      const Expr& e = phi_.expr();
      return num::integrate([&e](double u) { return 1.0 / e.eval_raw(u); },
                            1.0, s, kQuadTol);
    }
  }
  return 0.0;
}

double RateKernel::capital_psi(double v) const {
  if (!(v >= 0.0)) {
    throw std::invalid_argument("capital_psi: v must be >= 0");
  }
  switch (phi_.family()) {
    case PhiFamily::Linear:
      return std::exp(phi_.coeff() * v);
    case PhiFamily::Power: {
      const double alpha = 1.0 - phi_.gamma();
      return std::pow(phi_.coeff() * alpha * v + 1.0, 1.0 / alpha);
    }
    case PhiFamily::Constant:
      return phi_.coeff() * v + 1.0;
    case PhiFamily::Custom: {
      if (v == 0.0) return 1.0;
      // bracket the root of Phi(s) = v by doubling, then invert
      double hi = 2.0;
      double phi_hi = capital_phi(hi);
      int guard = 0;
      while (phi_hi < v) {
        hi *= 2.0;
        if (++guard > 1100 || !std::isfinite(hi)) {
          throw num::RootFindError("capital_psi: failed to bracket inverse");
        }
        phi_hi = capital_phi(hi);
      }
      auto f = [this, v](double s) { return capital_phi(s) - v; };
      return num::find_root_increasing(f, 1.0, hi, kRootTol);
    }
  }
  return 0.0;
}

double RateKernel::G(double t, double u) const {
  if (!(t >= 0.0)) throw std::invalid_argument("G: t must be >= 0");
  if (!(u >= 1.0)) throw std::invalid_argument("G: u must be >= 1");
  switch (phi_.family()) {
    case PhiFamily::Linear:
      return u * std::exp(phi_.coeff() * t);
    case PhiFamily::Power: {
      const double alpha = 1.0 - phi_.gamma();
      return std::pow(phi_.coeff() * alpha * t + std::pow(u, alpha),
                      1.0 / alpha);
    }
    case PhiFamily::Constant:
      return u + phi_.coeff() * t;
    case PhiFamily::Custom:
      return G_generic(t, u);
  }
  return 0.0;
}

double RateKernel::G_generic(double t, double u) const {
  return capital_psi(capital_phi(u) + t);
}

namespace {

// Second-order first derivative: central where the stencil stays inside
// [lo, inf), one-sided at the boundary.
double fd1(const std::function<double(double)>& f, double v, double h,
           double lo) {
  if (v - h >= lo) {
    return (f(v + h) - f(v - h)) / (2.0 * h);
  }
  return (-3.0 * f(v) + 4.0 * f(v + h) - f(v + 2.0 * h)) / (2.0 * h);
}

double fd2(const std::function<double(double)>& f, double v, double h,
           double lo) {
  if (v - h >= lo) {
    return (f(v + h) - 2.0 * f(v) + f(v - h)) / (h * h);
  }
  return (f(v) - 2.0 * f(v + h) + f(v + 2.0 * h)) / (h * h);
}

}  // namespace

LemmaGAudit lemma_G_audit(const RateKernel& kernel,
                          std::span<const double> t_grid,
                          std::span<const double> u_grid) {
  LemmaGAudit audit;
  audit.min_Gu = std::numeric_limits<double>::infinity();
  audit.max_Guu = -std::numeric_limits<double>::infinity();
  const double d1 = 1e-4;
  const double d2 = 1e-3;
  for (double t : t_grid) {
    if (!(t >= 0.0)) throw std::invalid_argument("lemma_G_audit: t < 0");
    // boundary identity G(t, 1) = Psi(t)
    const double psi_t = kernel.capital_psi(t);
    const double bt =
        std::abs(kernel.G(t, 1.0) - psi_t) / std::max(1.0, psi_t);
    audit.max_boundary_t_err = std::max(audit.max_boundary_t_err, bt);
    for (double u : u_grid) {
      if (!(u >= 1.0)) throw std::invalid_argument("lemma_G_audit: u < 1");
      const double ht = d1 * std::max(1.0, t);
      const double hu = d1 * std::max(1.0, u);
      const double hu2 = d2 * std::max(1.0, u);
      auto g_of_t = [&](double tt) { return kernel.G(tt, u); };
      auto g_of_u = [&](double uu) { return kernel.G(t, uu); };
      const double Gt = fd1(g_of_t, t, ht, 0.0);
      const double Gu = fd1(g_of_u, u, hu, 1.0);
      const double Guu = fd2(g_of_u, u, hu2, 1.0);
      const double phi_u = kernel.phi()(u);
      const double scale = std::max({1.0, std::abs(Gt), std::abs(phi_u * Gu)});
      audit.max_pde_residual = std::max(
          audit.max_pde_residual, std::abs(Gt - phi_u * Gu) / scale);
      audit.min_Gu =
          std::min(audit.min_Gu, Gu / std::max(1.0, std::abs(Gu)));
      const double uhat = std::max(1.0, u);
      const double conc_scale =
          std::max(1.0, kernel.G(t, u) / (uhat * uhat));
      audit.max_Guu = std::max(audit.max_Guu, Guu / conc_scale);
    }
  }
  for (double u : u_grid) {
    const double bu = std::abs(kernel.G(0.0, u) - u) / u;
    audit.max_boundary_u_err = std::max(audit.max_boundary_u_err, bu);
  }
  return audit;
}

YoungPair::YoungPair(double p_) : p(p_), q(0.0) {
  if (!(p_ > 1.0)) throw std::invalid_argument("YoungPair: p must be > 1");
  q = p_ / (p_ - 1.0);
}

bool young_check(const YoungPair& pair, double x, double y) {
  if (!(x >= 0.0) || !(y >= 0.0)) {
    throw std::invalid_argument("young_check: x, y must be >= 0");
  }
  const double lhs =
      std::pow(pair.p * x, 1.0 / pair.p) * std::pow(pair.q * y, 1.0 / pair.q);
  return lhs <= x + y + 1e-12;
}

double ProductDecomposition::h(double t) const {
  switch (family_) {
    case DecompositionFamily::ExponentialExact:
      return std::exp(kernel_->phi().coeff() * t);
    case DecompositionFamily::PowerYoung: {
      const double c = kernel_->phi().coeff();
      const double alpha = 1.0 - kernel_->phi().gamma();
      return std::pow(c * p_ * alpha, 1.0 / (alpha * p_)) *
             std::pow(t, 1.0 / (alpha * p_));
    }
    case DecompositionFamily::ConstantYoung:
      return std::pow(p_ * kernel_->phi().coeff() * t, 1.0 / p_);
    case DecompositionFamily::TotalVariation:
      return kernel_->capital_psi(t);
  }
  return 0.0;
}

double ProductDecomposition::U(double x) const {
  switch (family_) {
    case DecompositionFamily::ExponentialExact:
      return V_.value(x);
    case DecompositionFamily::PowerYoung: {
      const double alpha = 1.0 - kernel_->phi().gamma();
      return std::pow(q_, 1.0 / (q_ * alpha)) *
             std::pow(V_.value(x), 1.0 / q_);
    }
    case DecompositionFamily::ConstantYoung:
      return std::pow(q_ * V_.value(x), 1.0 / q_);
    case DecompositionFamily::TotalVariation:
      return 1.0;
  }
  return 0.0;
}

std::string ProductDecomposition::describe() const {
  switch (family_) {
    case DecompositionFamily::ExponentialExact:
      return "exponential-exact: h(t) = e^{kt}, U = V";
    case DecompositionFamily::PowerYoung:
      return "power-young (p = " + std::to_string(p_) + ")";
    case DecompositionFamily::ConstantYoung:
      return "constant-young (p = " + std::to_string(p_) + ")";
    case DecompositionFamily::TotalVariation:
      return "total-variation: h = Psi, U = 1";
  }
  return {};
}

namespace {

double audit_decomposition(const ProductDecomposition& d, double t_max,
                           double x_max) {
  const auto ts = num::linear_grid(0.0, t_max, 50);
  const auto xs = num::linear_grid(0.0, x_max, 50);
  double min_slack = std::numeric_limits<double>::infinity();
  for (double t : ts) {
    const double ht = d.h(t);
    for (double x : xs) {
      const double g = d.kernel().G(t, d.lyapunov().value(x));
      const double slack = (g - ht * d.U(x)) / std::max(1.0, g);
      min_slack = std::min(min_slack, slack);
    }
  }
  if (!(min_slack >= -1e-9)) {
    throw DecompositionAuditError(
        "decomposition audit failed: h(t)U(x) > G(t, V(x)) on the grid, "
        "worst relative slack " +
        std::to_string(min_slack));
  }
  return min_slack;
}

}  // namespace

ProductDecomposition decompose(const RateKernel& kernel,
                               const LyapunovSpec& V, const YoungPair& pair,
                               double t_max, double x_max) {
  DecompositionFamily family;
  switch (kernel.phi().family()) {
    case PhiFamily::Linear:
      family = DecompositionFamily::ExponentialExact;
      break;
    case PhiFamily::Power:
      family = DecompositionFamily::PowerYoung;
      break;
    case PhiFamily::Constant:
      family = DecompositionFamily::ConstantYoung;
      break;
    default:
      throw std::invalid_argument(
          "decompose: unsupported kernel family (custom phi has no "
          "product decomposition)");
  }
  ProductDecomposition d(family, V, kernel, pair.p, pair.q);
  d.audit_slack_ = audit_decomposition(d, t_max, x_max);
  return d;
}

ProductDecomposition tv_decomposition(const RateKernel& kernel,
                                      const LyapunovSpec& V, double t_max,
                                      double x_max) {
  ProductDecomposition d(DecompositionFamily::TotalVariation, V, kernel, 1.0,
                         1.0);
  d.audit_slack_ = audit_decomposition(d, t_max, x_max);
  return d;
}

}  // namespace ergoline
