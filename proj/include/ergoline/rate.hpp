#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "ergoline/expr.hpp"
#include "ergoline/lyapunov.hpp"

namespace ergoline {

enum class PhiFamily { Linear, Power, Constant, Custom };

class PhiValidationError : public std::runtime_error {
 public:
  explicit PhiValidationError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Rate function phi: [1, inf) -> (0, inf), nondecreasing and concave.
/// Named families are validated analytically; a custom expression (in the
/// grammar variable, read as s) is validated on a geometric grid.
class PhiSpec {
 public:
  static PhiSpec linear(double k);                // phi(s) = k s
  static PhiSpec power(double c, double gamma);   // phi(s) = c s^gamma
  static PhiSpec constant(double k);              // phi(s) = k
  static PhiSpec custom(Expr phi_of_s);

  PhiFamily family() const noexcept { return family_; }
  double coeff() const noexcept { return coeff_; }   // k or c
  double gamma() const noexcept { return gamma_; }   // Power only
  const Expr& expr() const { return expr_; }

  /// phi(s) for s >= 1 (throws std::invalid_argument below 1).
  double operator()(double s) const;

  std::string describe() const;

 private:
  PhiSpec(PhiFamily family, double coeff, double gamma)
      : family_(family), coeff_(coeff), gamma_(gamma) {}
  PhiFamily family_;
  double coeff_ = 0.0;
  double gamma_ = 0.0;
  Expr expr_;
};

inline double phi_eval(const PhiSpec& spec, double s) { return spec(s); }

/// The integrated rate calculus: Phi(s) = int_1^s du/phi(u), Psi = Phi^{-1},
/// G(t, u) = Psi(Phi(u) + t). Closed forms for the named families, adaptive
/// quadrature (rel 1e-10) plus monotone root finding (rel 1e-12) otherwise.
class RateKernel {
 public:
  explicit RateKernel(PhiSpec phi);

  const PhiSpec& phi() const noexcept { return phi_; }
  bool closed_form() const noexcept {
    return phi_.family() != PhiFamily::Custom;
  }
  /// Phi(infinity). Always +inf for a validated (concave) phi.
  double phi_domain_sup() const noexcept {
    return std::numeric_limits<double>::infinity();
  }

  double capital_phi(double s) const;  // s >= 1
  double capital_psi(double v) const;  // v >= 0
  double G(double t, double u) const;  // t >= 0, u >= 1
  /// Always takes the generic Psi(Phi(u) + t) route, closed form or not.
  double G_generic(double t, double u) const;

 private:
  PhiSpec phi_;
};

/// Residuals of the Lemma (G) properties measured by finite differences on
/// a grid. First-derivative quantities are scaled by the local magnitude
/// of dG/dt; the concavity residual is scaled by G/u^2 so that all entries
/// are dimensionless.
struct LemmaGAudit {
  double max_pde_residual = 0.0;   // |Gt - phi(u) Gu| / scale
  double min_Gu = 0.0;             // min of Gu / max(1, |Gu|)
  double max_Guu = 0.0;            // max of Guu / max(1, G/u^2)
  double max_boundary_u_err = 0.0; // |G(0,u) - u| / u
  double max_boundary_t_err = 0.0; // |G(t,1) - Psi(t)| / max(1, Psi(t))
  bool pass(double pde_tol = 1e-6, double mono_tol = 1e-8,
            double conc_tol = 1e-8, double boundary_tol = 1e-10) const {
    return max_pde_residual < pde_tol && min_Gu >= -mono_tol &&
           max_Guu <= conc_tol && max_boundary_u_err < boundary_tol &&
           max_boundary_t_err < boundary_tol;
  }
};

LemmaGAudit lemma_G_audit(const RateKernel& kernel,
                          std::span<const double> t_grid,
                          std::span<const double> u_grid);

/// Conjugate exponent pair p, q > 1 with 1/p + 1/q = 1, for the Young
/// functions H(x) = x^p/p, K(y) = y^q/q.
struct YoungPair {
  double p;
  double q;
  explicit YoungPair(double p_);
};

/// Checks the inverse Young inequality (px)^{1/p} (qy)^{1/q} <= x + y
/// with additive slack 1e-12.
bool young_check(const YoungPair& pair, double x, double y);

enum class DecompositionFamily {
  ExponentialExact,  // h = e^{kt}, U = V
  PowerYoung,        // h = (c p a)^{1/(a p)} t^{1/(a p)}, U = q^{1/(q a)} V^{1/q}
  ConstantYoung,     // h = (p k t)^{1/p}, U = (q V)^{1/q}
  TotalVariation,    // h = Psi, U = 1
};

class DecompositionAuditError : public std::runtime_error {
 public:
  explicit DecompositionAuditError(const std::string& message)
      : std::runtime_error(message) {}
};

/// A factorization h(t) U(x) <= G(t, V(x)), grid-audited on construction.
class ProductDecomposition {
 public:
  double h(double t) const;
  double U(double x) const;
  DecompositionFamily family() const noexcept { return family_; }
  const LyapunovSpec& lyapunov() const noexcept { return V_; }
  const RateKernel& kernel() const noexcept { return *kernel_; }
  /// Smallest relative slack (G - hU)/max(1, G) seen on the audit grid.
  double audit_slack() const noexcept { return audit_slack_; }
  std::string describe() const;

 private:
  friend ProductDecomposition decompose(const RateKernel&,
                                        const LyapunovSpec&,
                                        const YoungPair&, double, double);
  friend ProductDecomposition tv_decomposition(const RateKernel&,
                                               const LyapunovSpec&, double,
                                               double);
  ProductDecomposition(DecompositionFamily family, LyapunovSpec v,
                       RateKernel kernel, double p, double q)
      : family_(family),
        V_(v),
        kernel_(std::make_shared<RateKernel>(std::move(kernel))),
        p_(p),
        q_(q) {}

  DecompositionFamily family_;
  LyapunovSpec V_;
  std::shared_ptr<const RateKernel> kernel_;
  double p_ = 0.0;
  double q_ = 0.0;
  double audit_slack_ = 0.0;
};

/// Builds the product decomposition for the kernel family (exact for
/// Linear, Young split for Power and Constant) and re-audits
/// h(t) U(x) <= G(t, V(x)) on a 50x50 grid over [0, t_max] x [0, x_max].
/// Throws DecompositionAuditError if the audit fails and
/// std::invalid_argument for unsupported (Custom) kernels.
ProductDecomposition decompose(const RateKernel& kernel,
                               const LyapunovSpec& V, const YoungPair& pair,
                               double t_max = 20.0, double x_max = 100.0);

/// Total-variation choice U = 1, h = Psi (also audited).
ProductDecomposition tv_decomposition(const RateKernel& kernel,
                                      const LyapunovSpec& V,
                                      double t_max = 20.0,
                                      double x_max = 100.0);

}  // namespace ergoline
