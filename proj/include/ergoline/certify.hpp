#pragma once

#include <span>
#include <string>
#include <vector>

#include "ergoline/lyapunov.hpp"
#include "ergoline/models.hpp"
#include "ergoline/rate.hpp"

namespace ergoline {

class CertifyError : public std::runtime_error {
 public:
  explicit CertifyError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Machine-checked record that LV(x) <= -phi(V(x)) holds on the audit grid.
/// The margin at x is LV(x) + phi(V(x)); pass means the worst margin,
/// relative to max(1, |LV|), stays below the tolerance.
struct RateCertificate {
  std::string model_id;
  LyapunovSpec lyapunov = LyapunovSpec::affine(1.0);
  PhiSpec phi = PhiSpec::constant(1.0);
  std::vector<double> grid;
  double worst_margin_rel = 0.0;
  double worst_margin_abs = 0.0;
  double worst_x = 0.0;
  double tolerance = 1e-9;
  bool pass = false;
  /// Positivity (irreducibility) is assumed, not verified; see the paper
  /// trail in the project notes.
  bool positivity_assumed = true;
  std::string notes;
};

/// Default certification grid: 512 geometric points on [1e-3, 1e3].
std::vector<double> default_certification_grid();

/// Applies the generator of the model to V at x > 0:
///   diffusions        g V' + sigma^2 V''/2
///   jump-diffusions   + M * E[V(x + Z_x) - V(x)]
///   Levy              g V' + sigma^2 V''/2 + int [V(x+z) - V(x)] mu(dz)
/// Jump integrals use closed forms where available (exponential
/// displacement against affine V, exponential measures against exp V) and
/// adaptive quadrature (rel 1e-8) otherwise. Throws CertifyError when the
/// integral diverges for the given V.
double generator_apply(const ProcessModel& model, const LyapunovSpec& V,
                       double x);

RateCertificate drift_check(const ProcessModel& model, const LyapunovSpec& V,
                            const PhiSpec& phi, std::span<const double> x_grid,
                            double tolerance = 1e-9);

/// Average drift m(x) = g(x) + M E[Z_x] of a jump-diffusion.
double mean_drift(const JumpDiffusionModel& model, double x);

/// Levy exponent coefficient k(lambda) = lambda g + sigma^2 lambda^2 / 2
/// + int (e^{lambda z} - 1) mu(dz); defined for lambda below the measure's
/// exponential-moment bound.
double levy_k(const LevyModel& model, double lambda);

struct LambdaSearch {
  double lambda_star = 0.0;
  double k_value = 0.0;
  std::vector<double> grid;  // the lambdas scanned
};

/// Scans a geometric lambda grid in (0, lambda0) for the minimizer of k;
/// requires g < -m1 and a negative minimum (both reported via
/// CertifyError otherwise).
LambdaSearch levy_find_lambda(const LevyModel& model, double lambda_cap = 50.0,
                              std::size_t grid_size = 256);

struct FeasibleInterval {
  bool feasible = false;
  double lo = 0.0;  // = c
  double hi = 0.0;  // = 2a / (sigma^2 (beta - 1)), exclusive
  double A_mid = 0.0;
  std::string note;
};

/// Feasible lambda interval [c, 2a/(sigma^2(beta-1))) for the
/// power-affine Lyapunov family, nonempty iff beta < 1 + 2a/(c sigma^2).
FeasibleInterval power_affine_feasible(double a, double c, double sigma,
                                       double beta);

/// Largest coefficient for the requested phi family such that
/// LV(x) <= -phi(V(x)) on the grid. gamma is required for the Power
/// family and ignored otherwise. Throws CertifyError when no positive
/// coefficient is admissible.
PhiSpec fit_phi(const ProcessModel& model, const LyapunovSpec& V,
                PhiFamily family, std::span<const double> x_grid,
                double gamma = 0.5);

}  // namespace ergoline
