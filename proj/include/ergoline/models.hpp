#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ergoline/expr.hpp"
#include "ergoline/rng.hpp"

namespace ergoline {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Reflected diffusion dZ = g(Z) dt + sigma(Z) dW, pushed back into
/// [0, inf) at the origin.
struct DiffusionModel {
  Expr drift;  // g(x)
  Expr sigma;  // sigma(x) >= 0
};

/// Nonnegative displacement law with an explicit inverse CDF, so that two
/// coupled copies can consume the same uniform draw.
struct DisplacementLaw {
  enum class Kind { Exponential, PointMass };
  Kind kind = Kind::Exponential;
  double param = 1.0;  // rate (Exponential) or the point (PointMass)

  static DisplacementLaw exponential(double rate);
  static DisplacementLaw point_mass(double value);

  double mean() const;
  double icdf(double u) const;
  /// E[e^{lambda Z}] - 1; throws ModelError when divergent.
  double mgf_term(double lambda) const;
  /// Supremum of lambda for which e^{lambda Z} is integrable.
  double sup_lambda() const;
};

/// State-dependent jump displacement kernel. Both variants jump to the
/// right, preserving stochastic ordering.
struct JumpKernel {
  enum class Kind {
    ExpDisplacement,  // displacement ~ Exp(rate(x))
    Translation,      // displacement ~ law, independent of the state
  };
  Kind kind = Kind::Translation;
  Expr rate;            // ExpDisplacement: rate(x) > 0
  DisplacementLaw law;  // Translation

  static JumpKernel exp_displacement(Expr rate);
  static JumpKernel translation(DisplacementLaw law);

  /// Displacement from state x fed by the uniform u (inverse CDF).
  double sample(double x, double u) const;
  double mean_displacement(double x) const;
};

struct JumpDiffusionModel {
  DiffusionModel base;
  double intensity = 0.0;  // M = total kernel mass, jumps per unit time
  JumpKernel kernel;
};

/// Spectral measure of a nondecreasing pure-jump component.
struct LevyMeasure {
  enum class Kind { FiniteCompound, InfiniteActivity };
  Kind kind = Kind::FiniteCompound;
  // FiniteCompound: mu = rate * law
  double rate = 0.0;
  DisplacementLaw law;
  // InfiniteActivity: density expression in the displacement variable
  Expr density;
  std::optional<double> lambda0;  // exp-moment bound, when known

  static LevyMeasure compound(double rate, DisplacementLaw law);
  static LevyMeasure infinite_activity(Expr density,
                                       std::optional<double> lambda0);

  /// int z mu(dz); throws ModelError if divergent.
  double m1() const;
  /// mu([eps, inf)) - the intensity of jumps retained above the cutoff.
  double tail_mass(double eps) const;
  /// int_0^eps z mu(dz) - mean drift of the discarded small jumps.
  double small_jump_mean(double eps) const;
  double sup_lambda() const;
};

struct LevyModel {
  double drift = 0.0;
  double sigma = 0.0;
  LevyMeasure measure;
};

using ProcessModel = std::variant<DiffusionModel, JumpDiffusionModel, LevyModel>;

std::string model_family_name(const ProcessModel& model);

struct SimConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t n_paths = 1000;
  std::uint64_t master_seed = 0;
  double small_jump_cutoff = 1e-2;  // Levy infinite-activity only
  unsigned threads = 1;

  std::size_t n_steps() const;
  void validate() const;
};

struct ReflectResult {
  double state;   // max(0, x + increment)
  double pushed;  // the Skorokhod push: max(0, -(x + increment))
};

/// Discrete Skorokhod reflection step.
ReflectResult reflect_step(double x, double increment);

/// Euler-Maruyama increment g(x) dt + sigma(x) sqrt(dt) gauss.
double diffusion_increment(const DiffusionModel& m, double x, double dt,
                           double gauss);

/// Poisson(M dt) jump displacements, each sampled from the kernel at the
/// pre-jump state, updated sequentially within the step.
std::vector<double> jump_events(const JumpDiffusionModel& m, double x,
                                double dt, PathRng& rng);

/// One-step simulation kernel for any model, with precomputed tables for
/// Levy measures (inverse CDF of the retained-jump law, compensator).
/// step_pair advances two coupled copies with shared randomness.
class Stepper {
 public:
  Stepper(const ProcessModel& model, const SimConfig& config);

  double step_one(double x, PathRng& rng) const;
  void step_pair(double& x1, double& x2, PathRng& rng) const;

  /// Raw Levy increment over one step: g dt + sigma sqrt(dt) gauss +
  /// retained jumps + small-jump compensator (Levy models only).
  double levy_increment(PathRng& rng) const;

  double dt() const noexcept { return dt_; }
  /// Poisson intensity of sampled jump events (0 for plain diffusions).
  double event_rate() const noexcept { return event_rate_; }
  double compensator_per_step() const noexcept { return compensator_; }
  /// Inverse CDF of the retained Levy jump law (tabulated for
  /// infinite-activity measures).
  double sample_levy_jump(double u) const;

 private:
  enum class Kind { Diffusion, JumpDiffusion, Levy };
  Kind kind_;
  ProcessModel model_;  // by value: a Stepper owns its model snapshot
  double dt_;
  double sqrt_dt_;
  double event_rate_ = 0.0;
  double compensator_ = 0.0;
  // tabulated inverse CDF for infinite-activity jump laws
  std::vector<double> icdf_u_;
  std::vector<double> icdf_z_;
  bool tabulated_ = false;

  double increment_at(double x, double gauss, double jump_total) const;
};

/// Convenience single-step entry point (constructs a Stepper internally;
/// prefer a Stepper instance in loops).
double step(const ProcessModel& model, double x, double dt, PathRng& rng);

}  // namespace ergoline
