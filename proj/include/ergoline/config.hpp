#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ergoline/coupling.hpp"
#include "ergoline/lyapunov.hpp"
#include "ergoline/models.hpp"
#include "ergoline/rate.hpp"

namespace ergoline {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message)
      : std::runtime_error(message) {}
};

enum class NormChoice { UNorm, TotalVariation };

/// Parsed experiment description. The JSON schema is documented in the
/// README; expressions use the grammar of the expr module (the variable
/// is always spelled `x`, read as the state, the displacement, or phi's
/// argument depending on the field).
struct ExperimentConfig {
  ProcessModel model;
  std::string model_tag;
  LyapunovSpec lyapunov = LyapunovSpec::affine(1.0);
  std::optional<PhiSpec> phi;  // empty means "fit"
  PhiFamily fit_family = PhiFamily::Power;
  double fit_gamma = 0.5;
  double young_p = 2.0;
  NormChoice norm = NormChoice::UNorm;
  InitialLaw law1 = InitialLaw::point(0.0);
  InitialLaw law2 = InitialLaw::point(0.0);
  SimConfig sim;
  std::vector<double> checkpoints;
  std::vector<double> cert_grid;  // certification grid
  bool audit_supermartingale = false;
  std::string output_dir = "out";
  std::string config_hash;

  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_file(const std::filesystem::path& path);
};

}  // namespace ergoline
