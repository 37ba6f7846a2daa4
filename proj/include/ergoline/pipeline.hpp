#pragma once

#include <filesystem>
#include <string>

#include "ergoline/config.hpp"
#include "ergoline/estimators.hpp"

namespace ergoline {

struct PipelineResult {
  int exit_code = 0;
  std::string message;
};

/// Certificate for the configured (model, V, phi) triple; fits phi first
/// when the config says "fit". Throws CertifyError when no admissible
/// coefficient exists.
RateCertificate certify_from_config(const ExperimentConfig& cfg);

/// Product decomposition selected by the config norm: the Young/exact
/// factorization for "U", h = Psi and U = 1 for "tv".
ProductDecomposition decomposition_from_config(const ExperimentConfig& cfg,
                                               const PhiSpec& phi);

PipelineResult run_certify(const ExperimentConfig& cfg,
                           const std::filesystem::path& out_dir);
PipelineResult run_bound(const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir);
PipelineResult run_verify(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir);
PipelineResult run_stationary(const ExperimentConfig& cfg,
                              const std::filesystem::path& out_dir);

/// Theorem 1(b) numerator: 2 (rho1 v rho2, V) estimated from the
/// comonotone initial draws the coupled run will use (2 V(x2) for point
/// starts).
double bound_numerator(const ExperimentConfig& cfg, const LyapunovSpec& V);

}  // namespace ergoline
