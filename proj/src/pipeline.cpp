#include "ergoline/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "ergoline/report_io.hpp"
#include "ergoline/rng.hpp"

namespace ergoline {
namespace {

namespace fs = std::filesystem;

OutputMeta meta_for(const ExperimentConfig& cfg) {
  return OutputMeta{cfg.config_hash};
}

PhiSpec phi_from_config(const ExperimentConfig& cfg) {
  if (cfg.phi.has_value()) return *cfg.phi;
  return fit_phi(cfg.model, cfg.lyapunov, cfg.fit_family, cfg.cert_grid,
                 cfg.fit_gamma);
}

std::string certificate_extras(const ExperimentConfig& cfg) {
  std::string notes;
  if (!cfg.phi.has_value()) {
    notes += "phi fitted on the certification grid; ";
  }
  if (cfg.lyapunov.family() == LyapunovFamily::PowerAffine) {
    notes +=
        "power-affine feasibility follows the derived bound "
        "beta < 1 + 2a/(c sigma^2), not the printed form; ";
  }
  notes += "positivity (irreducibility) assumed, not verified";
  return notes;
}

}  // namespace

RateCertificate certify_from_config(const ExperimentConfig& cfg) {
  const PhiSpec phi = phi_from_config(cfg);
  RateCertificate cert =
      drift_check(cfg.model, cfg.lyapunov, phi, cfg.cert_grid);
  cert.notes = certificate_extras(cfg);
  return cert;
}

ProductDecomposition decomposition_from_config(const ExperimentConfig& cfg,
                                               const PhiSpec& phi) {
  const RateKernel kernel(phi);
  if (cfg.norm == NormChoice::TotalVariation) {
    return tv_decomposition(kernel, cfg.lyapunov);
  }
  return decompose(kernel, cfg.lyapunov, YoungPair(cfg.young_p));
}

double bound_numerator(const ExperimentConfig& cfg, const LyapunovSpec& V) {
  if (cfg.law1.is_point() && cfg.law2.is_point()) {
    return 2.0 * V.value(cfg.law2.param);
  }
  // Reproduce the comonotone initial draws of the coupled run and
  // estimate 2 (rho1 v rho2, V) from them.
  std::vector<double> init1(cfg.sim.n_paths);
  std::vector<double> init2(cfg.sim.n_paths);
  for (std::size_t p = 0; p < cfg.sim.n_paths; ++p) {
    PathRng rng(cfg.sim.master_seed, p);
    const double u = rng.uniform();
    init1[p] = cfg.law1.icdf(u);
    init2[p] = cfg.law2.icdf(u);
  }
  return 2.0 * stochastic_max_expectation(init1, init2, V);
}

PipelineResult run_certify(const ExperimentConfig& cfg,
                           const fs::path& out_dir) {
  RateCertificate cert;
  try {
    cert = certify_from_config(cfg);
  } catch (const CertifyError& e) {
    return {1, std::string("certificate failed: ") + e.what()};
  }
  std::string body = certificate_json(cert, meta_for(cfg));
  // jump-diffusions additionally report the average drift table
  if (const auto* jd = std::get_if<JumpDiffusionModel>(&cfg.model)) {
    std::string table = "# " + std::string(kToolVersion) + "\n# config " +
                        cfg.config_hash + "\nx,mean_drift\n";
    for (double x : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0}) {
      table += format_double(x) + "," + format_double(mean_drift(*jd, x)) +
               "\n";
    }
    write_text_file(out_dir / "mean_drift.csv", table);
  }
  write_text_file(out_dir / "certificate.json", body);
  if (!cert.pass) {
    return {1, "certificate FAILED: worst relative margin " +
                   format_double(cert.worst_margin_rel) + " at x = " +
                   format_double(cert.worst_x)};
  }
  return {0, "certificate PASSED: worst relative margin " +
                 format_double(cert.worst_margin_rel)};
}

PipelineResult run_bound(const ExperimentConfig& cfg,
                         const fs::path& out_dir) {
  const PhiSpec phi = phi_from_config(cfg);
  const ProductDecomposition decomp = decomposition_from_config(cfg, phi);
  const double numerator = bound_numerator(cfg, cfg.lyapunov);
  std::vector<double> bounds;
  bounds.reserve(cfg.checkpoints.size());
  for (double t : cfg.checkpoints) {
    const double h = decomp.h(t);
    bounds.push_back(h > 0.0 ? numerator / h
                             : std::numeric_limits<double>::infinity());
  }
  write_text_file(out_dir / "bound.csv",
                  bound_csv(cfg.checkpoints, bounds, meta_for(cfg)));
  return {0, "bound curve written (" + decomp.describe() + ")"};
}

PipelineResult run_verify(const ExperimentConfig& cfg,
                          const fs::path& out_dir) {
  RateCertificate cert;
  try {
    cert = certify_from_config(cfg);
  } catch (const CertifyError& e) {
    return {1, std::string("certificate failed: ") + e.what()};
  }
  write_text_file(out_dir / "certificate.json",
                  certificate_json(cert, meta_for(cfg)));
  if (!cert.pass) {
    return {1, "certificate FAILED: worst relative margin " +
                   format_double(cert.worst_margin_rel) +
                   "; not running the bound verification"};
  }
  const ProductDecomposition decomp =
      decomposition_from_config(cfg, cert.phi);
  const double numerator = bound_numerator(cfg, cfg.lyapunov);
  const BoundReport report =
      verify_bound(cfg.model, cert, decomp, cfg.law1, cfg.law2, cfg.sim,
                   cfg.checkpoints, numerator);

  SupermartingaleAudit audit;
  const SupermartingaleAudit* audit_ptr = nullptr;
  if (cfg.audit_supermartingale && cfg.law2.is_point()) {
    const RateKernel kernel(cert.phi);
    std::vector<double> grid = cfg.checkpoints;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty() || grid.front() > 0.0) {
      grid.insert(grid.begin(), 0.0);
    }
    audit = supermartingale_audit(cfg.model, cfg.lyapunov, kernel,
                                  cfg.law2.param, cfg.sim, grid);
    audit_ptr = &audit;
  }

  const OutputMeta meta = meta_for(cfg);
  write_text_file(out_dir / "verify.csv", verify_csv(report, meta));
  write_text_file(out_dir / "verify.json",
                  verify_json(report, audit_ptr, meta));
  write_text_file(out_dir / "verify.svg", verify_svg(report, meta));

  switch (report.status) {
    case VerifyStatus::Pass:
      return {0, "bound verification PASS"};
    case VerifyStatus::Fail:
      return {1, "bound verification FAIL: empirical CI exceeds the bound"};
    case VerifyStatus::Inconclusive:
      return {3, "bound verification INCONCLUSIVE: run is tainted (" +
                     std::to_string(report.order_violations) +
                     " order violations)"};
  }
  return {3, "unreachable"};
}

PipelineResult run_stationary(const ExperimentConfig& cfg,
                              const fs::path& out_dir) {
  const EmpiricalStationary est =
      stationary_estimate(cfg.model, cfg.sim, cfg.lyapunov);
  const OutputMeta meta = meta_for(cfg);
  write_text_file(out_dir / "stationary.csv",
                  stationary_csv(histogram(est.states, 50), meta));
  write_text_file(out_dir / "stationary.json",
                  stationary_json(est, cfg.lyapunov, meta));
  std::string msg = "stationary estimate: mean " + format_double(est.mean_x) +
                    " +- " + format_double(est.se_x) + ", (pi, V) " +
                    format_double(est.pi_v) + " +- " +
                    format_double(est.se_pi_v);
  if (est.v_moment_diverging) {
    msg += " [WARNING: V-moment running mean not converging]";
  }
  return {0, msg};
}

}  // namespace ergoline
