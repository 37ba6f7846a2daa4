#include "ergoline/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ergoline/certify.hpp"
#include "ergoline/report_io.hpp"

namespace ergoline {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

const json& need(const json& j, const char* key, const char* ctx) {
  auto it = j.find(key);
  if (it == j.end()) {
    fail(std::string(ctx) + ": missing required key '" + key + "'");
  }
  return *it;
}

double need_number(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) {
    fail(std::string(ctx) + ": '" + key + "' must be a number");
  }
  return v.get<double>();
}

std::string need_string(const json& j, const char* key, const char* ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_string()) {
    fail(std::string(ctx) + ": '" + key + "' must be a string");
  }
  return v.get<std::string>();
}

Expr parse_expr_field(const json& j, const char* key, const char* ctx) {
  const std::string src = need_string(j, key, ctx);
  try {
    return Expr::parse(src);
  } catch (const ParseError& e) {
    fail(std::string(ctx) + ": '" + key + "' does not parse: " + e.what());
  }
}

DisplacementLaw parse_law(const json& j, const char* ctx) {
  const std::string type = need_string(j, "type", ctx);
  try {
    if (type == "exponential") {
      return DisplacementLaw::exponential(need_number(j, "rate", ctx));
    }
    if (type == "point") {
      return DisplacementLaw::point_mass(need_number(j, "value", ctx));
    }
  } catch (const ModelError& e) {
    fail(std::string(ctx) + ": " + e.what());
  }
  fail(std::string(ctx) + ": unknown displacement law '" + type +
       "' (expected exponential|point)");
}

ProcessModel parse_model(const json& j) {
  const std::string family = need_string(j, "family", "model");
  try {
    if (family == "diffusion") {
      DiffusionModel m;
      m.drift = parse_expr_field(j, "drift", "model");
      m.sigma = parse_expr_field(j, "sigma", "model");
      return m;
    }
    if (family == "jump_diffusion") {
      JumpDiffusionModel m;
      m.base.drift = parse_expr_field(j, "drift", "model");
      m.base.sigma = parse_expr_field(j, "sigma", "model");
      m.intensity = need_number(j, "intensity", "model");
      const json& kj = need(j, "kernel", "model");
      const std::string type = need_string(kj, "type", "model.kernel");
      if (type == "exp_displacement") {
        m.kernel = JumpKernel::exp_displacement(
            parse_expr_field(kj, "rate", "model.kernel"));
      } else if (type == "translation") {
        m.kernel = JumpKernel::translation(
            parse_law(need(kj, "law", "model.kernel"), "model.kernel.law"));
      } else {
        fail("model.kernel: unknown type '" + type +
             "' (expected exp_displacement|translation)");
      }
      return m;
    }
    if (family == "levy") {
      LevyModel m;
      m.drift = need_number(j, "g", "model");
      m.sigma = need_number(j, "sigma", "model");
      const json& mj = need(j, "measure", "model");
      const std::string type = need_string(mj, "type", "model.measure");
      if (type == "compound") {
        m.measure = LevyMeasure::compound(
            need_number(mj, "rate", "model.measure"),
            parse_law(need(mj, "law", "model.measure"), "model.measure.law"));
      } else if (type == "infinite") {
        std::optional<double> lambda0;
        if (mj.contains("lambda0")) {
          lambda0 = need_number(mj, "lambda0", "model.measure");
        }
        m.measure = LevyMeasure::infinite_activity(
            parse_expr_field(mj, "density", "model.measure"), lambda0);
      } else {
        fail("model.measure: unknown type '" + type +
             "' (expected compound|infinite)");
      }
      return m;
    }
  } catch (const ModelError& e) {
    fail(std::string("model: ") + e.what());
  }
  fail("model: unknown family '" + family +
       "' (expected diffusion|jump_diffusion|levy)");
}

LyapunovSpec parse_lyapunov(const json& j) {
  const std::string family = need_string(j, "family", "lyapunov");
  try {
    if (family == "affine") {
      return LyapunovSpec::affine(need_number(j, "c", "lyapunov"));
    }
    if (family == "power_affine") {
      return LyapunovSpec::power_affine(need_number(j, "lambda", "lyapunov"),
                                        need_number(j, "beta", "lyapunov"));
    }
    if (family == "exp") {
      return LyapunovSpec::exponential(need_number(j, "lambda", "lyapunov"));
    }
    if (family == "frac_power") {
      return LyapunovSpec::frac_power(need_number(j, "beta", "lyapunov"));
    }
  } catch (const std::invalid_argument& e) {
    fail(std::string("lyapunov: ") + e.what());
  }
  fail("lyapunov: unknown family '" + family +
       "' (expected affine|power_affine|exp|frac_power)");
}

PhiSpec parse_phi(const json& j) {
  const std::string family = need_string(j, "family", "phi");
  try {
    if (family == "linear") return PhiSpec::linear(need_number(j, "k", "phi"));
    if (family == "power") {
      return PhiSpec::power(need_number(j, "c", "phi"),
                            need_number(j, "gamma", "phi"));
    }
    if (family == "constant") {
      return PhiSpec::constant(need_number(j, "k", "phi"));
    }
    if (family == "custom") {
      return PhiSpec::custom(parse_expr_field(j, "expr", "phi"));
    }
  } catch (const std::invalid_argument& e) {
    fail(std::string("phi: ") + e.what());
  } catch (const PhiValidationError& e) {
    fail(std::string("phi: ") + e.what());
  }
  fail("phi: unknown family '" + family +
       "' (expected linear|power|constant|custom)");
}

InitialLaw parse_initial_law(const json& j, const char* ctx) {
  const std::string type = need_string(j, "type", ctx);
  try {
    if (type == "point") {
      return InitialLaw::point(need_number(j, "value", ctx));
    }
    if (type == "exponential") {
      return InitialLaw::exponential_mean(need_number(j, "mean", ctx));
    }
  } catch (const std::invalid_argument& e) {
    fail(std::string(ctx) + ": " + e.what());
  }
  fail(std::string(ctx) + ": unknown initial law '" + type +
       "' (expected point|exponential)");
}

PhiFamily parse_phi_family_name(const std::string& name) {
  if (name == "linear") return PhiFamily::Linear;
  if (name == "power") return PhiFamily::Power;
  if (name == "constant") return PhiFamily::Constant;
  fail("fit.family must be linear|power|constant, got '" + name + "'");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.config_hash = fnv1a64_hex(text);

  cfg.model = parse_model(need(j, "model", "config"));
  cfg.model_tag = model_family_name(cfg.model);
  cfg.lyapunov = parse_lyapunov(need(j, "lyapunov", "config"));

  const json& phi_j = need(j, "phi", "config");
  if (phi_j.is_string()) {
    if (phi_j.get<std::string>() != "fit") {
      fail("phi: the only string value accepted is \"fit\"");
    }
    const json& fit = need(j, "fit", "config (phi = \"fit\")");
    cfg.fit_family = parse_phi_family_name(need_string(fit, "family", "fit"));
    if (cfg.fit_family == PhiFamily::Power) {
      cfg.fit_gamma = need_number(fit, "gamma", "fit");
      if (!(cfg.fit_gamma > 0.0 && cfg.fit_gamma < 1.0)) {
        fail("fit.gamma must lie in (0, 1)");
      }
    }
  } else {
    cfg.phi = parse_phi(phi_j);
  }

  if (j.contains("young_p")) {
    cfg.young_p = need_number(j, "young_p", "config");
    if (!(cfg.young_p > 1.0)) fail("young_p must be > 1");
  }
  if (j.contains("norm")) {
    const std::string norm = need_string(j, "norm", "config");
    if (norm == "U") {
      cfg.norm = NormChoice::UNorm;
    } else if (norm == "tv") {
      cfg.norm = NormChoice::TotalVariation;
    } else {
      fail("norm must be \"U\" or \"tv\", got '" + norm + "'");
    }
  }

  const json& start = need(j, "start", "config");
  if (start.contains("x1") || start.contains("x2")) {
    const double x1 = need_number(start, "x1", "start");
    const double x2 = need_number(start, "x2", "start");
    if (!(x1 >= 0.0) || !(x2 >= 0.0)) fail("start: x1, x2 must be >= 0");
    if (x1 > x2) fail("start: requires x1 <= x2");
    cfg.law1 = InitialLaw::point(x1);
    cfg.law2 = InitialLaw::point(x2);
  } else {
    cfg.law1 = parse_initial_law(need(start, "law1", "start"), "start.law1");
    cfg.law2 = parse_initial_law(need(start, "law2", "start"), "start.law2");
  }

  const json& sim = need(j, "sim", "config");
  cfg.sim.dt = need_number(sim, "dt", "sim");
  cfg.sim.horizon = need_number(sim, "horizon", "sim");
  const double n_paths = need_number(sim, "n_paths", "sim");
  if (!(n_paths >= 1.0) || n_paths != std::floor(n_paths)) {
    fail("sim.n_paths must be a positive integer");
  }
  cfg.sim.n_paths = static_cast<std::size_t>(n_paths);
  const double seed = need_number(sim, "seed", "sim");
  if (seed < 0.0 || seed != std::floor(seed)) {
    fail("sim.seed must be a nonnegative integer");
  }
  cfg.sim.master_seed = static_cast<std::uint64_t>(seed);
  if (sim.contains("small_jump_cutoff")) {
    cfg.sim.small_jump_cutoff = need_number(sim, "small_jump_cutoff", "sim");
  }
  try {
    cfg.sim.validate();
  } catch (const ModelError& e) {
    fail(e.what());
  }

  const json& cps = need(j, "checkpoints", "config");
  if (!cps.is_array() || cps.empty()) {
    fail("checkpoints must be a nonempty array of times");
  }
  for (const auto& v : cps) {
    if (!v.is_number()) fail("checkpoints must be numbers");
    const double t = v.get<double>();
    if (!(t >= 0.0) || t > cfg.sim.horizon) {
      fail("checkpoint outside [0, horizon]: " + std::to_string(t));
    }
    cfg.checkpoints.push_back(t);
  }

  if (j.contains("grid")) {
    const json& g = j["grid"];
    const double lo = need_number(g, "lo", "grid");
    const double hi = need_number(g, "hi", "grid");
    const double n = need_number(g, "n", "grid");
    if (!(lo > 0.0) || !(hi > lo) || !(n >= 2.0)) {
      fail("grid: need 0 < lo < hi and n >= 2");
    }
    cfg.cert_grid =
        num::geometric_grid(lo, hi, static_cast<std::size_t>(n));
  } else {
    cfg.cert_grid = default_certification_grid();
  }

  if (j.contains("audit_supermartingale")) {
    const json& v = j["audit_supermartingale"];
    if (!v.is_boolean()) fail("audit_supermartingale must be a boolean");
    cfg.audit_supermartingale = v.get<bool>();
  }
  if (j.contains("output_dir")) {
    cfg.output_dir = need_string(j, "output_dir", "config");
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open config file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

}  // namespace ergoline
