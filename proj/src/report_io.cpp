#include "ergoline/report_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace ergoline {

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view data) {
  static const char* digits = "0123456789abcdef";
  std::uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    h >>= 4;
  }
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string csv_preamble(const OutputMeta& meta) {
  std::string out;
  out += "# ";
  out += kToolVersion;
  out += "\n# config ";
  out += meta.config_hash;
  out += "\n";
  return out;
}

std::string bound_csv(const std::vector<double>& ts,
                      const std::vector<double>& bounds,
                      const OutputMeta& meta) {
  std::string out = csv_preamble(meta);
  out += "t,bound\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out += format_double(ts[i]);
    out += ',';
    out += format_double(bounds[i]);
    out += '\n';
  }
  return out;
}

std::string verify_csv(const BoundReport& report, const OutputMeta& meta) {
  std::string out = csv_preamble(meta);
  out += "t,empirical,ci_lo,ci_hi,bound,pass\n";
  for (const BoundPoint& p : report.points) {
    out += format_double(p.t);
    out += ',';
    out += format_double(p.empirical);
    out += ',';
    out += format_double(p.ci_lo);
    out += ',';
    out += format_double(p.ci_hi);
    out += ',';
    out += format_double(p.bound);
    out += ',';
    out += p.pass ? '1' : '0';
    out += '\n';
  }
  return out;
}

namespace {

using nlohmann::json;

json meta_json(const OutputMeta& meta) {
  return json{{"tool", std::string(kToolVersion)},
              {"config", meta.config_hash}};
}

json points_json(const BoundReport& report) {
  json arr = json::array();
  for (const BoundPoint& p : report.points) {
    json row{{"t", p.t},          {"empirical", p.empirical},
             {"ci_lo", p.ci_lo},  {"ci_hi", p.ci_hi},
             {"pass", p.pass}};
    if (std::isinf(p.bound)) {
      row["bound"] = "+inf";
    } else {
      row["bound"] = p.bound;
    }
    arr.push_back(row);
  }
  return arr;
}

}  // namespace

std::string verify_json(const BoundReport& report,
                        const SupermartingaleAudit* audit,
                        const OutputMeta& meta) {
  json j;
  j["meta"] = meta_json(meta);
  j["status"] = to_string(report.status);
  j["tainted"] = report.tainted;
  j["order_violations"] = report.order_violations;
  j["hit_before_meet"] = report.hit_before_meet;
  j["x1"] = report.x1;
  j["x2"] = report.x2;
  j["n_paths"] = report.n_paths;
  j["seed"] = report.seed;
  j["decomposition"] = report.decomposition;
  j["certificate_note"] = report.certificate_note;
  j["points"] = points_json(report);
  if (audit != nullptr) {
    json curve = json::array();
    for (const AuditPoint& p : audit->curve) {
      curve.push_back(json{{"t", p.t}, {"mean", p.mean}, {"se", p.se}});
    }
    j["supermartingale"] = json{
        {"curve", curve},
        {"pair_slack", audit->pair_slack},
        {"nonincreasing_within_2se", audit->nonincreasing_within_2se}};
  }
  return j.dump(2) + "\n";
}

std::string certificate_json(const RateCertificate& cert,
                             const OutputMeta& meta) {
  json j;
  j["meta"] = meta_json(meta);
  j["model"] = cert.model_id;
  j["lyapunov"] = cert.lyapunov.describe();
  j["phi"] = cert.phi.describe();
  j["grid"] = json{{"n", cert.grid.size()},
                   {"lo", cert.grid.empty() ? 0.0 : cert.grid.front()},
                   {"hi", cert.grid.empty() ? 0.0 : cert.grid.back()}};
  j["worst_margin_rel"] = cert.worst_margin_rel;
  j["worst_margin_abs"] = cert.worst_margin_abs;
  j["worst_x"] = cert.worst_x;
  j["tolerance"] = cert.tolerance;
  j["pass"] = cert.pass;
  j["positivity_assumed"] = cert.positivity_assumed;
  j["notes"] = cert.notes;
  return j.dump(2) + "\n";
}

std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    std::size_t bins) {
  std::vector<HistogramBin> out;
  if (values.empty() || bins == 0) return out;
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  out.resize(bins);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + w * static_cast<double>(b);
    out[b].hi = lo + w * static_cast<double>(b + 1);
  }
  for (double v : values) {
    std::size_t b = static_cast<std::size_t>((v - lo) / w);
    if (b >= bins) b = bins - 1;
    ++out[b].count;
  }
  return out;
}

std::string stationary_csv(const std::vector<HistogramBin>& bins,
                           const OutputMeta& meta) {
  std::string out = csv_preamble(meta);
  out += "bin_lo,bin_hi,count\n";
  for (const HistogramBin& b : bins) {
    out += format_double(b.lo);
    out += ',';
    out += format_double(b.hi);
    out += ',';
    out += std::to_string(b.count);
    out += '\n';
  }
  return out;
}

std::string stationary_json(const EmpiricalStationary& est,
                            const LyapunovSpec& V, const OutputMeta& meta) {
  json j;
  j["meta"] = meta_json(meta);
  j["lyapunov"] = V.describe();
  j["n_harvested"] = est.states.size();
  j["burn_in"] = est.burn_in;
  j["thin_stride_steps"] = est.thin_stride;
  j["iact_kept_steps"] = est.iact_steps;
  j["ess"] = est.ess;
  j["mean_x"] = est.mean_x;
  j["se_x"] = est.se_x;
  j["pi_V"] = est.pi_v;
  j["se_pi_V"] = est.se_pi_v;
  j["v_moment_diverging"] = est.v_moment_diverging;
  return j.dump(2) + "\n";
}

namespace {

struct SvgMapper {
  double t_lo, t_hi, y_lo_log, y_hi_log;
  double px_left = 70, px_right = 770, px_top = 40, px_bottom = 440;

  double x(double t) const {
    const double w = t_hi > t_lo ? (t - t_lo) / (t_hi - t_lo) : 0.5;
    return px_left + w * (px_right - px_left);
  }
  double y(double v) const {
    const double lv = std::log10(std::max(v, 1e-300));
    const double w =
        y_hi_log > y_lo_log ? (lv - y_lo_log) / (y_hi_log - y_lo_log) : 0.5;
    return px_bottom - w * (px_bottom - px_top);
  }
};

void svg_line(std::string& out, double x1, double y1, double x2, double y2,
              const char* stroke, const char* extra = "") {
  out += "<line x1=\"" + format_double(x1) + "\" y1=\"" + format_double(y1) +
         "\" x2=\"" + format_double(x2) + "\" y2=\"" + format_double(y2) +
         "\" stroke=\"" + stroke + "\" " + extra + "/>\n";
}

void svg_text(std::string& out, double x, double y, const std::string& text,
              const char* anchor = "middle") {
  out += "<text x=\"" + format_double(x) + "\" y=\"" + format_double(y) +
         "\" font-size=\"12\" font-family=\"sans-serif\" text-anchor=\"" +
         anchor + "\">" + text + "</text>\n";
}

}  // namespace

std::string verify_svg(const BoundReport& report, const OutputMeta& meta) {
  double t_lo = 0.0, t_hi = 1.0;
  double v_lo = 1e300, v_hi = 1e-300;
  if (!report.points.empty()) {
    t_lo = report.points.front().t;
    t_hi = report.points.back().t;
    for (const BoundPoint& p : report.points) {
      t_lo = std::min(t_lo, p.t);
      t_hi = std::max(t_hi, p.t);
      for (double v : {p.empirical, p.ci_lo, p.ci_hi, p.bound}) {
        if (std::isfinite(v) && v > 0.0) {
          v_lo = std::min(v_lo, v);
          v_hi = std::max(v_hi, v);
        }
      }
    }
  }
  if (!(v_lo < v_hi)) {
    v_lo = 0.1;
    v_hi = 10.0;
  }
  SvgMapper m{t_lo, t_hi, std::floor(std::log10(v_lo) - 0.3),
              std::ceil(std::log10(v_hi) + 0.3)};

  std::string out;
  out +=
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" "
      "height=\"480\" viewBox=\"0 0 820 480\">\n";
  out += "<!-- " + std::string(kToolVersion) + " config " + meta.config_hash +
         " -->\n";
  out += "<rect width=\"820\" height=\"480\" fill=\"white\"/>\n";
  svg_line(out, m.px_left, m.px_bottom, m.px_right, m.px_bottom, "black");
  svg_line(out, m.px_left, m.px_top, m.px_left, m.px_bottom, "black");

  // y ticks at powers of ten
  for (int e = static_cast<int>(m.y_lo_log); e <= static_cast<int>(m.y_hi_log);
       ++e) {
    const double v = std::pow(10.0, e);
    const double yy = m.y(v);
    svg_line(out, m.px_left - 4, yy, m.px_left, yy, "black");
    svg_line(out, m.px_left, yy, m.px_right, yy, "#dddddd");
    svg_text(out, m.px_left - 8, yy + 4, "1e" + std::to_string(e), "end");
  }
  // x ticks at the checkpoints
  for (const BoundPoint& p : report.points) {
    const double xx = m.x(p.t);
    svg_line(out, xx, m.px_bottom, xx, m.px_bottom + 4, "black");
    svg_text(out, xx, m.px_bottom + 18, format_double(p.t));
  }
  svg_text(out, 0.5 * (m.px_left + m.px_right), 470, "t");
  svg_text(out, 0.5 * (m.px_left + m.px_right), 24,
           "empirical U-distance (95% CI) vs theoretical bound 2V(x2)/h(t) - " +
               to_string(report.status));

  // bound polyline
  std::string pts;
  for (const BoundPoint& p : report.points) {
    if (!std::isfinite(p.bound)) continue;
    pts += format_double(m.x(p.t)) + "," + format_double(m.y(p.bound)) + " ";
  }
  if (!pts.empty()) {
    out += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" "
           "points=\"" +
           pts + "\"/>\n";
  }
  // empirical markers with CI whiskers
  for (const BoundPoint& p : report.points) {
    const double xx = m.x(p.t);
    if (p.ci_hi > 0.0) {
      svg_line(out, xx, m.y(std::max(p.ci_lo, 1e-300)), xx, m.y(p.ci_hi),
               "#d62728", "stroke-width=\"1\"");
    }
    if (p.empirical > 0.0) {
      out += "<circle cx=\"" + format_double(xx) + "\" cy=\"" +
             format_double(m.y(p.empirical)) +
             "\" r=\"3\" fill=\"#d62728\"/>\n";
    }
  }
  svg_text(out, m.px_right - 6, m.px_top + 14, "bound", "end");
  out += "<rect x=\"" + format_double(m.px_right - 72) + "\" y=\"" +
         format_double(m.px_top + 4) +
         "\" width=\"10\" height=\"3\" fill=\"#1f77b4\"/>\n";
  svg_text(out, m.px_right - 6, m.px_top + 32, "empirical", "end");
  out += "<circle cx=\"" + format_double(m.px_right - 67) + "\" cy=\"" +
         format_double(m.px_top + 27) + "\" r=\"3\" fill=\"#d62728\"/>\n";
  out += "</svg>\n";
  return out;
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path.string());
  }
  out << content;
}

}  // namespace ergoline
