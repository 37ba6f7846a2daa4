#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ergoline/certify.hpp"
#include "ergoline/coupling.hpp"
#include "ergoline/estimators.hpp"

namespace ergoline {

inline constexpr std::string_view kToolVersion = "ergoline 0.1.0";

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

/// Shortest round-trip decimal form (std::to_chars), '.' separator,
/// locale-independent. Infinities render as "+inf"/"-inf".
std::string format_double(double v);

struct OutputMeta {
  std::string config_hash;
};

/// Leading comment lines carried by every output file: tool version and
/// config hash.
std::string csv_preamble(const OutputMeta& meta);

std::string bound_csv(const std::vector<double>& ts,
                      const std::vector<double>& bounds,
                      const OutputMeta& meta);

/// Columns exactly: t,empirical,ci_lo,ci_hi,bound,pass
std::string verify_csv(const BoundReport& report, const OutputMeta& meta);

std::string verify_json(const BoundReport& report,
                        const SupermartingaleAudit* audit,
                        const OutputMeta& meta);

std::string certificate_json(const RateCertificate& cert,
                             const OutputMeta& meta);

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::uint64_t count = 0;
};

std::vector<HistogramBin> histogram(const std::vector<double>& values,
                                    std::size_t bins);

std::string stationary_csv(const std::vector<HistogramBin>& bins,
                           const OutputMeta& meta);

std::string stationary_json(const EmpiricalStationary& est,
                            const LyapunovSpec& V, const OutputMeta& meta);

/// Log-scale overlay of the empirical distance (with CI whiskers) and the
/// theoretical bound curve.
std::string verify_svg(const BoundReport& report, const OutputMeta& meta);

void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

}  // namespace ergoline
