#pragma once

// Command implementations behind the `nonsticky` executable. Each returns
// the process exit code: 0 pass, 1 fail, 2 usage or configuration error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nonsticky/config.hpp"
#include "nonsticky/report_io.hpp"
#include "nonsticky/studies.hpp"

namespace nonsticky::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

inline int cmd_classify(const std::string& config_path, std::ostream& out, std::ostream& err) {
  CoefficientSpec spec = CoefficientSpec::constant(1.0);
  try {
    spec = config::parse_coefficient(config::ConfigFile::load(config_path));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  out << "coefficient: " << spec.label() << "\n";
  if (spec.zero_set().empty()) {
    out << "zero set is empty; nothing to classify\n";
    return kExitPass;
  }
  bool all_vanish = true;
  try {
    for (double z : spec.zero_set()) {
      const IntegrabilityVerdict v = classify_level(spec, z);
      out << "z = " << io::format_double(z) << "\n";
      out << "eps,integral\n";
      for (const auto& [eps, value] : v.integral_values)
        out << io::format_double(eps) << ","
            << (std::isinf(value) ? std::string("inf") : io::format_double(value)) << "\n";
      out << "classification: " << to_string(v.classification) << "\n";
      if (v.classification != Integrability::VanishesAsEpsToZero) all_vanish = false;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return all_vanish ? kExitPass : kExitFail;
}

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string out_dir;
};

namespace detail {

inline bool write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) return false;
  f << text;
  return static_cast<bool>(f.flush());
}

}  // namespace detail

inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  namespace fs = std::filesystem;
  StudyConfig cfg(SdeProblem{CoefficientSpec::constant(1.0), 0.0, 1.0});
  std::string hash;
  try {
    const auto file = config::ConfigFile::load(opt.config_path);
    hash = config::config_hash(file.text());
    cfg = config::parse_study(file);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  if (opt.seed) cfg.seed = *opt.seed;

  const fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  io::RunManifest manifest;
  manifest.config_path = opt.config_path;
  manifest.config_hash = hash;
  manifest.seed = cfg.seed;
  manifest.workers = opt.workers;
  manifest.start_time = io::utc_timestamp();
  manifest.manifest_path = (dir / "manifest.json").string();
  manifest.results_path = (dir / "results.csv").string();
  manifest.summary_path = (dir / "summary.json").string();
  if (!detail::write_file(manifest.manifest_path, manifest.to_json().dump(2) + "\n")) {
    err << "error: output directory '" << opt.out_dir << "' is not writable\n";
    return kExitUsage;
  }

  ConvergenceReport report;
  try {
    report = run_study(cfg, opt.workers);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  report.config_hash = hash;

  if (!detail::write_file(manifest.results_path, io::results_csv(report)) ||
      !detail::write_file(manifest.summary_path, io::summary_text(report))) {
    err << "error: failed writing results to '" << opt.out_dir << "'\n";
    return kExitUsage;
  }
  manifest.end_time = io::utc_timestamp();
  if (!detail::write_file(manifest.manifest_path, manifest.to_json().dump(2) + "\n")) {
    err << "error: failed finalizing manifest\n";
    return kExitUsage;
  }
  out << to_string(report.kind) << ": " << (report.verdict ? "pass" : "fail") << "\n";
  for (const Check& c : report.checks)
    out << "  " << (c.passed ? "[ok]   " : "[FAIL] ") << c.name
        << (c.detail.empty() ? "" : ": " + c.detail) << "\n";
  for (const std::string& note : report.notes) out << "  note: " << note << "\n";
  return report.verdict ? kExitPass : kExitFail;
}

struct DumpOptions {
  std::string config_path;
  int level = 10;
  std::uint64_t seed = 1;
  std::uint64_t path_index = 0;
  bool no_shift = false;
};

/// Prints "t,x" and the n + 1 grid values of one path.
inline int cmd_dump_path(const DumpOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    check_level(opt.level);
    const SdeProblem problem = config::parse_problem(config::ConfigFile::load(opt.config_path));
    std::string buf = "t,x\n";
    stream_path(problem, opt.seed, opt.path_index, opt.level,
                opt.no_shift ? ShiftPolicy::NoShift : ShiftPolicy::Shift,
                [&](std::size_t, double t, double x) {
                  buf += io::format_double(t);
                  buf += ',';
                  buf += io::format_double(x);
                  buf += '\n';
                  if (buf.size() > (1u << 20)) {
                    out << buf;
                    buf.clear();
                  }
                });
    out << buf;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitPass;
}

}  // namespace nonsticky::cli
