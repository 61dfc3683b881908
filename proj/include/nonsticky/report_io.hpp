#pragma once

// results.csv, summary.json and manifest.json writers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <string>
#include <vector>

#include <json.hpp>

#include "nonsticky/studies.hpp"
#include "nonsticky/version.hpp"

namespace nonsticky::io {

using ordered_json = nlohmann::ordered_json;

/// %.17g, round-trip exact; NaN as "nan".
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline ordered_json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string results_csv(const ConvergenceReport& r) {
  std::string out;
  const bool weak = r.kind == StudyKind::WeakKS;
  const bool occ = r.kind == StudyKind::OccupationScaling;
  const bool trap = r.kind == StudyKind::TrapControl;
  out += "level";
  if (occ) out += ",eps";
  if (trap) out += ",arm";
  out += ",statistic,ci_low,ci_high";
  if (weak) out += ",p_value";
  out += ",n_paths";
  if (occ) out += ",in_fit";
  out += ",wall_seconds\n";
  for (const ReportRow& row : r.rows) {
    out += std::to_string(row.level);
    if (occ) out += "," + format_double(row.eps);
    if (trap) out += "," + row.arm;
    out += "," + format_double(row.statistic) + "," + format_double(row.ci_low) + "," +
           format_double(row.ci_high);
    if (weak) out += "," + format_double(row.p_value);
    out += "," + std::to_string(row.n_paths);
    if (occ) out += row.in_fit ? ",1" : ",0";
    out += "," + format_double(r.wall_seconds) + "\n";
  }
  return out;
}

/// Verdict, checks, metrics and rows. Timing and worker count are left out
/// so the summary depends only on (config, seed, code version).
inline ordered_json summary_json(const ConvergenceReport& r) {
  ordered_json j;
  j["study"] = to_string(r.kind);
  j["verdict"] = r.verdict ? "pass" : "fail";
  j["ci_reliable"] = r.ci_reliable;
  ordered_json checks = ordered_json::array();
  for (const Check& c : r.checks)
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  ordered_json metrics = ordered_json::object();
  for (const auto& [k, v] : r.metrics) metrics[k] = json_number(v);
  j["metrics"] = metrics;
  ordered_json rows = ordered_json::array();
  for (const ReportRow& row : r.rows) {
    ordered_json o;
    o["level"] = row.level;
    if (!std::isnan(row.eps)) o["eps"] = row.eps;
    if (!row.arm.empty()) o["arm"] = row.arm;
    o["statistic"] = json_number(row.statistic);
    o["ci_low"] = json_number(row.ci_low);
    o["ci_high"] = json_number(row.ci_high);
    if (!std::isnan(row.p_value)) o["p_value"] = row.p_value;
    o["n_paths"] = row.n_paths;
    if (r.kind == StudyKind::OccupationScaling) o["in_fit"] = row.in_fit;
    rows.push_back(o);
  }
  j["rows"] = rows;
  j["notes"] = r.notes;
  j["provenance"] = {{"seed", r.seed},
                     {"config_hash", r.config_hash},
                     {"code_version", r.code_version}};
  return j;
}

inline std::string summary_text(const ConvergenceReport& r) {
  return summary_json(r).dump(2) + "\n";
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunManifest {
  std::string config_path;
  std::string config_hash;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::string start_time;
  std::string end_time;  ///< empty until finalized
  std::string manifest_path;
  std::string results_path;
  std::string summary_path;
  std::string code_version = kVersion;

  ordered_json to_json() const {
    ordered_json j;
    j["config_path"] = config_path;
    j["config_hash"] = config_hash;
    j["seed"] = seed;
    j["workers"] = workers;
    j["start_time"] = start_time;
    j["end_time"] = end_time.empty() ? ordered_json(nullptr) : ordered_json(end_time);
    j["status"] = end_time.empty() ? "running" : "complete";
    j["outputs"] = {{"manifest", manifest_path},
                    {"results", results_path},
                    {"summary", summary_path}};
    j["code_version"] = code_version;
    return j;
  }
};

}  // namespace nonsticky::io
