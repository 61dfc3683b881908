// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "nonsticky/coefficients.hpp"
#include "nonsticky/config.hpp"
#include "nonsticky/oracles.hpp"
#include "nonsticky/report_io.hpp"
#include "nonsticky/studies.hpp"
#include "property_checks.hpp"

using namespace nonsticky;

namespace {

// Tolerances.
constexpr double kIntegralRelTol = 1e-8;
constexpr double kMeanSigmas = 4.0;
constexpr std::size_t kMeanSamples = 100000;
constexpr double kSlopeLow = 0.35;
constexpr double kSlopeHigh = 0.65;
constexpr std::size_t kMinGridValues = 1000000;

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %d %-22s %s  %s\n", id, name.c_str(), ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string failed_checks(const ConvergenceReport& r) {
  std::string s;
  for (const auto& c : r.checks) {
    s += (c.passed ? "[ok] " : "[FAILED] ") + c.name;
    if (!c.detail.empty()) s += " (" + c.detail + ")";
    s += "; ";
  }
  return s;
}

struct StudyRun {
  ConvergenceReport report;
  std::string summary;
  double seconds = 0.0;
};

StudyRun run_config(const std::string& name, unsigned workers) {
  const auto file = config::ConfigFile::load(std::string(NONSTICKY_CONFIG_DIR) + "/" + name + ".ini");
  const StudyConfig cfg = config::parse_study(file);
  const auto t0 = std::chrono::steady_clock::now();
  StudyRun r;
  r.report = run_study(cfg, workers);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.report.config_hash = config::config_hash(file.text());
  r.summary = io::summary_text(r.report);
  return r;
}

void integrability() {
  double worst = 0.0;
  for (double alpha : {0.1, 0.25, 0.4})
    for (double eps : {1e-1, 1e-3}) {
      const double expected = 2.0 * std::pow(eps, 1.0 - 2.0 * alpha) / (1.0 - 2.0 * alpha);
      const double got = inverse_square_integral(CoefficientSpec::power_law(alpha), 0.0, eps);
      worst = std::max(worst, std::abs(got / expected - 1.0));
    }
  report(1, "integrability", worst <= kIntegralRelTol, "max relative error " + fmt("%.3g", worst));
}

void mean_identity() {
  double worst = 0.0;
  std::uint64_t seed = 900;
  for (double alpha : {0.1, 0.25, 0.4})
    for (double y0 : {0.0, 1.0, 5.0})
      for (double t : {0.5, 2.0}) {
        const double delta = (1.0 - 2.0 * alpha) / (1.0 - alpha);
        const BesqParams p{delta, y0, t};
        MomentAccumulator acc;
        for (std::size_t i = 0; i < kMeanSamples; ++i)
          acc.add(besq_exact_sample(p, RngKey{seed, i, StreamDomain::OracleSamples}));
        ++seed;
        worst = std::max(worst, std::abs(acc.mean() - (y0 + delta * t)) / acc.standard_error());
      }
  report(2, "oracle_mean_identity", worst <= kMeanSigmas,
         "max |mean - (y0 + delta t)| = " + fmt("%.2f", worst) + " SE over 18 cells");
}

void non_sticky() {
  const SdeProblem problem{CoefficientSpec::power_law(0.25), 0.0, 1.0};
  const auto c = count_zero_hits(problem, 20240616, 250, 12);
  report(7, "non_sticky", c.grid_values >= kMinGridValues && c.hits == 0,
         std::to_string(c.hits) + " hits in " + std::to_string(c.grid_values) + " grid values");
}

void properties() {
  const std::vector<std::pair<std::string, props::Outcome>> results{
      {"g_round_trip", props::g_round_trip()},
      {"lyapunov", props::lyapunov_monotone()},
      {"occupation_eps", props::occupation_monotone()},
      {"coarsening", props::coarsening_bitwise()},
      {"ks_calibration", props::ks_calibration()},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, o] : results) {
    ok = ok && o.ok;
    detail += name + (o.ok ? " ok" : " FAILED");
    if (!o.detail.empty()) detail += " (" + o.detail + ")";
    detail += "; ";
  }
  report(9, "property_suites", ok, detail);
}

}  // namespace

int main() {
  try {
    integrability();
    mean_identity();

    const std::vector<std::string> studies{"weak_ks", "strong_cauchy", "occupation_scaling",
                                           "trap_control"};
    std::map<std::string, StudyRun> single;
    for (const auto& name : studies) single[name] = run_config(name, 1);

    {
      const auto& r = single["weak_ks"];
      const auto& rows = r.report.rows;
      std::string detail;
      for (const auto& row : rows)
        detail += "L" + std::to_string(row.level) + " D=" + fmt("%.4f", row.statistic) +
                  " p=" + fmt("%.3g", row.p_value) + "; ";
      report(3, "weak_ks", r.report.verdict,
             detail + failed_checks(r.report) + fmt("%.0fs", r.seconds));
    }
    {
      const auto& r = single["strong_cauchy"];
      std::string detail;
      for (const auto& row : r.report.rows)
        detail += "L" + std::to_string(row.level) + " " + fmt("%.5f", row.statistic) + "; ";
      report(4, "strong_cauchy", r.report.verdict,
             detail + failed_checks(r.report) + fmt("%.0fs", r.seconds));
    }
    {
      const auto& r = single["occupation_scaling"];
      const double slope = r.report.metric("slope").value_or(NAN);
      const bool in_band = slope >= kSlopeLow && slope <= kSlopeHigh;
      report(5, "occupation_scaling", r.report.verdict && in_band,
             "slope " + fmt("%.4f", slope) + " over " +
                 fmt("%.0f", r.report.metric("fit_points").value_or(0)) + " eps; " +
                 failed_checks(r.report) + fmt("%.0fs", r.seconds));
    }
    {
      const auto& r = single["trap_control"];
      const auto& rows = r.report.rows;
      const bool shape = rows.size() == 2 && rows[0].statistic == 0.0 && rows[0].ci_high == 0.0 &&
                         rows[1].ci_low > 0.0;
      std::string detail;
      if (rows.size() == 2)
        detail = "no_shift var " + fmt("%.3g", rows[0].statistic) + ", shift var " +
                 fmt("%.4f", rows[1].statistic) + " CI low " + fmt("%.4f", rows[1].ci_low) + "; ";
      report(6, "trap_control", r.report.verdict && shape, detail + failed_checks(r.report));
    }

    non_sticky();

    {
      bool same = true;
      std::string detail;
      for (const auto& name : studies) {
        const StudyRun four = run_config(name, 4);
        const bool eq = four.summary == single[name].summary;
        same = same && eq;
        detail += name + (eq ? " identical; " : " DIFFERS; ");
      }
      report(8, "worker_invariance", same, detail);
    }

    properties();
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
