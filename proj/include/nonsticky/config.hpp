#pragma once

// Flat key = value experiment files with [coefficient], [problem] and
// [study] sections. Unknown sections or keys are rejected so that a config
// file fully determines the experiment it hashes to.
//
//   [coefficient]
//   kind = power_law          ; power_law | odd_power_law | constant
//   alpha = 0.25
//
//   [problem]
//   x0 = 1
//   horizon = 1
//
//   [study]
//   kind = weak_ks
//   levels = 6, 8, 10, 12
//   n_paths = 100000
//   seed = 42

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nonsticky/coefficients.hpp"
#include "nonsticky/em_engine.hpp"
#include "nonsticky/error.hpp"
#include "nonsticky/estimators.hpp"
#include "nonsticky/studies.hpp"

namespace nonsticky::config {

/// Parsed file: section -> key -> raw value.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(std::string("malformed config: ") + e.message() + " at line " +
                        std::to_string(e.line()));
    }
    ConfigFile cfg;
    cfg.text_ = text;
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty())
        throw ConfigError("key '" + section + "' appears outside a section");
      static const std::set<std::string> kSections{"coefficient", "problem", "study"};
      if (!kSections.count(section)) throw ConfigError("unknown config section [" + section + "]");
      auto& keys = cfg.sections_[section];
      for (const auto& [key, value] : body) {
        std::string v = value.data();
        // ini_parser keeps trailing comments; strip "; ..." and "# ...".
        const auto cut = v.find_first_of(";#");
        if (cut != std::string::npos) v.erase(cut);
        boost::algorithm::trim(v);
        keys[key] = v;
      }
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  const std::string& text() const noexcept { return text_; }
  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    used_.insert(section + "." + key);
    return k->second;
  }

  std::string require(const std::string& section, const std::string& key) const {
    auto v = get(section, key);
    if (!v) throw ConfigError("missing required field '" + key + "' in [" + section + "]");
    return *v;
  }

  /// Throws for any key in `section` that was never read.
  void reject_unused(const std::string& section) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return;
    for (const auto& [key, value] : s->second)
      if (!used_.count(section + "." + key))
        throw ConfigError("unknown field '" + key + "' in [" + section + "]");
  }

 private:
  std::string text_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  mutable std::set<std::string> used_;
};

inline double parse_double(const std::string& field, std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("field '" + field + "': '" + std::string(s) + "' is not a number");
  return v;
}

template <class Int>
Int parse_integer(const std::string& field, std::string_view s) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError("field '" + field + "': '" + std::string(s) + "' is not an integer");
  return v;
}

inline bool parse_bool(const std::string& field, const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("field '" + field + "': '" + s + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    boost::algorithm::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& field, const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(parse_double(field, item));
  return out;
}

inline CoefficientSpec parse_coefficient(const ConfigFile& f) {
  if (!f.has_section("coefficient")) throw ConfigError("missing [coefficient] section");
  const std::string kind = f.require("coefficient", "kind");
  const auto growth = f.get("coefficient", "growth_constant");
  const double k = growth ? parse_double("growth_constant", *growth) : 1.0;
  const auto zeros = f.get("coefficient", "zero_set");
  std::optional<CoefficientSpec> spec;
  if (kind == "power_law" || kind == "odd_power_law") {
    const double alpha = parse_double("alpha", f.require("coefficient", "alpha"));
    spec = kind == "power_law" ? CoefficientSpec::power_law(alpha, k)
                               : CoefficientSpec::odd_power_law(alpha, k);
    if (zeros && parse_double_list("zero_set", *zeros) != std::vector<double>{0.0})
      throw ConfigError("power-law coefficients have zero set {0}");
  } else if (kind == "constant") {
    const double value = parse_double("value", f.require("coefficient", "value"));
    if (growth) throw ConfigError("constant coefficient takes no growth_constant");
    if (zeros && !parse_double_list("zero_set", *zeros).empty())
      throw ConfigError("constant coefficient has an empty zero set");
    spec = CoefficientSpec::constant(value);
  } else {
    throw ConfigError("unknown coefficient kind '" + kind + "'");
  }
  f.reject_unused("coefficient");
  return *spec;
}

inline SdeProblem parse_problem(const ConfigFile& f) {
  SdeProblem problem{parse_coefficient(f), 0.0, 1.0};
  if (f.has_section("problem")) {
    if (auto v = f.get("problem", "x0")) problem.x0 = parse_double("x0", *v);
    if (auto v = f.get("problem", "horizon")) problem.horizon = parse_double("horizon", *v);
    f.reject_unused("problem");
  }
  problem.validate();
  return problem;
}

inline StudyKind parse_study_kind(const std::string& s) {
  for (StudyKind k : {StudyKind::WeakKS, StudyKind::StrongCauchy, StudyKind::AbsStrongCauchy,
                      StudyKind::OccupationScaling, StudyKind::TrapControl})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown study kind '" + s + "'");
}

inline StudyConfig parse_study(const ConfigFile& f) {
  if (!f.has_section("study")) throw ConfigError("missing [study] section");
  StudyConfig cfg(parse_problem(f));
  cfg.kind = parse_study_kind(f.require("study", "kind"));
  for (const auto& item : split_list(f.require("study", "levels")))
    cfg.levels.push_back(parse_integer<int>("levels", item));
  cfg.n_paths = parse_integer<std::size_t>("n_paths", f.require("study", "n_paths"));
  if (auto v = f.get("study", "seed")) cfg.seed = parse_integer<std::uint64_t>("seed", *v);
  if (auto v = f.get("study", "p")) cfg.p = parse_double("p", *v);
  if (auto v = f.get("study", "finest_level"))
    cfg.finest_level = parse_integer<int>("finest_level", *v);
  if (auto v = f.get("study", "z")) cfg.z = parse_double("z", *v);
  if (auto v = f.get("study", "eps")) cfg.eps = parse_double_list("eps", *v);
  if (auto v = f.get("study", "estimator")) {
    if (*v == "tent") cfg.estimator = OccupationKind::Tent;
    else if (*v == "indicator") cfg.estimator = OccupationKind::Indicator;
    else throw ConfigError("unknown estimator '" + *v + "'");
  }
  if (auto v = f.get("study", "expected_slope"))
    cfg.expected_slope = parse_double("expected_slope", *v);
  if (auto v = f.get("study", "slope_tolerance"))
    cfg.slope_tolerance = parse_double("slope_tolerance", *v);
  if (auto v = f.get("study", "dominance_factor"))
    cfg.dominance_factor = parse_double("dominance_factor", *v);
  if (auto v = f.get("study", "saturation_fraction"))
    cfg.saturation_fraction = parse_double("saturation_fraction", *v);
  if (auto v = f.get("study", "ks_p_threshold"))
    cfg.ks_p_threshold = parse_double("ks_p_threshold", *v);
  if (auto v = f.get("study", "ks_slack")) cfg.ks_slack = parse_double("ks_slack", *v);
  f.reject_unused("study");
  cfg.validate();
  return cfg;
}

/// Serializes the built-in coefficient kinds back to a [coefficient] section.
inline std::string to_config_text(const CoefficientSpec& spec) {
  char buf[64];
  std::ostringstream os;
  os << "[coefficient]\n";
  if (spec.is_power_law()) {
    std::snprintf(buf, sizeof buf, "%.17g", *spec.alpha());
    os << "kind = " << to_string(spec.kind()) << "\nalpha = " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", spec.growth_constant());
    os << "growth_constant = " << buf << "\nzero_set = 0\n";
  } else if (spec.constant_value()) {
    std::snprintf(buf, sizeof buf, "%.17g", *spec.constant_value());
    os << "kind = constant\nvalue = " << buf << "\n";
  } else {
    throw ConfigError("custom coefficient '" + spec.label() + "' has no text form");
  }
  return os.str();
}

/// FNV-1a 64-bit hash of the config bytes, as 16 hex digits.
inline std::string config_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nonsticky::config
