#pragma once

// Flat key-value experiment configuration with one section per module.
// The format is line-oriented and diff-friendly:
//
//   [experiment]
//   kind = layer
//   s = 0.25
//
// Unknown keys, malformed values, and out-of-range parameters raise
// ConfigError with a line/field diagnostic. The canonical text (sorted
// section.key = value lines) feeds the content hash that names run
// directories, so reordering or reformatting a config does not change
// its identity.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fraclab {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
  ConfigError(int line, const std::string& field, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line) + ", " +
                           field + ": " + what) {}
};

enum class ExperimentKind {
  kRenormalization,
  kLayer,
  kStability,
  kSliding,
  kConstrainedMin,
  kGlue,
  kBlowdown,
  kFit1D,
  kFullPipeline,
};

inline const char* experiment_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kRenormalization: return "renormalization";
    case ExperimentKind::kLayer: return "layer";
    case ExperimentKind::kStability: return "stability";
    case ExperimentKind::kSliding: return "sliding";
    case ExperimentKind::kConstrainedMin: return "constrained_min";
    case ExperimentKind::kGlue: return "glue";
    case ExperimentKind::kBlowdown: return "blowdown";
    case ExperimentKind::kFit1D: return "fit1d";
    case ExperimentKind::kFullPipeline: return "full_pipeline";
  }
  return "unknown";
}

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kLayer;
  double s = 0.25;
  int n = 1;
  std::uint64_t seed = 1234;
  std::string output_dir = "runs";

  // grid of the base solve
  double half_width = 20.0; // box [-half_width, half_width]^n
  int points = 161;         // nodes per axis (odd)

  // truncated half-space mesh
  double extension_height = 8.0;
  int extension_levels = 32;

  // tolerances
  double solver_tol = 1e-8;

  // per-experiment knobs
  std::vector<double> renorm_R_list = {4.0, 8.0, 16.0, 32.0};
  std::vector<double> blowdown_eps = {1.0, 0.5, 0.25, 0.125};
  std::vector<double> rescale_eps = {0.2, 0.1, 0.05, 0.025};
  int stability_trials = 50;
  double sliding_k_max = 2.0;
  int sliding_k_steps = 9;
  int minimality_trials = 50;
  double minimality_R = 8.0;
  int collar = 6;
  int glue_trials = 20;
  double fit_angle = 0.3; // rotation of the synthetic layer, radians

  std::string canonical_text; // sorted "section.key = value" lines
};

namespace detail {

struct ConfigEntry {
  int line = 0;
  std::string key; // "section.key"
  std::string value;
};

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<ConfigEntry> parse_config_text(std::istream& in) {
  std::vector<ConfigEntry> entries;
  std::string section = "experiment";
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string ln = trim(raw);
    const std::size_t hash = ln.find('#');
    if (hash != std::string::npos) ln = trim(ln.substr(0, hash));
    if (ln.empty()) continue;
    if (ln.front() == '[') {
      if (ln.back() != ']')
        throw ConfigError(line, "section", "unterminated section header");
      section = trim(ln.substr(1, ln.size() - 2));
      if (section.empty())
        throw ConfigError(line, "section", "empty section name");
      continue;
    }
    const std::size_t eq = ln.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, ln, "expected key = value");
    ConfigEntry e;
    e.line = line;
    e.key = section + "." + trim(ln.substr(0, eq));
    e.value = trim(ln.substr(eq + 1));
    if (e.key == section + ".")
      throw ConfigError(line, ln, "empty key");
    for (const auto& prev : entries)
      if (prev.key == e.key)
        throw ConfigError(line, e.key,
                          "duplicate key (first set on line " +
                              std::to_string(prev.line) + ")");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline double entry_double(const ConfigEntry& e) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(e.value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(e.line, e.key, "not a number: '" + e.value + "'");
  }
  if (pos != e.value.size())
    throw ConfigError(e.line, e.key, "trailing characters in '" + e.value + "'");
  return v;
}

inline long long entry_int(const ConfigEntry& e) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(e.value, &pos);
  } catch (const std::exception&) {
    throw ConfigError(e.line, e.key, "not an integer: '" + e.value + "'");
  }
  if (pos != e.value.size())
    throw ConfigError(e.line, e.key, "trailing characters in '" + e.value + "'");
  return v;
}

inline std::vector<double> entry_list(const ConfigEntry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    ConfigEntry one{e.line, e.key, trim(item)};
    out.push_back(entry_double(one));
  }
  if (out.empty()) throw ConfigError(e.line, e.key, "empty list");
  return out;
}

inline ExperimentKind entry_kind(const ConfigEntry& e) {
  for (ExperimentKind k :
       {ExperimentKind::kRenormalization, ExperimentKind::kLayer,
        ExperimentKind::kStability, ExperimentKind::kSliding,
        ExperimentKind::kConstrainedMin, ExperimentKind::kGlue,
        ExperimentKind::kBlowdown, ExperimentKind::kFit1D,
        ExperimentKind::kFullPipeline})
    if (e.value == experiment_name(k)) return k;
  throw ConfigError(e.line, e.key, "unknown experiment '" + e.value + "'");
}

}  // namespace detail

inline ExperimentConfig config_from_entries(
    std::vector<detail::ConfigEntry> entries) {
  ExperimentConfig cfg;
  bool have_kind = false;
  for (const auto& e : entries) {
    if (e.key == "experiment.kind") {
      cfg.experiment = detail::entry_kind(e);
      have_kind = true;
    } else if (e.key == "experiment.s") {
      cfg.s = detail::entry_double(e);
    } else if (e.key == "experiment.n") {
      cfg.n = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "experiment.seed") {
      cfg.seed = static_cast<std::uint64_t>(detail::entry_int(e));
    } else if (e.key == "experiment.output_dir") {
      cfg.output_dir = e.value;
    } else if (e.key == "grid.half_width") {
      cfg.half_width = detail::entry_double(e);
    } else if (e.key == "grid.points") {
      cfg.points = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "extension.height") {
      cfg.extension_height = detail::entry_double(e);
    } else if (e.key == "extension.levels") {
      cfg.extension_levels = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "tolerances.solver") {
      cfg.solver_tol = detail::entry_double(e);
    } else if (e.key == "renormalization.R_list") {
      cfg.renorm_R_list = detail::entry_list(e);
    } else if (e.key == "blowdown.eps_list") {
      cfg.blowdown_eps = detail::entry_list(e);
    } else if (e.key == "stability.eps_list") {
      cfg.rescale_eps = detail::entry_list(e);
    } else if (e.key == "stability.random_trials") {
      cfg.stability_trials = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "sliding.k_max") {
      cfg.sliding_k_max = detail::entry_double(e);
    } else if (e.key == "sliding.k_steps") {
      cfg.sliding_k_steps = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "minimality.trials") {
      cfg.minimality_trials = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "minimality.R") {
      cfg.minimality_R = detail::entry_double(e);
    } else if (e.key == "minimality.collar") {
      cfg.collar = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "glue.trials") {
      cfg.glue_trials = static_cast<int>(detail::entry_int(e));
    } else if (e.key == "fit1d.angle") {
      cfg.fit_angle = detail::entry_double(e);
    } else {
      throw ConfigError(e.line, e.key, "unknown key");
    }
  }
  if (!have_kind)
    throw ConfigError("config: missing required key experiment.kind");

  auto bad = [&](const std::string& field, const std::string& why) {
    throw ConfigError("config field " + field + ": " + why);
  };
  if (!(cfg.s > 0.0 && cfg.s < 1.0)) bad("experiment.s", "must lie in (0,1)");
  if (cfg.n < 1 || cfg.n > 3) bad("experiment.n", "must be 1, 2, or 3");
  if (cfg.solver_tol <= 0.0) bad("tolerances.solver", "must be > 0");
  if (cfg.half_width <= 0.0) bad("grid.half_width", "must be > 0");
  if (cfg.points < 3 || cfg.points % 2 == 0)
    bad("grid.points", "must be odd and >= 3");
  if (cfg.extension_height <= 0.0) bad("extension.height", "must be > 0");
  if (cfg.extension_levels < 2) bad("extension.levels", "must be >= 2");
  for (double R : cfg.renorm_R_list)
    if (R <= 0.0) bad("renormalization.R_list", "entries must be > 0");
  for (double e : cfg.blowdown_eps)
    if (e <= 0.0) bad("blowdown.eps_list", "entries must be > 0");
  for (double e : cfg.rescale_eps)
    if (e <= 0.0) bad("stability.eps_list", "entries must be > 0");
  if (cfg.stability_trials < 0) bad("stability.random_trials", "must be >= 0");
  if (cfg.sliding_k_steps < 2) bad("sliding.k_steps", "must be >= 2");
  if (cfg.minimality_trials < 0) bad("minimality.trials", "must be >= 0");
  if (cfg.minimality_R <= 0.0) bad("minimality.R", "must be > 0");
  if (cfg.collar < 1) bad("minimality.collar", "must be >= 1");
  if (cfg.glue_trials < 0) bad("glue.trials", "must be >= 0");

  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  std::string canon;
  for (const auto& e : entries) canon += e.key + " = " + e.value + "\n";
  cfg.canonical_text = std::move(canon);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return config_from_entries(detail::parse_config_text(in));
}

/// FNV-1a over the canonical text; stable across runs and machines.
inline std::string config_hash_hex(const ExperimentConfig& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : cfg.canonical_text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(12, '0');
  for (int i = 0; i < 12; ++i) out[i] = hex[(h >> (4 * (11 - i))) & 0xf];
  return out;
}

}  // namespace fraclab
