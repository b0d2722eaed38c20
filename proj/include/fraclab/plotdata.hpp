#pragma once

// Declarative plot descriptions from runner CSVs: picks the x/y columns and
// log flags for a known table kind and emits a JSON document with the series
// points inline, so any plotting tool can render it without re-parsing the
// CSV. No rendering happens here.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fraclab/config.hpp"
#include "fraclab/errors.hpp"

namespace fraclab {

enum class PlotKind {
  kRenormalization,
  kLayer,
  kBlowdown,
  kResidual,
  kRescaling,
  kSliding,
  kMinimality,
  kStability,
  kGlue,
};

inline PlotKind plot_kind_from_name(const std::string& name) {
  if (name == "renormalization") return PlotKind::kRenormalization;
  if (name == "layer") return PlotKind::kLayer;
  if (name == "blowdown") return PlotKind::kBlowdown;
  if (name == "residual") return PlotKind::kResidual;
  if (name == "rescaling") return PlotKind::kRescaling;
  if (name == "sliding") return PlotKind::kSliding;
  if (name == "minimality") return PlotKind::kMinimality;
  if (name == "stability") return PlotKind::kStability;
  if (name == "glue") return PlotKind::kGlue;
  throw ConfigError("plotdata: unknown kind '" + name + "'");
}

namespace detail {

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

inline CsvTable read_csv(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw NumericalError("plotdata: cannot open " + path);
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (first && has_header) {
      t.columns = split_csv_line(line);
      first = false;
      continue;
    }
    first = false;
    t.rows.push_back(split_csv_line(line));
  }
  return t;
}

inline int column_index(const CsvTable& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    if (t.columns[i] == name) return static_cast<int>(i);
  throw ConfigError("plotdata: missing column '" + name + "'");
}

inline double cell_double(const std::vector<std::string>& row, int idx) {
  return std::stod(row[static_cast<std::size_t>(idx)]);
}

inline nlohmann::json numeric_series(const CsvTable& t,
                                     const std::string& xcol,
                                     const std::string& ycol,
                                     const std::string& label,
                                     bool abs_y = false) {
  const int xi = column_index(t, xcol);
  const int yi = column_index(t, ycol);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& row : t.rows) {
    const double y = cell_double(row, yi);
    pts.push_back({cell_double(row, xi), abs_y ? std::abs(y) : y});
  }
  return {{"label", label}, {"points", pts}};
}

inline nlohmann::json axes(const std::string& xlabel, bool xlog,
                           const std::string& ylabel, bool ylog) {
  return {{"x", {{"label", xlabel}, {"log", xlog}}},
          {"y", {{"label", ylabel}, {"log", ylog}}}};
}

}  // namespace detail

/// Builds the plot description for a runner CSV. Throws ConfigError naming
/// the missing column on schema mismatch.
inline nlohmann::json plot_description(const std::string& csv_path,
                                       PlotKind kind) {
  using detail::axes;
  using detail::numeric_series;
  nlohmann::json doc;
  doc["source"] = csv_path;
  auto series = nlohmann::json::array();

  switch (kind) {
    case PlotKind::kRenormalization: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "renormalization";
      doc["axes"] = axes("R", true, "relative gap", true);
      series.push_back(numeric_series(t, "R", "gap12", "|extension - gagliardo|", true));
      series.push_back(numeric_series(t, "R", "gap13", "|extension_inf - gagliardo|", true));
      break;
    }
    case PlotKind::kLayer: {
      const auto t = detail::read_csv(csv_path, false);
      doc["kind"] = "layer";
      doc["axes"] = axes("x", false, "u", false);
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& row : t.rows) {
        if (row.size() < 2)
          throw ConfigError("plotdata: missing column 'value'");
        pts.push_back({std::stod(row.front()), std::stod(row.back())});
      }
      series.push_back({{"label", "u(x)"}, {"points", pts}});
      break;
    }
    case PlotKind::kBlowdown: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "blowdown";
      doc["axes"] = axes("eps", true, "L1 distance to the fitted step", false);
      series.push_back(numeric_series(t, "eps", "l1_distance", "L1 distance"));
      break;
    }
    case PlotKind::kResidual: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "residual";
      doc["axes"] = axes("sample", false, "residual", true);
      series.push_back(numeric_series(t, "sample", "residual", "residual"));
      break;
    }
    case PlotKind::kRescaling: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "rescaling";
      doc["axes"] = axes("eps", true, "term magnitude", true);
      series.push_back(numeric_series(t, "eps", "dirichlet", "dirichlet term"));
      series.push_back(numeric_series(t, "eps", "potential", "|potential term|", true));
      break;
    }
    case PlotKind::kSliding: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "sliding";
      doc["axes"] = axes("k", false, "min gap", false);
      series.push_back(numeric_series(t, "k", "min_gap", "min over nodes of w_k - w_o"));
      break;
    }
    case PlotKind::kMinimality: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "minimality";
      doc["axes"] = axes("trial", false, "functional difference", false);
      series.push_back(numeric_series(t, "trial", "value", "difference"));
      break;
    }
    case PlotKind::kStability: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "stability";
      doc["axes"] = axes("case", false, "normalized form value", false);
      const int yi = detail::column_index(t, "ratio");
      nlohmann::json pts = nlohmann::json::array();
      for (std::size_t i = 0; i < t.rows.size(); ++i)
        pts.push_back({static_cast<double>(i),
                       detail::cell_double(t.rows[i], yi)});
      series.push_back({{"label", "form / norm"}, {"points", pts}});
      break;
    }
    case PlotKind::kGlue: {
      const auto t = detail::read_csv(csv_path, true);
      doc["kind"] = "glue";
      doc["axes"] = axes("trial", false, "min ledger slack", false);
      series.push_back(numeric_series(t, "trial", "min_slack", "min slack"));
      break;
    }
  }
  doc["series"] = series;
  return doc;
}

}  // namespace fraclab
