#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "steincov/pipeline.hpp"
#include "steincov/scenario.hpp"

namespace steincov {

namespace detail {

// Non-finite numbers are written as null; null reads back as `missing`.
inline Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double num_from(const Json& j, double missing = std::nan("")) {
  return j.is_null() ? missing : j.get<double>();
}

inline Json matrix_json(const Matrix& m, bool null_is_inf) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(null_is_inf ? num(m(i, j)) : Json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from(const Json& j, bool null_is_inf) {
  Matrix m(j.size(), j.empty() ? 0 : j[0].size());
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t k = 0; k < m.cols; ++k) {
      m(i, k) = num_from(j[i][k], null_is_inf ? std::numeric_limits<double>::infinity() : std::nan(""));
    }
  }
  return m;
}

inline Json points_json(const PointList& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back({p.x(), p.y()});
  return a;
}

inline PointList points_from(const Json& j) {
  PointList pts;
  for (const auto& p : j) pts.emplace_back(p[0].get<double>(), p[1].get<double>());
  return pts;
}

inline Method method_named(const std::string& s) { return method_from(s, "method"); }

}  // namespace detail

inline Json metrics_to_json(const MethodMetrics& m) {
  using detail::num;
  return {{"kl_qp", num(m.kl_qp)},
          {"kl_pq", num(m.kl_pq)},
          {"min_pairwise_distance", num(m.min_pairwise_distance)},
          {"overlap_fraction", num(m.overlap_fraction)},
          {"covered_mass", num(m.covered_mass)},
          {"spread_deficit", num(m.spread_deficit)},
          {"wall_ms", m.wall_ms}};
}

inline MethodMetrics metrics_from_json(const Json& j) {
  using detail::num_from;
  MethodMetrics m;
  m.kl_qp = num_from(j.at("kl_qp"));
  m.kl_pq = num_from(j.at("kl_pq"));
  m.min_pairwise_distance = num_from(j.at("min_pairwise_distance"));
  m.overlap_fraction = num_from(j.at("overlap_fraction"));
  m.covered_mass = num_from(j.at("covered_mass"));
  m.spread_deficit = num_from(j.at("spread_deficit"));
  m.wall_ms = j.at("wall_ms").get<double>();
  return m;
}

inline Json method_to_json(const MethodResult& r, const Scenario& sc) {
  Json j;
  j["method"] = to_string(r.method);
  j["ok"] = r.ok;
  j["failure"] = r.failure;
  Json poses = Json::array();
  for (std::size_t i = 0; i < r.poses.size(); ++i) {
    poses.push_back({{"sensor", i < sc.sensors.size() ? sc.sensors[i].id : static_cast<int>(i)},
                     {"position", {r.poses[i].position.x(), r.poses[i].position.y()}},
                     {"theta", r.poses[i].theta}});
  }
  j["deployment"] = poses;
  j["metrics"] = metrics_to_json(r.metrics);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  if (r.method == Method::kStein) {
    j["pois"] = detail::points_json(r.pois);
    j["map_indices"] = r.map_indices;
    j["ksd"] = detail::num(r.ksd);
    if (r.matching) {
      Json pairs = Json::array();
      for (const auto& [s, p] : r.matching->pairs) pairs.push_back({s, p});
      j["matching"] = {{"pairs", pairs}, {"orientations", r.matching->orientations},
                       {"total_cost", detail::num(r.matching->total_cost)}};
    }
    if (r.costs) {
      j["cost_matrix"] = detail::matrix_json(r.costs->cost, true);
      j["orientation_matrix"] = detail::matrix_json(r.costs->orientation, false);
    }
  } else {
    Json hist = Json::array();
    for (double c : r.cost_history) hist.push_back(detail::num(c));
    j["cost_history"] = hist;
    j["empty_cells"] = r.empty_cells;
  }
  return j;
}

inline MethodResult method_from_json(const Json& j) {
  MethodResult r;
  r.method = detail::method_named(j.at("method").get<std::string>());
  r.ok = j.at("ok").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  for (const auto& p : j.at("deployment")) {
    r.poses.push_back({{p.at("position")[0].get<double>(), p.at("position")[1].get<double>()},
                       p.at("theta").get<double>()});
  }
  r.metrics = metrics_from_json(j.at("metrics"));
  r.iterations = j.at("iterations").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  if (r.method == Method::kStein) {
    r.pois = detail::points_from(j.at("pois"));
    r.map_indices = j.at("map_indices").get<std::vector<std::size_t>>();
    r.ksd = detail::num_from(j.at("ksd"));
    if (j.contains("matching")) {
      Matching m;
      for (const auto& p : j["matching"]["pairs"]) m.pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
      m.orientations = j["matching"]["orientations"].get<std::vector<double>>();
      m.total_cost = detail::num_from(j["matching"]["total_cost"]);
      r.matching = m;
    }
    if (j.contains("cost_matrix")) {
      r.costs = CostMatrices{detail::matrix_from(j["cost_matrix"], true),
                             detail::matrix_from(j["orientation_matrix"], false)};
    }
  } else {
    for (const auto& c : j.at("cost_history")) r.cost_history.push_back(detail::num_from(c));
    r.empty_cells = j.at("empty_cells").get<std::vector<std::size_t>>();
  }
  return r;
}

inline Json trace_to_json(const Trace& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back({r.iteration, detail::num(r.max_displacement), detail::num(r.spread_deficit), detail::num(r.trace_var)});
  }
  Json summary = {{"iterations", t.rows.size()}, {"converged", t.converged}};
  if (!t.rows.empty()) {
    summary["final_max_displacement"] = detail::num(t.rows.back().max_displacement);
    summary["final_spread_deficit"] = detail::num(t.rows.back().spread_deficit);
    summary["final_trace_var"] = detail::num(t.rows.back().trace_var);
  }
  return {{"summary", summary}, {"columns", {"iteration", "max_displacement", "spread_deficit", "trace_var"}}, {"rows", rows}};
}

inline Trace trace_from_json(const Json& j) {
  Trace t;
  t.converged = j.at("summary").at("converged").get<bool>();
  for (const auto& r : j.at("rows")) {
    t.rows.push_back({r[0].get<std::size_t>(), detail::num_from(r[1]), detail::num_from(r[2]), detail::num_from(r[3])});
  }
  return t;
}

inline Json report_to_json(const RunReport& rep) {
  Json j;
  j["scenario"] = scenario_to_json(rep.scenario);
  j["resolution"] = {{"dropped_sensors", rep.scenario.dropped_sensors}, {"warnings", rep.scenario.warnings}};
  Json methods = Json::array();
  for (const auto& m : rep.methods) methods.push_back(method_to_json(m, rep.scenario));
  j["methods"] = methods;
  j["svgd_trace"] = rep.trace ? trace_to_json(*rep.trace) : Json(nullptr);
  j["total_wall_ms"] = rep.total_wall_ms;
  return j;
}

inline RunReport report_from_json(const Json& j) {
  RunReport rep;
  rep.scenario = scenario_from_json(j.at("scenario"));
  rep.scenario.dropped_sensors = j.at("resolution").at("dropped_sensors").get<std::vector<int>>();
  rep.scenario.warnings = j.at("resolution").at("warnings").get<std::vector<std::string>>();
  for (const auto& m : j.at("methods")) rep.methods.push_back(method_from_json(m));
  if (!j.at("svgd_trace").is_null()) rep.trace = trace_from_json(j["svgd_trace"]);
  rep.total_wall_ms = j.at("total_wall_ms").get<double>();
  return rep;
}

/// Removes timing fields, which are the only nondeterministic part of a report.
inline Json strip_timing(Json j) {
  if (j.is_object()) {
    j.erase("wall_ms");
    j.erase("total_wall_ms");
    for (auto& [k, v] : j.items()) v = strip_timing(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timing(v);
  }
  return j;
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline const char* kMetricsHeader =
    "method,kl_qp,kl_pq,min_pairwise_distance,overlap_fraction,covered_mass,spread_deficit,wall_ms";

inline std::string metrics_csv(const RunReport& rep) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rep.methods) {
    const auto& m = r.metrics;
    out += to_string(r.method);
    for (double v : {m.kl_qp, m.kl_pq, m.min_pairwise_distance, m.overlap_fraction, m.covered_mass,
                     m.spread_deficit, m.wall_ms}) {
      out += "," + format_number(v);
    }
    out += "\n";
  }
  return out;
}

inline std::string trace_csv(const Trace& t) {
  std::string out = "iteration,max_displacement,spread_deficit,trace_var\n";
  for (const auto& r : t.rows) {
    out += std::to_string(r.iteration) + "," + format_number(r.max_displacement) + "," +
           format_number(r.spread_deficit) + "," + format_number(r.trace_var) + "\n";
  }
  return out;
}

namespace detail {
inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}
}  // namespace detail

/// Writes report.json, metrics.csv and, when SVGD ran, trace.csv. Returns the written paths.
inline std::vector<std::filesystem::path> emit_report(const RunReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written{dir / "report.json", dir / "metrics.csv"};
  detail::write_file(written[0], report_to_json(rep).dump(2) + "\n");
  detail::write_file(written[1], metrics_csv(rep));
  if (rep.trace) {
    written.push_back(dir / "trace.csv");
    detail::write_file(written.back(), trace_csv(*rep.trace));
  }
  return written;
}

inline RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  return report_from_json(Json::parse(in));
}

}  // namespace steincov
