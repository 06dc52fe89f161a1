#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "steincov/coverage.hpp"
#include "steincov/density.hpp"
#include "steincov/pipeline.hpp"
#include "steincov/report.hpp"

namespace steincov {

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// White to deep blue.
inline std::string heat_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto mix = [t](double a, double b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(255, 8), mix(255, 48), mix(255, 107));
  return buf;
}

inline std::string method_color(Method m) {
  switch (m) {
    case Method::kStein: return "#d62728";
    case Method::kVoronoi: return "#2ca02c";
    case Method::kPower: return "#9467bd";
  }
  return "#000000";
}

}  // namespace detail

/// Degrees for the SVG rotate() of a footprint: body major-axis angle plus the pose angle.
inline double footprint_rotation_degrees(const SensorModel& s, const Pose& pose) {
  const double body = s.is_isotropic() ? 0.0 : s.major_axis_angle();
  return (body + pose.theta) * 180.0 / kPi;
}

/**
 * One static figure: density heatmap, deployed positions, footprints and a
 * legend. World coordinates live in a y-flipped group so north is up.
 */
inline std::string render_svg(const MethodResult& result, const std::vector<SensorModel>& sensors,
                              const GaussianMixture& gmm, const Workspace& ws) {
  using detail::fmt;
  constexpr double kPixels = 600.0;
  constexpr double kPad = 20.0;
  constexpr double kLegend = 60.0;
  const double scale = kPixels / std::max(ws.width(), ws.height());
  const double w = ws.width() * scale + 2 * kPad;
  const double h = ws.height() * scale + 2 * kPad + kLegend;

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
       "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"#ffffff\"/>\n";
  s += "<g id=\"world\" transform=\"translate(" + fmt(kPad) + " " + fmt(kPad + ws.height() * scale) + ") scale(" +
       fmt(scale) + " " + fmt(-scale) + ") translate(" + fmt(-ws.x_min) + " " + fmt(-ws.y_min) + ")\">\n";

  // Heatmap at no more than 100 x 100 cells.
  const Workspace hw = ws.with_resolution(std::min(ws.grid_resolution, 100));
  std::vector<double> vals(hw.cell_count());
  double vmax = 0.0;
  for (std::size_t c = 0; c < vals.size(); ++c) {
    vals[c] = gmm.density(hw.cell_center(c));
    vmax = std::max(vmax, vals[c]);
  }
  s += "<g id=\"heatmap\" shape-rendering=\"crispEdges\">\n";
  for (std::size_t c = 0; c < vals.size(); ++c) {
    const Vec2 ctr = hw.cell_center(c);
    s += "<rect x=\"" + fmt(ctr.x() - 0.5 * hw.cell_width()) + "\" y=\"" + fmt(ctr.y() - 0.5 * hw.cell_height()) +
         "\" width=\"" + fmt(hw.cell_width()) + "\" height=\"" + fmt(hw.cell_height()) + "\" fill=\"" +
         detail::heat_color(vmax > 0 ? vals[c] / vmax : 0.0) + "\"/>\n";
  }
  s += "</g>\n";

  const std::string color = detail::method_color(result.method);
  const double stroke = 0.15 * std::max(ws.width(), ws.height()) / 50.0;
  s += "<g id=\"footprints\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"" + color +
       "\" stroke-width=\"" + fmt(stroke) + "\">\n";
  for (std::size_t i = 0; i < result.poses.size() && i < sensors.size(); ++i) {
    const auto& sm = sensors[i];
    const Vec2& p = result.poses[i].position;
    if (sm.shape == FootprintShape::kDisc) {
      s += "<circle cx=\"" + fmt(p.x()) + "\" cy=\"" + fmt(p.y()) + "\" r=\"" + fmt(sm.disc_radius) + "\"/>\n";
    } else {
      Eigen::SelfAdjointEigenSolver<Mat2> eig(sm.covariance);
      const double rx = sm.ellipse_level * std::sqrt(eig.eigenvalues()(1));
      const double ry = sm.ellipse_level * std::sqrt(eig.eigenvalues()(0));
      s += "<ellipse cx=\"" + fmt(p.x()) + "\" cy=\"" + fmt(p.y()) + "\" rx=\"" + fmt(rx) + "\" ry=\"" + fmt(ry) +
           "\" transform=\"rotate(" + fmt(footprint_rotation_degrees(sm, result.poses[i])) + " " + fmt(p.x()) +
           " " + fmt(p.y()) + ")\"/>\n";
    }
  }
  s += "</g>\n";

  s += "<g id=\"points\" fill=\"#000000\">\n";
  const double dot = 0.35 * std::max(ws.width(), ws.height()) / 50.0;
  for (const auto& p : result.pois) {
    s += "<circle cx=\"" + fmt(p.x()) + "\" cy=\"" + fmt(p.y()) + "\" r=\"" + fmt(0.6 * dot) +
         "\" fill=\"#777777\"/>\n";
  }
  for (const auto& pose : result.poses) {
    s += "<circle cx=\"" + fmt(pose.position.x()) + "\" cy=\"" + fmt(pose.position.y()) + "\" r=\"" + fmt(dot) +
         "\"/>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + fmt(ws.x_min) + "\" y=\"" + fmt(ws.y_min) + "\" width=\"" + fmt(ws.width()) + "\" height=\"" +
       fmt(ws.height()) + "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"" + fmt(stroke) + "\"/>\n";
  s += "</g>\n";

  const double ly = kPad * 2 + ws.height() * scale;
  s += "<g id=\"legend\" font-family=\"sans-serif\" font-size=\"14\">\n";
  s += "<rect x=\"" + fmt(kPad) + "\" y=\"" + fmt(ly) + "\" width=\"14\" height=\"14\" fill=\"" + color + "\"/>\n";
  std::string label = "method: " + to_string(result.method);
  if (!result.ok) label += " (failed)";
  if (result.ok) label += "  KL(q||p) = " + fmt(result.metrics.kl_qp) + "  covered mass = " + fmt(result.metrics.covered_mass);
  s += "<text x=\"" + fmt(kPad + 22) + "\" y=\"" + fmt(ly + 12) + "\">" + label + "</text>\n";
  s += "<text x=\"" + fmt(kPad + 22) + "\" y=\"" + fmt(ly + 32) +
       "\">dots: deployed sensors; grey: PoIs; shading: event density</text>\n";
  s += "</g>\n</svg>\n";
  return s;
}

/// Writes <method>.svg for every method in the report.
inline std::vector<std::filesystem::path> emit_svg(const RunReport& rep, const GaussianMixture& gmm,
                                                   const Workspace& ws, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto sensors = rep.scenario.sensor_models();
  std::vector<std::filesystem::path> written;
  for (const auto& r : rep.methods) {
    written.push_back(dir / (to_string(r.method) + ".svg"));
    detail::write_file(written.back(), render_svg(r, sensors, gmm, ws));
  }
  return written;
}

}  // namespace steincov
