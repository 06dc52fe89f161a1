#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "steincov/coverage.hpp"
#include "steincov/density.hpp"
#include "steincov/metrics.hpp"
#include "steincov/svgd.hpp"

namespace steincov {

using Json = nlohmann::ordered_json;

/// Thrown for any scenario problem; the message names the offending field or location.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SensorSpec {
  int id = 0;
  bool anisotropic = false;
  double sigma = 1.0;           // isotropic only
  Mat2 cov = Mat2::Identity();  // anisotropic only
  double footprint_scale = 2.0;

  SensorModel model() const {
    return anisotropic ? SensorModel::anisotropic(id, cov, footprint_scale)
                       : SensorModel::isotropic(id, sigma, footprint_scale);
  }
};

/// Fully resolved run configuration: every default is filled in at parse time.
struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 0;
  Workspace workspace;
  std::vector<GaussianComponent> gmm_components;
  std::vector<SensorSpec> sensors;
  std::vector<Method> methods;
  SvgdConfig svgd;
  std::size_t poi_count = 0;
  std::size_t orientation_count = 16;
  std::size_t lloyd_max_iterations = 200;
  double lloyd_tolerance = 1e-4;
  bool symmetrize_covariances = false;
  bool drop_invalid_sensors = false;
  std::string output_dir = "out";

  // Resolution notes, echoed back in the report.
  std::vector<int> dropped_sensors;
  std::vector<std::string> warnings;

  GaussianMixture gmm() const { return GaussianMixture(gmm_components); }

  std::vector<SensorModel> sensor_models() const {
    std::vector<SensorModel> out;
    for (const auto& s : sensors) out.push_back(s.model());
    return out;
  }

  OrientationGrid orientations() const { return OrientationGrid::uniform(orientation_count); }

  bool has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
};

namespace detail {

/// Object view that remembers which keys were consumed and rejects the rest.
class Fields {
 public:
  Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(path_, "expected an object");
  }

  bool contains(const std::string& key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const Json& required(const std::string& key) {
    seen_.insert(key);
    if (!contains(key)) fail(at(key), "missing required field");
    return obj_.at(key);
  }

  const Json* optional(const std::string& key) {
    seen_.insert(key);
    return contains(key) ? &obj_.at(key) : nullptr;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  [[noreturn]] static void fail(const std::string& where, const std::string& what) {
    throw ScenarioError("scenario: " + where + ": " + what);
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) Fields::fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) Fields::fail(where, "expected a finite number");
  return v;
}

inline double positive(const Json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) Fields::fail(where, "must be positive");
  return v;
}

inline std::uint64_t count(const Json& j, const std::string& where, std::uint64_t min_value) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
    Fields::fail(where, "expected an integer >= " + std::to_string(min_value));
  }
  return j.get<std::uint64_t>();
}

inline bool boolean(const Json& j, const std::string& where) {
  if (!j.is_boolean()) Fields::fail(where, "expected true or false");
  return j.get<bool>();
}

inline std::string string(const Json& j, const std::string& where) {
  if (!j.is_string()) Fields::fail(where, "expected a string");
  return j.get<std::string>();
}

inline Vec2 vec2(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) Fields::fail(where, "expected [x, y]");
  return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

inline Mat2 mat2(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || !j[1].is_array() || j[0].size() != 2 ||
      j[1].size() != 2) {
    Fields::fail(where, "expected [[a, b], [c, d]]");
  }
  Mat2 m;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      m(r, c) = number(j[r][c], where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

inline Method method_from(const std::string& s, const std::string& where) {
  if (s == "stein") return Method::kStein;
  if (s == "voronoi") return Method::kVoronoi;
  if (s == "power") return Method::kPower;
  Fields::fail(where, "unknown method '" + s + "' (expected stein, voronoi or power)");
}

inline Json mat_json(const Mat2& m) { return Json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

/// 1-based line and column of a byte offset.
inline std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Builds a validated scenario from a parsed JSON document.
inline Scenario scenario_from_json(const Json& doc) {
  using namespace detail;
  Scenario sc;
  Fields root(doc, "");

  if (const auto* v = root.optional("name")) sc.name = string(*v, "name");
  if (const auto* v = root.optional("description")) sc.description = string(*v, "description");
  sc.seed = count(root.required("seed"), "seed", 0);

  {
    Fields f(root.required("workspace"), "workspace");
    auto& ws = sc.workspace;
    ws.x_min = number(f.required("x_min"), f.at("x_min"));
    ws.x_max = number(f.required("x_max"), f.at("x_max"));
    ws.y_min = number(f.required("y_min"), f.at("y_min"));
    ws.y_max = number(f.required("y_max"), f.at("y_max"));
    ws.grid_resolution = 100;
    if (const auto* v = f.optional("grid_resolution")) {
      ws.grid_resolution = static_cast<int>(count(*v, f.at("grid_resolution"), 2));
    }
    f.finish();
    try {
      ws.validate();
    } catch (const std::invalid_argument& e) {
      Fields::fail("workspace", e.what());
    }
  }

  if (const auto* v = root.optional("symmetrize_covariances")) {
    sc.symmetrize_covariances = boolean(*v, "symmetrize_covariances");
  }
  if (const auto* v = root.optional("drop_invalid_sensors")) {
    sc.drop_invalid_sensors = boolean(*v, "drop_invalid_sensors");
  }

  {
    const Json& arr = root.required("gmm");
    if (!arr.is_array() || arr.empty()) Fields::fail("gmm", "expected a non-empty array of components");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string path = "gmm[" + std::to_string(k) + "]";
      Fields f(arr[k], path);
      GaussianComponent c;
      c.weight = number(f.required("weight"), f.at("weight"));
      c.mean = vec2(f.required("mean"), f.at("mean"));
      c.covariance = mat2(f.required("cov"), f.at("cov"));
      f.finish();
      if (sc.symmetrize_covariances) c.covariance = 0.5 * (c.covariance + c.covariance.transpose()).eval();
      if (!is_spd(c.covariance)) Fields::fail(path + ".cov", "covariance must be symmetric positive definite");
      sc.gmm_components.push_back(c);
    }
    try {
      (void)sc.gmm();
    } catch (const std::invalid_argument& e) {
      Fields::fail("gmm", e.what());
    }
  }

  {
    const Json& arr = root.required("sensors");
    if (!arr.is_array() || arr.empty()) Fields::fail("sensors", "expected a non-empty array");
    std::set<int> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "sensors[" + std::to_string(i) + "]";
      Fields f(arr[i], path);
      SensorSpec s;
      s.id = static_cast<int>(i);
      if (const auto* v = f.optional("id")) s.id = static_cast<int>(count(*v, f.at("id"), 0));
      if (!ids.insert(s.id).second) Fields::fail(f.at("id"), "duplicate sensor id " + std::to_string(s.id));
      const std::string label = path + " (sensor " + std::to_string(s.id) + ")";
      const std::string type = string(f.required("type"), f.at("type"));
      if (const auto* v = f.optional("footprint_scale")) s.footprint_scale = positive(*v, f.at("footprint_scale"));
      if (type == "isotropic") {
        const auto* sigma = f.optional("sigma");
        const auto* radius = f.optional("radius");
        if ((sigma == nullptr) == (radius == nullptr)) {
          Fields::fail(label, "isotropic sensors need exactly one of sigma or radius");
        }
        s.sigma = sigma ? positive(*sigma, f.at("sigma")) : positive(*radius, f.at("radius")) / s.footprint_scale;
      } else if (type == "anisotropic") {
        s.anisotropic = true;
        s.cov = mat2(f.required("cov"), f.at("cov"));
        if (sc.symmetrize_covariances) s.cov = 0.5 * (s.cov + s.cov.transpose()).eval();
        if (!is_spd(s.cov)) {
          if (sc.drop_invalid_sensors) {
            sc.dropped_sensors.push_back(s.id);
            sc.warnings.push_back(label + ": covariance is not symmetric positive definite; sensor dropped");
            f.finish();
            continue;
          }
          Fields::fail(label + ".cov", "covariance must be symmetric positive definite");
        }
      } else {
        Fields::fail(f.at("type"), "unknown sensor type '" + type + "' (expected isotropic or anisotropic)");
      }
      f.finish();
      sc.sensors.push_back(s);
    }
    if (sc.sensors.empty()) Fields::fail("sensors", "no valid sensors remain");
  }

  {
    const Json& arr = root.required("methods");
    if (!arr.is_array() || arr.empty()) Fields::fail("methods", "expected a non-empty array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = "methods[" + std::to_string(i) + "]";
      const Method m = method_from(string(arr[i], where), where);
      if (sc.has(m)) Fields::fail(where, "duplicate method");
      sc.methods.push_back(m);
    }
  }

  double max_bound = 0.0;
  for (const auto& s : sc.sensors) max_bound = std::max(max_bound, s.model().footprint_bound());
  sc.svgd.spread_radius = max_bound;
  sc.poi_count = sc.sensors.size();

  if (const auto* node = root.optional("svgd")) {
    Fields f(*node, "svgd");
    auto& c = sc.svgd;
    if (const auto* v = f.optional("step_size")) c.step_size = positive(*v, f.at("step_size"));
    if (const auto* v = f.optional("max_iterations")) c.max_iterations = count(*v, f.at("max_iterations"), 0);
    if (const auto* v = f.optional("spread_radius")) c.spread_radius = positive(*v, f.at("spread_radius"));
    if (const auto* v = f.optional("map_particle_count")) {
      c.map_particle_count = count(*v, f.at("map_particle_count"), 0);
    }
    if (const auto* v = f.optional("regulated")) c.regulated = boolean(*v, f.at("regulated"));
    if (const auto* v = f.optional("convergence_tolerance")) {
      c.convergence_tolerance = positive(*v, f.at("convergence_tolerance"));
    }
    if (const auto* v = f.optional("adaptive_step")) c.adaptive_step = boolean(*v, f.at("adaptive_step"));
    if (const auto* v = f.optional("bandwidth")) {
      if (v->is_string()) {
        if (v->get<std::string>() != "median") Fields::fail(f.at("bandwidth"), "expected a number or \"median\"");
        c.bandwidth.reset();
      } else {
        c.bandwidth = positive(*v, f.at("bandwidth"));
      }
    }
    if (const auto* v = f.optional("variance_floor")) c.variance_floor = positive(*v, f.at("variance_floor"));
    if (const auto* v = f.optional("weight_mode")) {
      const std::string mode = string(*v, f.at("weight_mode"));
      if (mode == "matrix") {
        c.weight_mode = WeightMode::kMatrixExponential;
      } else if (mode == "scalar") {
        c.weight_mode = WeightMode::kScalar;
      } else {
        Fields::fail(f.at("weight_mode"), "expected \"matrix\" or \"scalar\"");
      }
    }
    if (const auto* v = f.optional("poi_count")) sc.poi_count = count(*v, f.at("poi_count"), 1);
    f.finish();
  }
  if (sc.poi_count < sc.sensors.size()) Fields::fail("svgd.poi_count", "must be >= the number of sensors");
  if (!sc.svgd.map_particle_count) sc.svgd.map_particle_count = sc.svgd.resolved_map_count(sc.poi_count);
  if (*sc.svgd.map_particle_count > sc.poi_count) {
    Fields::fail("svgd.map_particle_count", "must not exceed poi_count");
  }
  for (const auto& s : sc.sensors) {
    if (s.model().footprint_bound() > sc.svgd.spread_radius + 1e-12) {
      std::ostringstream os;
      os << "sensor " << s.id << ": footprint bound " << s.model().footprint_bound()
         << " exceeds spread_radius " << sc.svgd.spread_radius;
      sc.warnings.push_back(os.str());
    }
  }

  if (const auto* v = root.optional("orientations")) sc.orientation_count = count(*v, "orientations", 1);
  if (const auto* node = root.optional("lloyd")) {
    Fields f(*node, "lloyd");
    if (const auto* v = f.optional("max_iterations")) sc.lloyd_max_iterations = count(*v, f.at("max_iterations"), 0);
    if (const auto* v = f.optional("tolerance")) sc.lloyd_tolerance = positive(*v, f.at("tolerance"));
    f.finish();
  }
  if (const auto* v = root.optional("output_dir")) sc.output_dir = string(*v, "output_dir");
  root.finish();
  return sc;
}

/// Parses text; JSON syntax errors are reported with line and column.
inline Scenario parse_scenario_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("scenario: malformed JSON at " + detail::location(text, e.byte) + ": " + e.what());
  }
  return scenario_from_json(doc);
}

inline Scenario parse_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("scenario: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario_text(buf.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path + ": " + e.what());
  }
}

/// The resolved scenario as JSON. Re-parsing the result yields the same scenario.
inline Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["name"] = sc.name;
  j["description"] = sc.description;
  j["seed"] = sc.seed;
  j["workspace"] = {{"x_min", sc.workspace.x_min},
                    {"x_max", sc.workspace.x_max},
                    {"y_min", sc.workspace.y_min},
                    {"y_max", sc.workspace.y_max},
                    {"grid_resolution", sc.workspace.grid_resolution}};
  j["symmetrize_covariances"] = sc.symmetrize_covariances;
  j["drop_invalid_sensors"] = sc.drop_invalid_sensors;
  j["gmm"] = Json::array();
  for (const auto& c : sc.gmm_components) {
    j["gmm"].push_back({{"weight", c.weight}, {"mean", {c.mean.x(), c.mean.y()}}, {"cov", detail::mat_json(c.covariance)}});
  }
  j["sensors"] = Json::array();
  for (const auto& s : sc.sensors) {
    Json js = {{"id", s.id}, {"type", s.anisotropic ? "anisotropic" : "isotropic"}};
    if (s.anisotropic) {
      js["cov"] = detail::mat_json(s.cov);
    } else {
      js["sigma"] = s.sigma;
    }
    js["footprint_scale"] = s.footprint_scale;
    j["sensors"].push_back(js);
  }
  j["methods"] = Json::array();
  for (auto m : sc.methods) j["methods"].push_back(to_string(m));
  const auto& c = sc.svgd;
  Json bw = "median";
  if (c.bandwidth) bw = *c.bandwidth;
  j["svgd"] = {{"step_size", c.step_size},
               {"max_iterations", c.max_iterations},
               {"spread_radius", c.spread_radius},
               {"map_particle_count", c.map_particle_count.value_or(0)},
               {"regulated", c.regulated},
               {"convergence_tolerance", c.convergence_tolerance},
               {"adaptive_step", c.adaptive_step},
               {"bandwidth", bw},
               {"variance_floor", c.variance_floor},
               {"weight_mode", c.weight_mode == WeightMode::kScalar ? "scalar" : "matrix"},
               {"poi_count", sc.poi_count}};
  j["orientations"] = sc.orientation_count;
  j["lloyd"] = {{"max_iterations", sc.lloyd_max_iterations}, {"tolerance", sc.lloyd_tolerance}};
  j["output_dir"] = sc.output_dir;
  return j;
}

}  // namespace steincov
