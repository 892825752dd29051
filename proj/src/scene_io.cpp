#include "tdoa/scene_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace tdoa {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail(where, std::string("missing required field \"") + key + "\"");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& where) {
  const json& v = require(j, key, where);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

Vec parse_vec(const json& j, int dimension, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dimension) {
    fail(where, "expected an array of " + std::to_string(dimension) + " numbers");
  }
  Vec v(dimension);
  for (int k = 0; k < dimension; ++k) {
    if (!j[k].is_number()) fail(where, "expected an array of numbers");
    v[k] = j[k].get<double>();
  }
  return v;
}

Box parse_box(const json& j, int dimension, const std::string& where) {
  Box b;
  b.min = parse_vec(require(j, "min", where), dimension, where + ".min");
  b.max = parse_vec(require(j, "max", where), dimension, where + ".max");
  return b;
}

Material parse_material(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "material must be a string");
  const std::string s = j.get<std::string>();
  if (s == "blocking") return Material::Blocking;
  if (s == "metal") return Material::Metal;
  if (s == "non_metal") return Material::NonMetal;
  fail(where, "unknown material \"" + s +
                  "\" (expected \"blocking\", \"metal\", or \"non_metal\")");
}

void check_schema_version(const json& j, const std::string& where) {
  if (!j.contains("schema_version")) return;
  if (!j["schema_version"].is_number_integer() || j["schema_version"].get<int>() != 1) {
    fail(where, "unsupported schema_version (expected 1)");
  }
}

LogNormalParams parse_lognormal(const json& j, const std::string& where) {
  LogNormalParams p;
  p.mu = require_number(j, "mu", where);
  p.s = require_number(j, "s", where);
  p.sign = +1;
  return p;
}

std::string line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return std::to_string(line);
}

}  // namespace

SceneFile parse_scene(const json& j) {
  const std::string where = "scene";
  if (!j.is_object()) fail(where, "document must be a JSON object");
  check_schema_version(j, where);

  SceneFile file;
  Scene& scene = file.scene;

  const json& dim = require(j, "dimension", where);
  if (!dim.is_number_integer()) fail(where + ".dimension", "expected 2 or 3");
  scene.dimension = dim.get<int>();
  if (scene.dimension != 2 && scene.dimension != 3) fail(where + ".dimension", "expected 2 or 3");

  scene.bounds = parse_box(require(j, "bounds", where), scene.dimension, where + ".bounds");

  if (j.contains("obstacles")) {
    const json& obs = j["obstacles"];
    if (!obs.is_array()) fail(where + ".obstacles", "expected an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const std::string ow = where + ".obstacles[" + std::to_string(i) + "]";
      Obstacle o;
      o.box = parse_box(obs[i], scene.dimension, ow);
      o.material = parse_material(require(obs[i], "material", ow), ow);
      scene.obstacles.push_back(o);
    }
  }

  if (j.contains("feasible")) {
    const json& fs = j["feasible"];
    const std::string fw = where + ".feasible";
    const json& kind = require(fs, "kind", fw);
    if (!kind.is_string()) fail(fw + ".kind", "expected a string");
    const std::string ks = kind.get<std::string>();
    if (ks == "free_space") {
      scene.feasible.kind = FeasibilityKind::FreeSpace;
    } else if (ks == "boundary") {
      scene.feasible.kind = FeasibilityKind::Boundary;
    } else if (ks == "explicit") {
      scene.feasible.kind = FeasibilityKind::ExplicitSet;
      if (fs.contains("points")) {
        for (std::size_t i = 0; i < fs["points"].size(); ++i) {
          scene.feasible.points.push_back(parse_vec(
              fs["points"][i], scene.dimension, fw + ".points[" + std::to_string(i) + "]"));
        }
      }
      if (fs.contains("faces")) {
        for (std::size_t i = 0; i < fs["faces"].size(); ++i) {
          scene.feasible.faces.push_back(parse_box(fs["faces"][i], scene.dimension,
                                                   fw + ".faces[" + std::to_string(i) + "]"));
        }
      }
    } else {
      fail(fw + ".kind",
           "unknown kind \"" + ks + "\" (expected \"free_space\", \"boundary\", or \"explicit\")");
    }
  }

  scene.operating_range = require_number(j, "operating_range", where);

  const json& roi = require(j, "roi", where);
  const std::string rw = where + ".roi";
  if (roi.contains("points") == roi.contains("grid")) {
    fail(rw, "expected exactly one of \"points\" or \"grid\"");
  }
  if (roi.contains("points")) {
    const json& pts = roi["points"];
    if (!pts.is_array()) fail(rw + ".points", "expected an array");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      scene.sample_points.push_back(
          parse_vec(pts[i], scene.dimension, rw + ".points[" + std::to_string(i) + "]"));
    }
  } else {
    const json& grid = roi["grid"];
    const Box region = parse_box(grid, scene.dimension, rw + ".grid");
    const double spacing = require_number(grid, "spacing", rw + ".grid");
    scene.sample_points = grid_sample_roi(region, spacing, scene);
  }

  if (j.contains("noise")) {
    const json& nz = j["noise"];
    const std::string nw = where + ".noise";
    file.noise.sigma_los = require_number(nz, "sigma_los", nw);
    file.noise.common_tag = parse_lognormal(require(nz, "common_tag", nw), nw + ".common_tag");
    file.noise.severe_tag = parse_lognormal(require(nz, "severe_tag", nw), nw + ".severe_tag");
    file.noise.common_aa_std = require_number(nz, "common_aa_std", nw);
    file.noise.severe_aa_std = require_number(nz, "severe_aa_std", nw);
  } else {
    file.noise_defaulted = true;
  }

  validate_scene(scene);
  validate_noise_params(file.noise);
  return file;
}

SceneFile load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scene file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ":" + line_of_offset(text, e.byte) + ": " + e.what());
  }
  try {
    SceneFile file = parse_scene(j);
    if (file.noise_defaulted) {
      std::cerr << "warning: " << path << " has no \"noise\" block; using built-in defaults\n";
    }
    return file;
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

Placement parse_placement(const json& j, const Scene& scene) {
  const std::string where = "placement";
  if (!j.is_object()) fail(where, "document must be a JSON object");
  check_schema_version(j, where);
  const json& anchors = require(j, "anchors", where);
  if (!anchors.is_array()) fail(where + ".anchors", "expected an array");
  Placement placement;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    placement.anchors.push_back(parse_vec(anchors[i], scene.dimension,
                                          where + ".anchors[" + std::to_string(i) + "]"));
  }
  validate_placement(scene, placement);
  return placement;
}

Placement load_placement(const std::string& path, const Scene& scene) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open placement file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ":" + line_of_offset(text, e.byte) + ": " + e.what());
  }
  try {
    return parse_placement(j, scene);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

double round_sig(double value, int digits) {
  if (!std::isfinite(value)) return value;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return std::strtod(buf, nullptr);
}

json json_metric(double value) {
  if (!std::isfinite(value)) return nullptr;
  return round_sig(value);
}

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int k = 0; k < v.size(); ++k) a.push_back(round_sig(v[k]));
  return a;
}

}  // namespace

json placement_to_json(const Placement& placement) {
  json j;
  j["schema_version"] = 1;
  j["anchors"] = json::array();
  for (const auto& a : placement.anchors) j["anchors"].push_back(vec_to_json(a));
  return j;
}

void save_placement(const std::string& path, const Placement& placement) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write placement file: " + path);
  out << placement_to_json(placement).dump(2) << "\n";
}

json score_to_json(const PlacementScore& score, const Scene& scene) {
  json j;
  j["avg_rmse"] = json_metric(score.avg_rmse);
  j["infeasible_points"] = score.infeasible_points;
  json pts = json::array();
  for (std::size_t i = 0; i < score.per_point.size(); ++i) {
    const PointMetrics& pm = score.per_point[i];
    json p;
    p["point"] = vec_to_json(scene.sample_points[i]);
    p["feasible"] = pm.feasible;
    p["mse_lb"] = json_metric(pm.mse_lb);
    p["rmse"] = json_metric(std::sqrt(pm.mse_lb));
    p["bias"] = vec_to_json(pm.bias);
    p["active_pairs"] = pm.active_pairs;
    json conds = json::array();
    for (const auto& c : pm.conditions) {
      conds.push_back(json{{"tag_to_i", to_string(c.tag_to_i)},
                           {"tag_to_j", to_string(c.tag_to_j)},
                           {"anchor_to_anchor", to_string(c.anchor_to_anchor)},
                           {"in_range", c.in_range}});
    }
    p["conditions"] = std::move(conds);
    pts.push_back(std::move(p));
  }
  j["per_point"] = std::move(pts);
  return j;
}

json sim_report_to_json(const SimReport& report, const Scene& scene) {
  json j;
  j["avg_rmse"] = json_metric(report.avg_rmse);
  json pts = json::array();
  for (std::size_t i = 0; i < report.per_point.size(); ++i) {
    const PointSimStats& s = report.per_point[i];
    json p;
    p["point"] = vec_to_json(scene.sample_points[i]);
    p["rmse"] = json_metric(s.rmse);
    p["rmse_std_err"] = json_metric(s.rmse_std_err);
    p["empirical_bias"] = vec_to_json(s.empirical_bias);
    p["divergences"] = s.divergences;
    p["trials_used"] = s.trials_used;
    p["excessive_divergence"] = s.excessive_divergence;
    pts.push_back(std::move(p));
  }
  j["per_point"] = std::move(pts);
  return j;
}

json design_result_to_json(const DesignResult& result) {
  json j;
  j["status"] = result.status == DesignStatus::Met ? "met" : "unsatisfiable";
  j["q_star"] = result.q_star;
  j["anchors_required"] = 2 * result.q_star;
  j["avg_rmse"] = json_metric(result.score.avg_rmse);
  j["placement"] = placement_to_json(result.placement);
  json hist = json::array();
  for (const auto& [pairs, rmse] : result.history) {
    hist.push_back(json{{"pairs", pairs}, {"avg_rmse", json_metric(rmse)}});
  }
  j["history"] = std::move(hist);
  return j;
}

json block_update_to_json(const BlockUpdate& update) {
  json j;
  j["sweep"] = update.sweep;
  j["block"] = update.block;
  j["objective_before"] = json_metric(update.objective_before);
  j["objective_after"] = json_metric(update.objective_after);
  j["anchor_a"] = vec_to_json(update.anchor_a);
  j["anchor_b"] = vec_to_json(update.anchor_b);
  j["evaluations"] = update.evaluations;
  return j;
}

void write_design_history_csv(std::ostream& os, const DesignResult& result) {
  os << "pairs,avg_rmse\n";
  for (const auto& [pairs, rmse] : result.history) {
    char buf[48];
    if (std::isfinite(rmse)) {
      std::snprintf(buf, sizeof buf, "%.9g", rmse);
    } else {
      std::snprintf(buf, sizeof buf, "inf");
    }
    os << pairs << "," << buf << "\n";
  }
}

}  // namespace tdoa
