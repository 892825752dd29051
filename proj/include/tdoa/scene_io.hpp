#pragma once

#include "tdoa/design.hpp"
#include "tdoa/metric.hpp"
#include "tdoa/optimizer.hpp"
#include "tdoa/simulator.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace tdoa {

/// A scene document bundles the geometry with the measurement-error
/// parameters. `noise_defaulted` is set when the file had no noise block.
struct SceneFile {
  Scene scene;
  NoiseParams noise;
  bool noise_defaulted = false;
};

SceneFile parse_scene(const nlohmann::json& j);
SceneFile load_scene(const std::string& path);

Placement parse_placement(const nlohmann::json& j, const Scene& scene);
Placement load_placement(const std::string& path, const Scene& scene);

nlohmann::json placement_to_json(const Placement& placement);
void save_placement(const std::string& path, const Placement& placement);

nlohmann::json score_to_json(const PlacementScore& score, const Scene& scene);
nlohmann::json sim_report_to_json(const SimReport& report, const Scene& scene);
nlohmann::json design_result_to_json(const DesignResult& result);
nlohmann::json block_update_to_json(const BlockUpdate& update);

void write_design_history_csv(std::ostream& os, const DesignResult& result);

/// Rounds to `digits` significant decimal digits; keeps golden files stable
/// across IEEE-754 platforms.
double round_sig(double value, int digits = 9);

/// JSON value for a possibly infinite metric: finite numbers are rounded,
/// non-finite values map to null.
nlohmann::json json_metric(double value);

}  // namespace tdoa
