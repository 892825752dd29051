#include "tdoa/heatmap.hpp"

#include "tdoa/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace tdoa {

HeatmapSpec default_heatmap_spec(const Scene& scene, double spacing, double slice_z) {
  HeatmapSpec spec;
  spec.x_min = scene.bounds.min[0];
  spec.x_max = scene.bounds.max[0];
  spec.y_min = scene.bounds.min[1];
  spec.y_max = scene.bounds.max[1];
  spec.spacing = spacing;
  spec.slice_z = slice_z;
  return spec;
}

std::vector<HeatmapCell> compute_heatmap(const Scene& scene, const NoiseParams& params,
                                         const Placement& placement, const HeatmapSpec& spec,
                                         double bias_step, int threads) {
  if (!(spec.spacing > 0.0)) throw ValidationError("heatmap spacing must be > 0");
  if (spec.x_max < spec.x_min || spec.y_max < spec.y_min) {
    throw ValidationError("heatmap grid has max < min");
  }
  const auto xs = grid_axis_coords(spec.x_min, spec.x_max, spec.spacing);
  const auto ys = grid_axis_coords(spec.y_min, spec.y_max, spec.spacing);

  std::vector<HeatmapCell> cells;
  for (double x : xs) {
    for (double y : ys) {
      Vec p = scene.dimension == 2 ? vec2(x, y) : vec3(x, y, spec.slice_z);
      if (!scene.bounds.contains_closed(p)) continue;
      if (scene.on_or_inside_any_obstacle(p)) continue;
      cells.push_back({p, 0.0});
    }
  }
  parallel_for(static_cast<long>(cells.size()), threads, [&](long i) {
    const PointMetrics pm =
        mse_lower_bound(cells[i].position, placement, scene, params, bias_step);
    cells[i].rmse = std::sqrt(pm.mse_lb);
  });
  return cells;
}

void write_heatmap_csv(std::ostream& os, int dimension, const std::vector<HeatmapCell>& cells) {
  os << (dimension == 2 ? "x,y,rmse\n" : "x,y,z,rmse\n");
  char buf[48];
  for (const auto& cell : cells) {
    for (int k = 0; k < cell.position.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.9g", cell.position[k]);
      os << buf << ",";
    }
    if (std::isfinite(cell.rmse)) {
      std::snprintf(buf, sizeof buf, "%.9g", cell.rmse);
      os << buf << "\n";
    } else {
      os << "inf\n";
    }
  }
}

}  // namespace tdoa
