#pragma once

#include "tdoa/metric.hpp"

#include <iosfwd>
#include <vector>

namespace tdoa {

/// Grid for the RMSE heatmap: x/y ranges with one cell size, plus a fixed
/// height for slices through 3D scenes.
struct HeatmapSpec {
  double x_min = 0.0, x_max = 0.0;
  double y_min = 0.0, y_max = 0.0;
  double spacing = 0.0;
  double slice_z = 0.0;  // used only for 3D scenes
};

struct HeatmapCell {
  Vec position;
  double rmse = 0.0;  // +inf marks an unlocalizable cell
};

/// Heatmap spec covering the scene bounds in x/y.
HeatmapSpec default_heatmap_spec(const Scene& scene, double spacing, double slice_z = 0.0);

/// Evaluates sqrt of the MSE bound on the grid in lexicographic order. Cells
/// outside the bounds or on/inside an obstacle are omitted.
std::vector<HeatmapCell> compute_heatmap(const Scene& scene, const NoiseParams& params,
                                         const Placement& placement, const HeatmapSpec& spec,
                                         double bias_step = 1e-3, int threads = 1);

/// CSV with header x,y[,z],rmse; 9 significant digits; the literal `inf` for
/// unlocalizable cells.
void write_heatmap_csv(std::ostream& os, int dimension, const std::vector<HeatmapCell>& cells);

}  // namespace tdoa
