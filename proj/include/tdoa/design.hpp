#pragma once

#include "tdoa/optimizer.hpp"

namespace tdoa {

struct DesignConfig {
  int q_init = 1;
  int q_max = 8;
  double target_rmse = 0.05;  // required average RMSE over the region
  BcmConfig bcm;
  std::uint64_t seed = 1;
};

enum class DesignStatus { Met, Unsatisfiable };

struct DesignResult {
  DesignStatus status = DesignStatus::Unsatisfiable;
  int q_star = 0;
  Placement placement;
  PlacementScore score;
  std::vector<std::pair<int, double>> history;  // (pairs, best average RMSE)
};

/// Grows the anchor fleet one pair at a time until the target accuracy is met
/// or the pair budget runs out. Anchors are constrained to the boundary of
/// the space; each added pair is initialized uniformly at random on the
/// boundary and the optimization warm-starts from the previous optimum.
DesignResult design_system(const Scene& scene, const NoiseParams& params,
                           const DesignConfig& cfg);

}  // namespace tdoa
