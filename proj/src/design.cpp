#include "tdoa/design.hpp"

namespace tdoa {

namespace {

BcmConfig bcm_for_size(const DesignConfig& cfg, int pairs) {
  BcmConfig bcm = cfg.bcm;
  bcm.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(pairs), 0xBC);
  return bcm;
}

}  // namespace

DesignResult design_system(const Scene& scene, const NoiseParams& params,
                           const DesignConfig& cfg) {
  if (scene.feasible.kind != FeasibilityKind::Boundary) {
    throw ValidationError("design_system requires boundary anchor feasibility");
  }
  if (cfg.q_init < 1 || cfg.q_init > cfg.q_max) {
    throw ValidationError("design_system requires 1 <= q_init <= q_max");
  }
  if (!(cfg.target_rmse > 0.0)) throw ValidationError("target_rmse must be > 0");

  int pairs = cfg.q_init;
  RngStream init_rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(pairs), 0xA0);
  Placement placement = random_placement(pairs, scene, init_rng);
  BcmResult best = bcm_optimize(placement, scene, params, bcm_for_size(cfg, pairs));

  DesignResult result;
  result.history.emplace_back(pairs, best.score.avg_rmse);

  while (best.score.avg_rmse > cfg.target_rmse && pairs < cfg.q_max) {
    ++pairs;
    // Keep the optimized anchors and append one pair, initialized at random
    // on the boundary; the next BCM run re-optimizes every block.
    RngStream grow_rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(pairs), 0xA0);
    const Placement extra = random_placement(1, scene, grow_rng);
    Placement warm = best.placement;
    warm.anchors.push_back(extra.anchors[0]);
    warm.anchors.push_back(extra.anchors[1]);
    best = bcm_optimize(warm, scene, params, bcm_for_size(cfg, pairs));
    result.history.emplace_back(pairs, best.score.avg_rmse);
  }

  result.status =
      best.score.avg_rmse <= cfg.target_rmse ? DesignStatus::Met : DesignStatus::Unsatisfiable;
  result.q_star = pairs;
  result.placement = best.placement;
  result.score = std::move(best.score);
  return result;
}

}  // namespace tdoa
