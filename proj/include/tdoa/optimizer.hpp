#pragma once

#include "tdoa/metric.hpp"
#include "tdoa/rng.hpp"

#include <cstdint>
#include <vector>

namespace tdoa {

struct NoFeasibleStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class LocalSearch { NelderMead, PatternSearch };

struct BcmConfig {
  int max_iter = 5;     // outer sweeps
  int n_starts = 50;    // random initial conditions per block update
  LocalSearch local_search = LocalSearch::NelderMead;
  int local_budget = 400;  // objective evaluations per start
  std::uint64_t seed = 1;
  bool include_incumbent = true;
  double early_stop_tol = 0.0;  // 0 keeps the fixed sweep count
  double bias_step = 1e-3;
  int threads = 1;
};

struct BlockUpdate {
  int sweep = 0;
  int block = 0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  Vec anchor_a;
  Vec anchor_b;
  long evaluations = 0;
};

struct BcmTrace {
  std::vector<BlockUpdate> updates;
};

struct BlockResult {
  Vec anchor_a;
  Vec anchor_b;
  double objective = 0.0;
  long evaluations = 0;
};

/// Minimizes the average RMSE over one anchor pair with the rest of the
/// placement fixed. Multistart local search for continuous feasibility kinds;
/// exhaustive enumeration over ordered candidate pairs for an explicit point
/// set. `stream_salt` separates random starts across sweeps.
BlockResult optimize_block(int q, const Placement& current, const Scene& scene,
                           const NoiseParams& params, const BcmConfig& cfg,
                           std::uint64_t stream_salt = 0);

struct BcmResult {
  Placement placement;
  PlacementScore score;
  BcmTrace trace;
};

/// Block coordinate-wise minimization: max_iter sweeps over the pairs, each
/// block replaced by optimize_block's result.
BcmResult bcm_optimize(const Placement& initial, const Scene& scene, const NoiseParams& params,
                       const BcmConfig& cfg);

/// Uniform random feasible placement with the given number of pairs.
Placement random_placement(int pairs, const Scene& scene, RngStream& rng);

/// Snaps anchors onto the feasibility support (boundary faces or candidate
/// points) so encode/decode round-trips are exact during optimization.
Placement canonicalize_placement(const Scene& scene, const Placement& placement);

}  // namespace tdoa
