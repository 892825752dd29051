#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/oracles.hpp"
#include "tdoa/optimizer.hpp"

#include <cmath>

using namespace tdoa;

namespace {

BcmConfig small_config(std::uint64_t seed = 1) {
  BcmConfig cfg;
  cfg.max_iter = 2;
  cfg.n_starts = 6;
  cfg.local_budget = 60;
  cfg.seed = seed;
  return cfg;
}

Scene one_point_scene() {
  Scene s;
  s.dimension = 2;
  s.bounds = Box{vec2(0, 0), vec2(4, 4)};
  s.sample_points = {vec2(2, 2)};
  s.operating_range = 20.0;
  return s;
}

}  // namespace

TEST_CASE("optimize_block beats 100 random placements on a one-point scene") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(9);
  Placement initial = random_placement(2, s, rng);

  BcmConfig cfg = small_config();
  cfg.n_starts = 12;
  cfg.local_budget = 120;
  Placement current = initial;
  for (int q = 0; q < 2; ++q) {
    const BlockResult r = optimize_block(q, current, s, params, cfg);
    current.anchors[2 * q] = r.anchor_a;
    current.anchors[2 * q + 1] = r.anchor_b;
  }
  const double optimized = average_rmse_value(current, s, params);

  double best_random = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    RngStream r2 = RngStream::substream(555, i);
    const Placement p = random_placement(2, s, r2);
    best_random = std::min(best_random, average_rmse_value(p, s, params));
  }
  CHECK(optimized <= best_random);
}

TEST_CASE("optimize_block with the incumbent never returns a worse objective") {
  const Scene s = one_point_scene();
  NoiseParams params;
  for (int trial = 0; trial < 5; ++trial) {
    RngStream rng(100 + trial);
    const Placement p = random_placement(2, s, rng);
    const double incumbent = average_rmse_value(p, s, params);
    BcmConfig cfg = small_config(trial);
    const BlockResult r = optimize_block(0, p, s, params, cfg);
    CHECK(r.objective <= incumbent);
  }
}

TEST_CASE("explicit candidate sets are searched exhaustively") {
  Scene s = one_point_scene();
  s.feasible.kind = FeasibilityKind::ExplicitSet;
  s.feasible.points = {vec2(0, 0), vec2(4, 0), vec2(0, 4), vec2(4, 4)};
  NoiseParams params;

  Placement current{{vec2(0, 0), vec2(4, 0), vec2(0, 4), vec2(4, 4)}};
  const BlockResult r = optimize_block(0, current, s, params, small_config());

  // brute force over all ordered candidate pairs
  double best = std::numeric_limits<double>::infinity();
  Placement trial = current;
  for (std::size_t u = 0; u < 4; ++u) {
    for (std::size_t v = 0; v < 4; ++v) {
      if (u == v) continue;
      trial.anchors[0] = s.feasible.points[u];
      trial.anchors[1] = s.feasible.points[v];
      best = std::min(best, average_rmse_value(trial, s, params));
    }
  }
  CHECK(r.objective == best);
  CHECK(r.evaluations == 12);
}

TEST_CASE("bcm monotone descent over random scenes and seeds") {
  RngStream scene_rng(2);
  NoiseParams params;
  int checked = 0;
  for (int trial = 0; trial < 8; ++trial) {
    Scene s = oracle::random_scene(2, scene_rng);
    for (std::uint64_t seed : {1ULL, 2ULL}) {
      RngStream rng = RngStream::substream(77, trial, seed);
      Placement initial;
      try {
        initial = random_placement(2, s, rng);
      } catch (const NoFeasibleStart&) {
        continue;
      }
      const BcmResult res = bcm_optimize(initial, s, params, small_config(seed));
      for (const auto& u : res.trace.updates) {
        const bool non_increasing =
            u.objective_after <= u.objective_before ||
            (std::isinf(u.objective_after) && std::isinf(u.objective_before));
        CHECK(non_increasing);
      }
      ++checked;
    }
  }
  CHECK(checked >= 8);
}

TEST_CASE("bcm respects the evaluation budget per block") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(4);
  const Placement initial = random_placement(1, s, rng);
  BcmConfig cfg = small_config();
  const BcmResult res = bcm_optimize(initial, s, params, cfg);
  for (const auto& u : res.trace.updates) {
    CHECK(u.evaluations <= static_cast<long>(cfg.n_starts + 1) * cfg.local_budget);
  }
}

TEST_CASE("bcm is deterministic for a fixed seed") {
  Scene s = one_point_scene();
  s.obstacles.push_back({Box{vec2(2.6, 1.2), vec2(3.2, 2.8)}, Material::Metal});
  NoiseParams params;
  RngStream rng(8);
  const Placement initial = random_placement(2, s, rng);

  const BcmResult a = bcm_optimize(initial, s, params, small_config(42));
  const BcmResult b = bcm_optimize(initial, s, params, small_config(42));
  REQUIRE(a.trace.updates.size() == b.trace.updates.size());
  for (std::size_t i = 0; i < a.trace.updates.size(); ++i) {
    CHECK(a.trace.updates[i].objective_after == b.trace.updates[i].objective_after);
    CHECK((a.trace.updates[i].anchor_a - b.trace.updates[i].anchor_a).norm() == 0.0);
    CHECK((a.trace.updates[i].anchor_b - b.trace.updates[i].anchor_b).norm() == 0.0);
  }
  CHECK(a.score.avg_rmse == b.score.avg_rmse);
}

TEST_CASE("bcm results are independent of the thread count") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(12);
  const Placement initial = random_placement(2, s, rng);
  BcmConfig cfg = small_config(7);
  cfg.threads = 1;
  const BcmResult a = bcm_optimize(initial, s, params, cfg);
  cfg.threads = 3;
  const BcmResult b = bcm_optimize(initial, s, params, cfg);
  CHECK(a.score.avg_rmse == b.score.avg_rmse);
  for (std::size_t i = 0; i < a.placement.anchors.size(); ++i) {
    CHECK((a.placement.anchors[i] - b.placement.anchors[i]).norm() == 0.0);
  }
}

TEST_CASE("every traced placement respects the feasibility set") {
  Scene s = one_point_scene();
  s.feasible.kind = FeasibilityKind::Boundary;
  s.obstacles.push_back({Box{vec2(1.5, 1.5), vec2(2.5, 2.5)}, Material::NonMetal});
  s.sample_points = {vec2(0.75, 0.75), vec2(3.25, 3.25)};
  NoiseParams params;
  RngStream rng(21);
  const Placement initial = random_placement(2, s, rng);
  CHECK_NOTHROW(validate_placement(s, initial));

  const BcmResult res = bcm_optimize(initial, s, params, small_config(3));
  for (const auto& u : res.trace.updates) {
    CHECK(anchor_feasible(s, u.anchor_a));
    CHECK(anchor_feasible(s, u.anchor_b));
  }
  CHECK_NOTHROW(validate_placement(s, res.placement));
}

TEST_CASE("pattern search also descends") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(31);
  const Placement initial = random_placement(2, s, rng);
  BcmConfig cfg = small_config(5);
  cfg.local_search = LocalSearch::PatternSearch;
  const BcmResult res = bcm_optimize(initial, s, params, cfg);
  for (const auto& u : res.trace.updates) {
    const bool non_increasing = u.objective_after <= u.objective_before ||
                                (std::isinf(u.objective_after) && std::isinf(u.objective_before));
    CHECK(non_increasing);
  }
}

TEST_CASE("sampler failure raises NoFeasibleStart") {
  // every boundary face is strictly inside one of the overlapping slabs, but
  // the room interior stays clear
  Scene s;
  s.dimension = 2;
  s.bounds = Box{vec2(0, 0), vec2(4, 4)};
  s.operating_range = 20.0;
  s.feasible.kind = FeasibilityKind::Boundary;
  s.obstacles.push_back({Box{vec2(-1, -1), vec2(5, 0.5)}, Material::NonMetal});
  s.obstacles.push_back({Box{vec2(-1, 3.5), vec2(5, 5)}, Material::NonMetal});
  s.obstacles.push_back({Box{vec2(-1, -1), vec2(0.5, 5)}, Material::NonMetal});
  s.obstacles.push_back({Box{vec2(3.5, -1), vec2(5, 5)}, Material::NonMetal});
  s.sample_points = {vec2(2, 2)};

  RngStream rng(1);
  CHECK_THROWS_AS(random_placement(1, s, rng), NoFeasibleStart);
}

TEST_CASE("a large early-stop tolerance ends after one sweep") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(41);
  const Placement initial = random_placement(2, s, rng);
  BcmConfig cfg = small_config(2);
  cfg.max_iter = 5;
  cfg.early_stop_tol = 1e9;
  const BcmResult res = bcm_optimize(initial, s, params, cfg);
  CHECK(res.trace.updates.size() == 2);  // one sweep over both blocks
}

TEST_CASE("optimize_block without the incumbent still returns a candidate") {
  const Scene s = one_point_scene();
  NoiseParams params;
  RngStream rng(43);
  const Placement p = random_placement(2, s, rng);
  BcmConfig cfg = small_config(11);
  cfg.include_incumbent = false;
  const BlockResult r = optimize_block(0, p, s, params, cfg);
  CHECK(std::isfinite(r.objective));
  CHECK(anchor_feasible(s, r.anchor_a));
  CHECK(anchor_feasible(s, r.anchor_b));
  CHECK(r.evaluations <= static_cast<long>(cfg.n_starts) * cfg.local_budget);
}

TEST_CASE("bcm descends in a 3D scene with boundary anchors") {
  Scene s;
  s.dimension = 3;
  s.bounds = Box{vec3(0, 0, 0), vec3(4, 4, 3)};
  s.sample_points = {vec3(1.5, 1.5, 1.0), vec3(2.5, 2.5, 1.5)};
  s.operating_range = 30.0;
  s.feasible.kind = FeasibilityKind::Boundary;
  NoiseParams params;
  RngStream rng(17);
  const Placement initial = random_placement(3, s, rng);
  BcmConfig cfg = small_config(19);
  cfg.max_iter = 1;
  const BcmResult res = bcm_optimize(initial, s, params, cfg);
  for (const auto& u : res.trace.updates) {
    CHECK(anchor_feasible(s, u.anchor_a));
    CHECK(anchor_feasible(s, u.anchor_b));
    const bool non_increasing = u.objective_after <= u.objective_before ||
                                (std::isinf(u.objective_after) && std::isinf(u.objective_before));
    CHECK(non_increasing);
  }
  CHECK(std::isfinite(res.score.avg_rmse));
}

TEST_CASE("canonicalize snaps boundary anchors exactly onto faces") {
  Scene s = one_point_scene();
  s.feasible.kind = FeasibilityKind::Boundary;
  Placement p{{vec2(1e-13, 1.0), vec2(4.0 - 1e-13, 2.0)}};
  const Placement snapped = canonicalize_placement(s, p);
  CHECK(snapped.anchors[0][0] == 0.0);
  CHECK(snapped.anchors[1][0] == 4.0);
  CHECK(snapped.anchors[0][1] == 1.0);
}
