// tdoa_placer: design and validate UWB TDOA anchor placements.
//
// Exit codes: 0 ok, 2 input error, 3 optimizer could not start,
// 4 design target unsatisfiable.

#include "tdoa/design.hpp"
#include "tdoa/heatmap.hpp"
#include "tdoa/metric.hpp"
#include "tdoa/optimizer.hpp"
#include "tdoa/parallel.hpp"
#include "tdoa/scene_io.hpp"
#include "tdoa/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNoStart = 3;
constexpr int kExitUnsatisfiable = 4;

std::string fmt9(double v) {
  if (!std::isfinite(v)) return v > 0 ? "inf" : "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void emit_json(const std::optional<std::string>& path, const json& j) {
  if (path) {
    std::ofstream out(*path);
    if (!out) throw tdoa::ValidationError("cannot write output file: " + *path);
    out << j.dump(2) << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
}

struct CommonArgs {
  std::string scene_path;
  double bias_step = 1e-3;
  int threads = tdoa::default_thread_count();
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("scene", args.scene_path, "Scene JSON file")->required();
  cmd->add_option("--bias-step", args.bias_step, "Finite-difference step for the bias gradient")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--threads", args.threads, "Worker threads (env TDOA_PLACER_THREADS)")
      ->check(CLI::PositiveNumber);
}

void add_bcm_flags(CLI::App* cmd, tdoa::BcmConfig& cfg) {
  cmd->add_option("--max-iter", cfg.max_iter, "BCM sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--n-starts", cfg.n_starts, "Random starts per block update")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--local-budget", cfg.local_budget, "Objective evaluations per start")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "Random seed");
  std::map<std::string, tdoa::LocalSearch> methods{
      {"nelder-mead", tdoa::LocalSearch::NelderMead},
      {"pattern", tdoa::LocalSearch::PatternSearch}};
  cmd->add_option("--local-search", cfg.local_search, "Local search method")
      ->transform(CLI::CheckedTransformer(methods, CLI::ignore_case));
  cmd->add_flag(
      "--no-incumbent", [&cfg](std::int64_t) { cfg.include_incumbent = false; },
      "Drop the incumbent block from the candidate starts");
  cmd->add_option("--early-stop-tol", cfg.early_stop_tol,
                  "Stop early when a sweep improves the objective by less than this");
}

int cmd_evaluate(const CommonArgs& common, const std::string& placement_path,
                 const std::optional<std::string>& output) {
  const tdoa::SceneFile file = tdoa::load_scene(common.scene_path);
  const tdoa::Placement placement = tdoa::load_placement(placement_path, file.scene);
  const tdoa::PlacementScore score =
      tdoa::average_rmse(placement, file.scene, file.noise, common.bias_step, common.threads);
  emit_json(output, tdoa::score_to_json(score, file.scene));
  std::cerr << "point            rmse_lb   |bias|    active\n";
  for (std::size_t i = 0; i < score.per_point.size(); ++i) {
    const tdoa::PointMetrics& pm = score.per_point[i];
    char line[128];
    std::snprintf(line, sizeof line, "%-4zu %12s %9s %9s\n", i,
                  fmt9(std::sqrt(pm.mse_lb)).c_str(), fmt9(pm.bias.norm()).c_str(),
                  std::to_string(pm.active_pairs).c_str());
    std::cerr << line;
  }
  std::cerr << "avg_rmse " << fmt9(score.avg_rmse) << " over " << score.per_point.size()
            << " sample points, " << score.infeasible_points.size() << " infeasible\n";
  return kExitOk;
}

int cmd_optimize(const CommonArgs& common, const std::optional<std::string>& initial_path,
                 int random_pairs, tdoa::BcmConfig cfg,
                 const std::optional<std::string>& out_placement,
                 const std::optional<std::string>& out_trace) {
  const tdoa::SceneFile file = tdoa::load_scene(common.scene_path);
  cfg.bias_step = common.bias_step;
  cfg.threads = common.threads;

  tdoa::Placement initial;
  if (initial_path) {
    initial = tdoa::load_placement(*initial_path, file.scene);
  } else {
    tdoa::RngStream rng = tdoa::RngStream::substream(cfg.seed, 0x1417);
    initial = tdoa::random_placement(random_pairs, file.scene, rng);
  }
  const double initial_objective =
      tdoa::average_rmse_value(initial, file.scene, file.noise, cfg.bias_step);

  tdoa::BcmResult result = tdoa::bcm_optimize(initial, file.scene, file.noise, cfg);

  // Round the anchors for serialization, then report the score of exactly
  // what was written so evaluate reproduces it bit for bit.
  for (auto& a : result.placement.anchors) {
    for (int k = 0; k < a.size(); ++k) a[k] = tdoa::round_sig(a[k]);
  }
  const tdoa::PlacementScore score =
      tdoa::average_rmse(result.placement, file.scene, file.noise, cfg.bias_step, cfg.threads);

  if (out_placement) {
    tdoa::save_placement(*out_placement, result.placement);
  } else {
    std::cout << tdoa::placement_to_json(result.placement).dump(2) << "\n";
  }
  if (out_trace) {
    std::ofstream trace(*out_trace);
    if (!trace) throw tdoa::ValidationError("cannot write trace file: " + *out_trace);
    for (const auto& update : result.trace.updates) {
      trace << tdoa::block_update_to_json(update).dump() << "\n";
    }
  }
  std::cerr << "initial avg_rmse " << fmt9(initial_objective) << "\n"
            << "optimized avg_rmse " << fmt9(score.avg_rmse) << " ("
            << result.trace.updates.size() << " block updates)\n";
  return kExitOk;
}

int cmd_design(const CommonArgs& common, tdoa::DesignConfig cfg,
               const std::optional<std::string>& out_result,
               const std::optional<std::string>& out_placement,
               const std::optional<std::string>& out_history) {
  const tdoa::SceneFile file = tdoa::load_scene(common.scene_path);
  cfg.bcm.bias_step = common.bias_step;
  cfg.bcm.threads = common.threads;

  const tdoa::DesignResult result = tdoa::design_system(file.scene, file.noise, cfg);

  emit_json(out_result, tdoa::design_result_to_json(result));
  if (out_placement) tdoa::save_placement(*out_placement, result.placement);
  if (out_history) {
    std::ofstream hist(*out_history);
    if (!hist) throw tdoa::ValidationError("cannot write history file: " + *out_history);
    tdoa::write_design_history_csv(hist, result);
  }

  if (result.status == tdoa::DesignStatus::Met) {
    std::cerr << "met target " << fmt9(cfg.target_rmse) << " with " << 2 * result.q_star
              << " anchors (avg_rmse " << fmt9(result.score.avg_rmse) << ")\n";
    return kExitOk;
  }
  std::cerr << "target " << fmt9(cfg.target_rmse) << " unsatisfiable within " << cfg.q_max
            << " pairs (best avg_rmse " << fmt9(result.score.avg_rmse) << ")\n";
  return kExitUnsatisfiable;
}

int cmd_simulate(const CommonArgs& common, const std::string& placement_path,
                 tdoa::SimConfig cfg, const std::optional<std::string>& output,
                 const std::optional<std::string>& dump_trials) {
  const tdoa::SceneFile file = tdoa::load_scene(common.scene_path);
  const tdoa::Placement placement = tdoa::load_placement(placement_path, file.scene);
  cfg.threads = common.threads;

  tdoa::SimReport report;
  std::ofstream dump;
  if (dump_trials) {
    dump.open(*dump_trials);
    if (!dump) throw tdoa::ValidationError("cannot write trial dump: " + *dump_trials);
    dump << (file.scene.dimension == 2 ? "point,x,y\n" : "point,x,y,z\n");
  }
  for (std::size_t i = 0; i < file.scene.sample_points.size(); ++i) {
    std::vector<tdoa::Vec> estimates;
    report.per_point.push_back(
        tdoa::simulate_point(file.scene.sample_points[i], static_cast<int>(i), placement,
                             file.scene, file.noise, cfg, dump_trials ? &estimates : nullptr));
    if (dump_trials) {
      for (const auto& e : estimates) {
        dump << i;
        for (int k = 0; k < e.size(); ++k) dump << "," << fmt9(e[k]);
        dump << "\n";
      }
    }
    if (report.per_point.back().excessive_divergence) {
      std::cerr << "warning: point " << i << ": more than 10% of trials diverged\n";
    }
  }
  double sum = 0.0;
  for (const auto& s : report.per_point) sum += s.rmse;
  report.avg_rmse = sum / static_cast<double>(report.per_point.size());

  emit_json(output, tdoa::sim_report_to_json(report, file.scene));
  std::cerr << "empirical avg_rmse " << fmt9(report.avg_rmse) << " over "
            << report.per_point.size() << " points, " << cfg.trials << " trials each\n";
  return kExitOk;
}

int cmd_heatmap(const CommonArgs& common, const std::string& placement_path, double spacing,
                const std::vector<double>& grid_min, const std::vector<double>& grid_max,
                const std::optional<double>& slice_z, const std::optional<std::string>& output) {
  const tdoa::SceneFile file = tdoa::load_scene(common.scene_path);
  const tdoa::Placement placement = tdoa::load_placement(placement_path, file.scene);

  if (file.scene.dimension == 3 && !slice_z) {
    throw tdoa::ValidationError("3D scenes need --z to pick the heatmap slice height");
  }
  tdoa::HeatmapSpec spec = tdoa::default_heatmap_spec(file.scene, spacing, slice_z.value_or(0.0));
  if (!grid_min.empty()) {
    spec.x_min = grid_min[0];
    spec.y_min = grid_min[1];
  }
  if (!grid_max.empty()) {
    spec.x_max = grid_max[0];
    spec.y_max = grid_max[1];
  }

  const auto cells = tdoa::compute_heatmap(file.scene, file.noise, placement, spec,
                                           common.bias_step, common.threads);
  if (output) {
    std::ofstream out(*output);
    if (!out) throw tdoa::ValidationError("cannot write heatmap file: " + *output);
    tdoa::write_heatmap_csv(out, file.scene.dimension, cells);
  } else {
    tdoa::write_heatmap_csv(std::cout, file.scene.dimension, cells);
  }
  std::cerr << cells.size() << " heatmap cells\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UWB TDOA anchor placement designer"};
  app.require_subcommand(1);

  CommonArgs eval_args;
  std::string eval_placement;
  std::optional<std::string> eval_output;
  auto* evaluate = app.add_subcommand("evaluate", "Score a placement against a scene");
  add_common(evaluate, eval_args);
  evaluate->add_option("placement", eval_placement, "Placement JSON file")->required();
  evaluate->add_option("-o,--output", eval_output, "Write the report JSON here");

  CommonArgs opt_args;
  std::optional<std::string> opt_initial;
  bool opt_random_init = false;
  int opt_pairs = 2;
  tdoa::BcmConfig opt_cfg;
  std::optional<std::string> opt_out_placement, opt_out_trace;
  auto* optimize = app.add_subcommand("optimize", "Optimize a placement with BCM");
  add_common(optimize, opt_args);
  optimize->add_option("--initial", opt_initial, "Initial placement JSON file");
  optimize->add_flag("--random-init", opt_random_init, "Start from a random feasible placement");
  optimize->add_option("--pairs", opt_pairs, "Anchor pairs for --random-init")
      ->check(CLI::PositiveNumber);
  add_bcm_flags(optimize, opt_cfg);
  optimize->add_option("--out-placement", opt_out_placement, "Optimized placement JSON file");
  optimize->add_option("--out-trace", opt_out_trace, "Block-update trace (JSON lines)");

  CommonArgs design_args;
  tdoa::DesignConfig design_cfg;
  std::optional<std::string> design_out_result, design_out_placement, design_out_history;
  auto* design = app.add_subcommand("design", "Size the minimal anchor fleet for a target RMSE");
  add_common(design, design_args);
  design->add_option("--target-rmse", design_cfg.target_rmse, "Required average RMSE (m)")
      ->required();
  design->add_option("--q-init", design_cfg.q_init, "Initial anchor pairs")
      ->check(CLI::PositiveNumber);
  design->add_option("--q-max", design_cfg.q_max, "Maximum anchor pairs")
      ->check(CLI::PositiveNumber);
  design->add_option("--seed", design_cfg.seed, "Random seed");
  design->add_option("--max-iter", design_cfg.bcm.max_iter, "BCM sweeps")
      ->check(CLI::PositiveNumber);
  design->add_option("--n-starts", design_cfg.bcm.n_starts, "Random starts per block update")
      ->check(CLI::PositiveNumber);
  design->add_option("--local-budget", design_cfg.bcm.local_budget,
                     "Objective evaluations per start")
      ->check(CLI::PositiveNumber);
  design->add_option("--out-result", design_out_result, "DesignResult JSON file");
  design->add_option("--out-placement", design_out_placement, "Final placement JSON file");
  design->add_option("--out-history", design_out_history, "History CSV file");

  CommonArgs sim_args;
  std::string sim_placement;
  tdoa::SimConfig sim_cfg;
  std::optional<std::string> sim_output, sim_dump;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo multilateration validation");
  add_common(simulate, sim_args);
  simulate->add_option("placement", sim_placement, "Placement JSON file")->required();
  simulate->add_option("--trials", sim_cfg.trials, "Trials per sample point")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", sim_cfg.seed, "Random seed");
  simulate->add_option("--outlier-rate", sim_cfg.outlier_rate, "Chance of outlier corruption")
      ->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--outlier-threshold", sim_cfg.outlier_reject_threshold,
                       "Reject measurements with larger error (m)")
      ->check(CLI::PositiveNumber);
  std::map<std::string, tdoa::EstimatorInit> inits{
      {"truth-perturbed", tdoa::EstimatorInit::TruthPerturbed},
      {"grid-search", tdoa::EstimatorInit::GridSearch}};
  simulate->add_option("--init", sim_cfg.init, "Estimator initialization")
      ->transform(CLI::CheckedTransformer(inits, CLI::ignore_case));
  simulate->add_option("--init-std", sim_cfg.init_std, "Truth perturbation std (m)");
  simulate->add_option("--init-spacing", sim_cfg.init_spacing, "Grid-search cell size (m)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("-o,--output", sim_output, "Write the report JSON here");
  simulate->add_option("--dump-trials", sim_dump, "Per-trial estimate CSV");

  CommonArgs heat_args;
  std::string heat_placement;
  double heat_spacing = 0.0;
  std::vector<double> heat_min, heat_max;
  std::optional<double> heat_z;
  std::optional<std::string> heat_output;
  auto* heatmap = app.add_subcommand("heatmap", "RMSE heatmap CSV over a grid");
  add_common(heatmap, heat_args);
  heatmap->add_option("placement", heat_placement, "Placement JSON file")->required();
  heatmap->add_option("--spacing", heat_spacing, "Grid cell size (m)")
      ->required()
      ->check(CLI::PositiveNumber);
  heatmap->add_option("--min", heat_min, "Grid minimum x,y")->expected(2);
  heatmap->add_option("--max", heat_max, "Grid maximum x,y")->expected(2);
  heatmap->add_option("--z", heat_z, "Slice height for 3D scenes");
  heatmap->add_option("-o,--output", heat_output, "Write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(eval_args, eval_placement, eval_output);
    if (optimize->parsed()) {
      if (!opt_initial && !opt_random_init) {
        throw tdoa::ValidationError("optimize needs --initial or --random-init");
      }
      return cmd_optimize(opt_args, opt_initial, opt_pairs, opt_cfg, opt_out_placement,
                          opt_out_trace);
    }
    if (design->parsed()) {
      return cmd_design(design_args, design_cfg, design_out_result, design_out_placement,
                        design_out_history);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim_args, sim_placement, sim_cfg, sim_output, sim_dump);
    }
    if (heatmap->parsed()) {
      return cmd_heatmap(heat_args, heat_placement, heat_spacing, heat_min, heat_max, heat_z,
                         heat_output);
    }
  } catch (const tdoa::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const tdoa::NoFeasibleStart& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNoStart;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
