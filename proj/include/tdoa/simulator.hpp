#pragma once

#include "tdoa/metric.hpp"
#include "tdoa/rng.hpp"

#include <vector>

namespace tdoa {

struct TooFewMeasurements : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Position estimator selection; Gauss-Newton is the only one implemented,
/// the enum leaves room for closed-form alternatives.
enum class Estimator { GaussNewton };

enum class EstimatorInit { TruthPerturbed, GridSearch };

struct SimConfig {
  long trials = 10000;
  std::uint64_t seed = 1;
  double outlier_rate = 0.0;            // chance of uniform [-5, 5] m corruption
  double outlier_reject_threshold = 1.0;  // measurements with larger error are dropped
  Estimator estimator = Estimator::GaussNewton;
  EstimatorInit init = EstimatorInit::TruthPerturbed;
  double init_std = 0.3;      // TruthPerturbed perturbation std
  double init_spacing = 0.5;  // GridSearch cell size
  int threads = 1;
};

struct Measurement {
  int pair = 0;
  double value = 0.0;
};

/// Draws one set of TDOA measurements at p: ideal value plus an exact error
/// draw for every usable pair, optional outlier corruption, then rejection of
/// measurements whose error magnitude exceeds the threshold.
std::vector<Measurement> sample_measurements(const Vec& p, const Placement& placement,
                                             const Scene& scene, const NoiseParams& params,
                                             const SimConfig& cfg, RngStream& rng);

struct GaussNewtonOptions {
  int max_iter = 100;
  double step_tol = 1e-8;
};

struct EstimateResult {
  bool converged = false;
  Vec position;
  int iterations = 0;
};

/// Damped Gauss-Newton least squares on the TDOA residuals, started from
/// `initial_guess`. Throws TooFewMeasurements when there are fewer
/// measurements than coordinates; reports divergence on rank-deficient
/// geometry or when the iteration cap is hit.
EstimateResult multilaterate(const std::vector<Measurement>& measurements,
                             const Placement& placement, const Vec& initial_guess,
                             const GaussNewtonOptions& options = {});

struct PointSimStats {
  Vec empirical_bias;
  double rmse = 0.0;
  double rmse_std_err = 0.0;
  long divergences = 0;
  long trials_used = 0;
  bool excessive_divergence = false;  // more than 10% of trials diverged
};

/// Runs `trials` sample-measure-estimate cycles at p. Trial t uses the
/// substream (seed, point_index, t) so results do not depend on scheduling.
/// `estimates_out`, when given, receives every converged estimate.
PointSimStats simulate_point(const Vec& p, int point_index, const Placement& placement,
                             const Scene& scene, const NoiseParams& params, const SimConfig& cfg,
                             std::vector<Vec>* estimates_out = nullptr);

struct SimReport {
  std::vector<PointSimStats> per_point;
  double avg_rmse = 0.0;
};

/// Monte-Carlo validation over all scene sample points.
SimReport simulate(const Scene& scene, const Placement& placement, const NoiseParams& params,
                   const SimConfig& cfg);

}  // namespace tdoa
