#include "tdoa/simulator.hpp"

#include "tdoa/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace tdoa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kCoincidentTol = 1e-12;

/// Residuals and model Jacobian at x; false when x sits on an anchor.
bool residuals_at(const std::vector<Measurement>& measurements, const Placement& placement,
                  const Vec& x, Eigen::VectorXd& residual, Eigen::MatrixXd& jac) {
  const int m = static_cast<int>(measurements.size());
  const int n = static_cast<int>(x.size());
  residual.resize(m);
  jac.resize(m, n);
  for (int r = 0; r < m; ++r) {
    const int q = measurements[r].pair;
    const Vec& ai = placement.pair_first(q);
    const Vec& aj = placement.pair_second(q);
    const double di = (x - ai).norm();
    const double dj = (x - aj).norm();
    if (di < kCoincidentTol || dj < kCoincidentTol) return false;
    residual[r] = measurements[r].value - (dj - di);
    jac.row(r) = ((x - aj) / dj - (x - ai) / di).transpose();
  }
  return true;
}

double sse_at(const std::vector<Measurement>& measurements, const Placement& placement,
              const Vec& x) {
  double sse = 0.0;
  for (const auto& m : measurements) {
    const Vec& ai = placement.pair_first(m.pair);
    const Vec& aj = placement.pair_second(m.pair);
    const double di = (x - ai).norm();
    const double dj = (x - aj).norm();
    if (di < kCoincidentTol || dj < kCoincidentTol) return kInf;
    const double e = m.value - (dj - di);
    sse += e * e;
  }
  return sse;
}

Vec grid_search_init(const std::vector<Measurement>& measurements, const Placement& placement,
                     const Scene& scene, double spacing) {
  std::vector<std::vector<double>> axes(scene.dimension);
  for (int k = 0; k < scene.dimension; ++k) {
    axes[k] = grid_axis_coords(scene.bounds.min[k], scene.bounds.max[k], spacing);
  }
  Vec best(scene.dimension);
  double best_sse = kInf;
  std::vector<int> idx(scene.dimension, 0);
  Vec p(scene.dimension);
  while (true) {
    for (int k = 0; k < scene.dimension; ++k) p[k] = axes[k][idx[k]];
    const double sse = sse_at(measurements, placement, p);
    if (sse < best_sse) {
      best_sse = sse;
      best = p;
    }
    int k = scene.dimension - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(axes[k].size())) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return best;
}

}  // namespace

std::vector<Measurement> sample_measurements(const Vec& p, const Placement& placement,
                                             const Scene& scene, const NoiseParams& params,
                                             const SimConfig& cfg, RngStream& rng) {
  std::vector<Measurement> out;
  out.reserve(placement.pair_count());
  for (int q = 0; q < placement.pair_count(); ++q) {
    const Vec& ai = placement.pair_first(q);
    const Vec& aj = placement.pair_second(q);
    if ((p - ai).norm() < kCoincidentTol || (p - aj).norm() < kCoincidentTol) continue;
    const PairCondition cond = classify_pair(p, ai, aj, scene);
    if (!cond.usable()) continue;  // no measurement from blocked or out-of-range pairs
    const double ideal = ideal_tdoa(p, ai, aj);
    double value = ideal + sample_error(cond, params, rng);
    if (cfg.outlier_rate > 0.0 && rng.uniform01() < cfg.outlier_rate) {
      value += rng.uniform(-5.0, 5.0);
    }
    if (std::abs(value - ideal) > cfg.outlier_reject_threshold) continue;
    out.push_back({q, value});
  }
  return out;
}

EstimateResult multilaterate(const std::vector<Measurement>& measurements,
                             const Placement& placement, const Vec& initial_guess,
                             const GaussNewtonOptions& options) {
  const int n = static_cast<int>(initial_guess.size());
  if (static_cast<int>(measurements.size()) < n) {
    throw TooFewMeasurements("multilaterate: need at least as many measurements as coordinates");
  }

  EstimateResult result;
  result.position = initial_guess;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jac;

  for (int it = 0; it < options.max_iter; ++it) {
    result.iterations = it + 1;
    if (!residuals_at(measurements, placement, result.position, residual, jac)) return result;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
    const double lmin = eig.eigenvalues()(0);
    const double lmax = eig.eigenvalues()(n - 1);
    if (!(lmin > 0.0) || lmax / lmin > 1e12) return result;  // rank-deficient geometry

    const Eigen::VectorXd delta = jtj.llt().solve(jac.transpose() * residual);
    const double sse = residual.squaredNorm();

    double t = 1.0;
    bool accepted = false;
    Vec candidate(n);
    for (int half = 0; half < 25; ++half) {
      for (int k = 0; k < n; ++k) candidate[k] = result.position[k] + t * delta[k];
      if (sse_at(measurements, placement, candidate) <= sse) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return result;  // stuck; report divergence

    const double step_norm = t * delta.norm();
    result.position = candidate;
    if (step_norm < options.step_tol) {
      result.converged = true;
      return result;
    }
  }
  return result;  // iteration cap without convergence
}

PointSimStats simulate_point(const Vec& p, int point_index, const Placement& placement,
                             const Scene& scene, const NoiseParams& params, const SimConfig& cfg,
                             std::vector<Vec>* estimates_out) {
  if (cfg.trials < 1) throw ValidationError("simulate_point: trials must be >= 1");
  const int n = scene.dimension;
  std::vector<Vec> errors(cfg.trials);
  std::vector<char> converged(cfg.trials, 0);

  parallel_for(cfg.trials, cfg.threads, [&](long t) {
    RngStream rng = RngStream::substream(cfg.seed, static_cast<std::uint64_t>(point_index),
                                         static_cast<std::uint64_t>(t));
    const std::vector<Measurement> meas =
        sample_measurements(p, placement, scene, params, cfg, rng);
    if (static_cast<int>(meas.size()) < n) return;
    Vec init(n);
    if (cfg.init == EstimatorInit::TruthPerturbed) {
      for (int k = 0; k < n; ++k) init[k] = p[k] + cfg.init_std * rng.normal();
    } else {
      init = grid_search_init(meas, placement, scene, cfg.init_spacing);
    }
    const EstimateResult est = multilaterate(meas, placement, init);
    if (!est.converged) return;
    errors[t] = est.position - p;
    converged[t] = 1;
  });

  PointSimStats stats;
  stats.empirical_bias = Vec::Zero(n);
  double sq_sum = 0.0;
  double sq_sq_sum = 0.0;
  for (long t = 0; t < cfg.trials; ++t) {
    if (!converged[t]) {
      ++stats.divergences;
      continue;
    }
    ++stats.trials_used;
    stats.empirical_bias += errors[t];
    const double sq = errors[t].squaredNorm();
    sq_sum += sq;
    sq_sq_sum += sq * sq;
    if (estimates_out) estimates_out->push_back(p + errors[t]);
  }
  if (stats.trials_used > 0) {
    const double used = static_cast<double>(stats.trials_used);
    stats.empirical_bias /= used;
    const double mean_sq = sq_sum / used;
    stats.rmse = std::sqrt(mean_sq);
    const double var_sq = std::max(0.0, sq_sq_sum / used - mean_sq * mean_sq);
    if (stats.rmse > 0.0) {
      stats.rmse_std_err = std::sqrt(var_sq / used) / (2.0 * stats.rmse);
    }
  } else {
    stats.rmse = kInf;
  }
  stats.excessive_divergence = stats.divergences * 10 > cfg.trials;
  return stats;
}

SimReport simulate(const Scene& scene, const Placement& placement, const NoiseParams& params,
                   const SimConfig& cfg) {
  SimReport report;
  report.per_point.reserve(scene.sample_points.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scene.sample_points.size(); ++i) {
    report.per_point.push_back(simulate_point(scene.sample_points[i], static_cast<int>(i),
                                              placement, scene, params, cfg));
    sum += report.per_point.back().rmse;
  }
  report.avg_rmse = sum / static_cast<double>(scene.sample_points.size());
  return report;
}

}  // namespace tdoa
