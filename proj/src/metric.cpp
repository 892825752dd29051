#include "tdoa/metric.hpp"

#include "tdoa/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>

namespace tdoa {

namespace {

constexpr double kCoincidentTol = 1e-12;
// Rank decisions: eigenvalue-ratio threshold for "singular", and the switch
// from normal equations to QR least squares.
constexpr double kSingularCond = 1e12;
constexpr double kNormalEqCond = 1e6;

bool pair_degenerate(const Vec& p, const Vec& anchor_i, const Vec& anchor_j) {
  return (p - anchor_i).norm() < kCoincidentTol || (p - anchor_j).norm() < kCoincidentTol;
}

/// Rows and expected biases of the usable pairs, compacted so that masked
/// pairs are bit-identical to physically removed ones.
struct ActiveSystem {
  Eigen::MatrixXd rows;
  Eigen::VectorXd mean;
  int active = 0;
};

ActiveSystem gather_active(const Vec& p, const Placement& placement,
                           const std::vector<PairCondition>& conditions,
                           const std::vector<ErrorModel>& models) {
  const int q_count = placement.pair_count();
  const int n = static_cast<int>(p.size());
  ActiveSystem sys;
  sys.rows.resize(q_count, n);
  sys.mean.resize(q_count);
  for (int q = 0; q < q_count; ++q) {
    const Vec& ai = placement.pair_first(q);
    const Vec& aj = placement.pair_second(q);
    if (!conditions[q].usable() || pair_degenerate(p, ai, aj)) continue;
    const Vec u = tdoa_jacobian_row(p, ai, aj);
    sys.rows.row(sys.active) = u.transpose();
    sys.mean[sys.active] = models[q].mean;
    ++sys.active;
  }
  sys.rows.conservativeResize(sys.active, n);
  sys.mean.conservativeResize(sys.active);
  return sys;
}

Vec solve_bias(const ActiveSystem& sys, int n) {
  if (sys.active < n) throw SingularGeometry("fewer usable pairs than dimensions");
  const Eigen::MatrixXd jtj = sys.rows.transpose() * sys.rows;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jtj);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(n - 1);
  if (!(lmin > 0.0) || lmax / lmin > kSingularCond) {
    throw SingularGeometry("weighted Jacobian is rank-deficient");
  }
  Eigen::VectorXd solution;
  if (lmax / lmin <= kNormalEqCond) {
    solution = jtj.llt().solve(sys.rows.transpose() * sys.mean);
  } else {
    solution = sys.rows.colPivHouseholderQr().solve(sys.mean);
  }
  Vec out(n);
  for (int k = 0; k < n; ++k) out[k] = solution[k];
  return out;
}

}  // namespace

double ideal_tdoa(const Vec& p, const Vec& anchor_i, const Vec& anchor_j) {
  const double di = (p - anchor_i).norm();
  const double dj = (p - anchor_j).norm();
  if (di < kCoincidentTol || dj < kCoincidentTol) {
    throw ValidationError("ideal_tdoa: tag coincides with an anchor");
  }
  return dj - di;
}

Vec tdoa_jacobian_row(const Vec& p, const Vec& anchor_i, const Vec& anchor_j) {
  const double di = (p - anchor_i).norm();
  const double dj = (p - anchor_j).norm();
  if (di < kCoincidentTol || dj < kCoincidentTol) {
    throw ValidationError("tdoa_jacobian_row: tag coincides with an anchor");
  }
  return (p - anchor_j) / dj - (p - anchor_i) / di;
}

SqMat fim(const Vec& p, const Placement& placement, const std::vector<PairCondition>& conditions,
          const std::vector<ErrorModel>& models) {
  const int n = static_cast<int>(p.size());
  SqMat info = SqMat::Zero(n, n);
  for (int q = 0; q < placement.pair_count(); ++q) {
    const Vec& ai = placement.pair_first(q);
    const Vec& aj = placement.pair_second(q);
    if (!conditions[q].usable() || pair_degenerate(p, ai, aj)) continue;
    const Vec u = tdoa_jacobian_row(p, ai, aj);
    info += (u * u.transpose()) / models[q].variance;
  }
  return info;
}

Vec bias(const Vec& p, const Placement& placement, const std::vector<PairCondition>& conditions,
         const std::vector<ErrorModel>& models) {
  return solve_bias(gather_active(p, placement, conditions, models),
                    static_cast<int>(p.size()));
}

SqMat bias_gradient(const Vec& p, const Placement& placement,
                    const std::vector<PairCondition>& conditions,
                    const std::vector<ErrorModel>& models, double step) {
  if (!(step > 0.0)) throw ValidationError("bias_gradient: step must be > 0");
  const int n = static_cast<int>(p.size());
  SqMat gradient(n, n);
  Vec probe = p;
  for (int k = 0; k < n; ++k) {
    probe[k] = p[k] + step;
    const Vec plus = bias(probe, placement, conditions, models);
    probe[k] = p[k] - step;
    const Vec minus = bias(probe, placement, conditions, models);
    probe[k] = p[k];
    gradient.col(k) = (plus - minus) / (2.0 * step);
  }
  return gradient;
}

PointMetrics mse_lower_bound(const Vec& p, const Placement& placement, const Scene& scene,
                             const NoiseParams& params, double bias_step) {
  const int n = scene.dimension;
  const int q_count = placement.pair_count();
  PointMetrics pm;
  pm.conditions.resize(q_count);
  pm.jacobian = Eigen::MatrixXd::Zero(q_count, n);
  std::vector<ErrorModel> models(q_count);

  for (int q = 0; q < q_count; ++q) {
    const Vec& ai = placement.pair_first(q);
    const Vec& aj = placement.pair_second(q);
    PairCondition cond = classify_pair(p, ai, aj, scene);
    if (pair_degenerate(p, ai, aj)) {
      cond.in_range = false;  // a zero-range link has no defined measurement
    } else {
      pm.jacobian.row(q) = tdoa_jacobian_row(p, ai, aj).transpose();
    }
    pm.conditions[q] = cond;
    if (cond.usable()) {
      models[q] = compose_model(cond, params);
      ++pm.active_pairs;
    }
  }

  pm.fim = fim(p, placement, pm.conditions, models);
  pm.bias = Vec::Zero(n);
  pm.bias_gradient = SqMat::Zero(n, n);

  Eigen::SelfAdjointEigenSolver<SqMat> eig(pm.fim);
  const double lmin = eig.eigenvalues()(0);
  const double lmax = eig.eigenvalues()(n - 1);
  if (!(lmin > 0.0) || lmax / lmin > kSingularCond) return pm;  // infeasible sentinel

  try {
    pm.bias = bias(p, placement, pm.conditions, models);
    pm.bias_gradient = bias_gradient(p, placement, pm.conditions, models, bias_step);
  } catch (const SingularGeometry&) {
    return pm;
  }

  const SqMat symmetric = 0.5 * (pm.fim + pm.fim.transpose());
  Eigen::LLT<SqMat> llt(symmetric);
  if (llt.info() != Eigen::Success) return pm;
  SqMat shifted = SqMat::Identity(n, n) + pm.bias_gradient;
  const SqMat solved = llt.solve(shifted.transpose());
  pm.mse_lb = (shifted * solved).trace() + pm.bias.squaredNorm();
  pm.feasible = true;
  return pm;
}

PlacementScore average_rmse(const Placement& placement, const Scene& scene,
                            const NoiseParams& params, double bias_step, int threads) {
  PlacementScore score;
  const long count = static_cast<long>(scene.sample_points.size());
  score.per_point.resize(count);
  parallel_for(count, threads, [&](long i) {
    score.per_point[i] =
        mse_lower_bound(scene.sample_points[i], placement, scene, params, bias_step);
  });
  double sum = 0.0;
  for (long i = 0; i < count; ++i) {
    if (!score.per_point[i].feasible) score.infeasible_points.push_back(static_cast<int>(i));
    sum += std::sqrt(score.per_point[i].mse_lb);
  }
  if (score.infeasible_points.empty()) {
    score.avg_rmse = sum / static_cast<double>(count);
  }
  return score;
}

double average_rmse_value(const Placement& placement, const Scene& scene,
                          const NoiseParams& params, double bias_step) {
  double sum = 0.0;
  const long count = static_cast<long>(scene.sample_points.size());
  for (long i = 0; i < count; ++i) {
    const PointMetrics pm =
        mse_lower_bound(scene.sample_points[i], placement, scene, params, bias_step);
    if (!pm.feasible) return std::numeric_limits<double>::infinity();
    sum += std::sqrt(pm.mse_lb);
  }
  return sum / static_cast<double>(count);
}

}  // namespace tdoa
