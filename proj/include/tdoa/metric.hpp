#pragma once

#include "tdoa/geometry.hpp"
#include "tdoa/noise.hpp"

#include <Eigen/Dense>

#include <limits>
#include <vector>

namespace tdoa {

struct SingularGeometry : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything the MSE bound computes at one sample point. For infeasible
/// points (singular weighted FIM) mse_lb is +inf and bias / bias_gradient are
/// zero.
struct PointMetrics {
  Eigen::MatrixXd jacobian;  // Q x n geometric rows d(tdoa)/dp
  SqMat fim;                 // weighted Fisher information
  Vec bias;
  SqMat bias_gradient;
  double mse_lb = std::numeric_limits<double>::infinity();
  int active_pairs = 0;
  bool feasible = false;
  std::vector<PairCondition> conditions;
};

struct PlacementScore {
  double avg_rmse = std::numeric_limits<double>::infinity();
  std::vector<PointMetrics> per_point;
  std::vector<int> infeasible_points;
};

/// Range difference ||p - a_j|| - ||p - a_i||. Throws ValidationError when p
/// coincides with an anchor (the gradient is undefined there).
double ideal_tdoa(const Vec& p, const Vec& anchor_i, const Vec& anchor_j);

/// Gradient of ideal_tdoa in p: the difference of the two unit vectors.
Vec tdoa_jacobian_row(const Vec& p, const Vec& anchor_i, const Vec& anchor_j);

/// Weighted FIM: sum over usable pairs of u u^T / variance. Entries of
/// `models` for unusable pairs are ignored. Never throws; singularity is the
/// caller's concern.
SqMat fim(const Vec& p, const Placement& placement, const std::vector<PairCondition>& conditions,
          const std::vector<ErrorModel>& models);

/// Weighted estimation bias: pseudoinverse of the weighted Jacobian applied
/// to the expected NLOS biases. Throws SingularGeometry when the active rows
/// do not determine the position (condition number above 1e12).
Vec bias(const Vec& p, const Placement& placement, const std::vector<PairCondition>& conditions,
         const std::vector<ErrorModel>& models);

/// Bias gradient by central differences with the NLOS conditions frozen at
/// their values at p; only the geometry varies across the stencil.
SqMat bias_gradient(const Vec& p, const Placement& placement,
                    const std::vector<PairCondition>& conditions,
                    const std::vector<ErrorModel>& models, double step = 1e-3);

/// Classifies every pair at p, composes the error models, and evaluates the
/// bias-aware MSE lower bound Tr((I+D) FIM^-1 (I+D)^T) + ||bias||^2.
PointMetrics mse_lower_bound(const Vec& p, const Placement& placement, const Scene& scene,
                             const NoiseParams& params, double bias_step = 1e-3);

/// Average of sqrt(mse_lb) over the scene's sample points. Any infeasible
/// point poisons the average with the +inf sentinel. Per-point evaluation may
/// run on several threads; the reduction order is fixed.
PlacementScore average_rmse(const Placement& placement, const Scene& scene,
                            const NoiseParams& params, double bias_step = 1e-3, int threads = 1);

/// Objective-only variant of average_rmse: returns the same value but stops
/// at the first infeasible point.
double average_rmse_value(const Placement& placement, const Scene& scene,
                          const NoiseParams& params, double bias_step = 1e-3);

}  // namespace tdoa
