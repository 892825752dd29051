#pragma once

#include "tdoa/geometry.hpp"
#include "tdoa/rng.hpp"

#include <array>

namespace tdoa {

/// Log-normal bias component on the log scale. sign=+1 models the bias on
/// the tag to a_j link; sign=-1 mirrors the density for the tag to a_i link.
struct LogNormalParams {
  double mu = 0.0;
  double s = 1.0;
  int sign = +1;
};

struct GaussianMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Moments of the signed log-normal: the Gaussian with these moments is the
/// KL(f||q)-minimizing Gaussian approximation of the component.
GaussianMoments gaussian_approx_lognormal(const LogNormalParams& params);

/// Measurement error model parameters. Tag-link biases share log-normal
/// parameters between the two sides, mirrored by sign; anchor-anchor biases
/// are zero-mean Gaussians.
struct NoiseParams {
  double sigma_los = 0.05;
  LogNormalParams common_tag{-2.0, 0.6, +1};
  LogNormalParams severe_tag{-1.2, 0.7, +1};
  double common_aa_std = 0.03;
  double severe_aa_std = 0.40;
};

void validate_noise_params(const NoiseParams& params);

struct ErrorComponent {
  enum class Kind { TagLogNormal, AnchorGaussian };
  Kind kind = Kind::TagLogNormal;
  double mu = 0.0;
  double s = 0.0;
  int sign = +1;
  double std = 0.0;
};

/// Gaussian form of one composed TDOA error distribution plus the underlying
/// components, kept for exact sampling. The LOS noise sigma is folded into
/// `variance` but is not listed as a component.
struct ErrorModel {
  double mean = 0.0;
  double variance = 0.0;
  std::array<ErrorComponent, 3> components{};
  int component_count = 0;
};

/// Composes the error model for one usable pair condition: LOS noise plus the
/// active NLOS components selected by the condition. Means add with the
/// b_i-negative / b_j-positive sign convention; variances add by independence.
/// Throws ValidationError for blocked or out-of-range conditions.
ErrorModel compose_model(const PairCondition& cond, const NoiseParams& params);

/// Draws one measurement error from the exact component distributions (not
/// the Gaussian approximations). Draw order: LOS noise, then tag_i, tag_j,
/// anchor-anchor components.
double sample_error(const PairCondition& cond, const NoiseParams& params, RngStream& rng);

}  // namespace tdoa
