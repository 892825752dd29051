#include "tdoa/noise.hpp"

#include <cmath>

namespace tdoa {

GaussianMoments gaussian_approx_lognormal(const LogNormalParams& params) {
  if (!(params.s > 0.0)) throw ValidationError("log-normal scale s must be > 0");
  const double s2 = params.s * params.s;
  GaussianMoments g;
  g.mean = params.sign * std::exp(params.mu + 0.5 * s2);
  g.variance = (std::exp(s2) - 1.0) * std::exp(2.0 * params.mu + s2);
  return g;
}

void validate_noise_params(const NoiseParams& params) {
  if (!(params.sigma_los > 0.0)) throw ValidationError("sigma_los must be > 0");
  if (!(params.common_tag.s > 0.0)) throw ValidationError("common_tag.s must be > 0");
  if (!(params.severe_tag.s > 0.0)) throw ValidationError("severe_tag.s must be > 0");
  if (!(params.common_aa_std > 0.0)) throw ValidationError("common_aa_std must be > 0");
  if (!(params.severe_aa_std > 0.0)) throw ValidationError("severe_aa_std must be > 0");
}

ErrorModel compose_model(const PairCondition& cond, const NoiseParams& params) {
  if (!cond.usable()) {
    throw ValidationError("compose_model: blocked or out-of-range pair has no measurement");
  }
  ErrorModel model;
  model.variance = params.sigma_los * params.sigma_los;

  auto add_tag = [&](LinkCondition link, int sign) {
    if (link == LinkCondition::Los) return;
    const LogNormalParams& base =
        link == LinkCondition::CommonNlos ? params.common_tag : params.severe_tag;
    const LogNormalParams component{base.mu, base.s, sign};
    const GaussianMoments g = gaussian_approx_lognormal(component);
    model.mean += g.mean;
    model.variance += g.variance;
    model.components[model.component_count++] =
        ErrorComponent{ErrorComponent::Kind::TagLogNormal, component.mu, component.s, sign, 0.0};
  };
  add_tag(cond.tag_to_i, -1);
  add_tag(cond.tag_to_j, +1);

  if (cond.anchor_to_anchor != LinkCondition::Los) {
    const double sd = cond.anchor_to_anchor == LinkCondition::CommonNlos ? params.common_aa_std
                                                                         : params.severe_aa_std;
    model.variance += sd * sd;
    model.components[model.component_count++] =
        ErrorComponent{ErrorComponent::Kind::AnchorGaussian, 0.0, 0.0, +1, sd};
  }
  return model;
}

double sample_error(const PairCondition& cond, const NoiseParams& params, RngStream& rng) {
  const ErrorModel model = compose_model(cond, params);
  double e = rng.normal(0.0, params.sigma_los);
  for (int i = 0; i < model.component_count; ++i) {
    const ErrorComponent& c = model.components[i];
    if (c.kind == ErrorComponent::Kind::TagLogNormal) {
      e += c.sign * rng.lognormal(c.mu, c.s);
    } else {
      e += rng.normal(0.0, c.std);
    }
  }
  return e;
}

}  // namespace tdoa
