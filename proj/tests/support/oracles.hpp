// Independent oracles used by the unit and acceptance suites. Everything here
// recomputes expected values through a different route than the library code
// under test.
#pragma once

#include "tdoa/geometry.hpp"
#include "tdoa/metric.hpp"
#include "tdoa/noise.hpp"
#include "tdoa/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace oracle {

using tdoa::Vec;

/// Central finite differences of ideal_tdoa.
inline Vec jacobian_fd(const Vec& p, const Vec& ai, const Vec& aj, double step = 1e-6) {
  Vec g(p.size());
  Vec probe = p;
  for (int k = 0; k < p.size(); ++k) {
    probe[k] = p[k] + step;
    const double fp = tdoa::ideal_tdoa(probe, ai, aj);
    probe[k] = p[k] - step;
    const double fm = tdoa::ideal_tdoa(probe, ai, aj);
    probe[k] = p[k];
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Monte-Carlo FIM for independent Gaussian TDOA measurements: the empirical
/// second moment of the score function over `draws` samples. Rows and
/// variances describe the active pairs only.
inline Eigen::MatrixXd fim_score_mc(const std::vector<Vec>& rows,
                                    const std::vector<double>& variances, long draws,
                                    tdoa::RngStream& rng) {
  const int n = static_cast<int>(rows.empty() ? 0 : rows[0].size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd score(n);
  for (long s = 0; s < draws; ++s) {
    score.setZero();
    for (std::size_t q = 0; q < rows.size(); ++q) {
      // d - mean - ideal = sigma * z, so the score term is u * z / sigma.
      const double z = rng.normal();
      const double sigma = std::sqrt(variances[q]);
      for (int k = 0; k < n; ++k) score[k] += rows[q][k] * z / sigma;
    }
    acc += score * score.transpose();
  }
  return acc / static_cast<double>(draws);
}

/// Least-squares bias oracle: SVD pseudoinverse applied to the expected
/// biases of the active rows.
inline Eigen::VectorXd bias_pinv(const Eigen::MatrixXd& rows, const Eigen::VectorXd& means) {
  return rows.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(means);
}

/// Closed-form log-normal moments, written out independently of the library.
inline double lognormal_mean(double mu, double s) { return std::exp(mu + s * s / 2.0); }
inline double lognormal_var(double mu, double s) {
  const double es2 = std::exp(s * s);
  return (es2 - 1.0) * std::exp(2.0 * mu) * es2;
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  double se_mean = 0.0;  // standard error of the sample mean
  double se_var = 0.0;   // standard error of the sample variance
  long count = 0;
};

/// Sample moments with their standard errors (the SE of the variance uses the
/// fourth central moment).
template <typename DrawFn>
Moments sample_moments(long draws, DrawFn&& draw) {
  std::vector<double> xs(draws);
  double sum = 0.0;
  for (long i = 0; i < draws; ++i) {
    xs[i] = draw();
    sum += xs[i];
  }
  Moments m;
  m.count = draws;
  m.mean = sum / static_cast<double>(draws);
  double m2 = 0.0, m4 = 0.0;
  for (long i = 0; i < draws; ++i) {
    const double d = xs[i] - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(draws);
  m4 /= static_cast<double>(draws);
  m.variance = m2;
  m.se_mean = std::sqrt(m2 / static_cast<double>(draws));
  m.se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / static_cast<double>(draws));
  return m;
}

/// Random well-posed anchor configuration around a target point: anchors at
/// radius 2..5 with jittered angles, so the FIM stays comfortably
/// non-singular.
struct RandomConfig {
  Vec p;
  tdoa::Placement placement;
  std::vector<double> variances;
};

inline RandomConfig random_config(int dimension, int pairs, tdoa::RngStream& rng) {
  RandomConfig cfg;
  cfg.p = Vec::Zero(dimension);
  for (int k = 0; k < dimension; ++k) cfg.p[k] = rng.uniform(-1.0, 1.0);
  const int anchors = 2 * pairs;
  for (int a = 0; a < anchors; ++a) {
    const double radius = rng.uniform(2.0, 5.0);
    Vec dir(dimension);
    if (dimension == 2) {
      const double theta = 2.0 * M_PI * a / anchors + rng.uniform(-0.3, 0.3);
      dir = tdoa::vec2(std::cos(theta), std::sin(theta));
    } else {
      const double theta = 2.0 * M_PI * a / anchors + rng.uniform(-0.3, 0.3);
      const double phi = rng.uniform(0.3, M_PI - 0.3);
      dir = tdoa::vec3(std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta),
                       std::cos(phi));
    }
    cfg.placement.anchors.push_back(cfg.p + radius * dir);
  }
  for (int q = 0; q < pairs; ++q) cfg.variances.push_back(rng.uniform(0.002, 0.02));
  return cfg;
}

/// Scene with a random box room, up to three random obstacles, and a few
/// sample points kept clear of the obstacles.
inline tdoa::Scene random_scene(int dimension, tdoa::RngStream& rng, int max_obstacles = 3) {
  tdoa::Scene scene;
  scene.dimension = dimension;
  scene.bounds.min = Vec::Zero(dimension);
  scene.bounds.max = Vec::Zero(dimension);
  for (int k = 0; k < dimension; ++k) scene.bounds.max[k] = rng.uniform(4.0, 8.0);
  scene.operating_range = rng.uniform(15.0, 30.0);

  const int obstacles = static_cast<int>(rng.uniform_index(max_obstacles + 1));
  for (int i = 0; i < obstacles; ++i) {
    tdoa::Obstacle o;
    o.box.min = Vec(dimension);
    o.box.max = Vec(dimension);
    for (int k = 0; k < dimension; ++k) {
      const double lo = rng.uniform(scene.bounds.min[k] + 0.3, scene.bounds.max[k] - 1.0);
      o.box.min[k] = lo;
      o.box.max[k] = lo + rng.uniform(0.3, 1.2);
    }
    const std::size_t m = rng.uniform_index(3);
    o.material = m == 0 ? tdoa::Material::Blocking
                        : (m == 1 ? tdoa::Material::Metal : tdoa::Material::NonMetal);
    scene.obstacles.push_back(o);
  }

  const int points = 2 + static_cast<int>(rng.uniform_index(4));
  while (static_cast<int>(scene.sample_points.size()) < points) {
    Vec p(dimension);
    for (int k = 0; k < dimension; ++k) {
      p[k] = rng.uniform(scene.bounds.min[k] + 0.1, scene.bounds.max[k] - 0.1);
    }
    if (!scene.on_or_inside_any_obstacle(p)) scene.sample_points.push_back(p);
  }
  return scene;
}

}  // namespace oracle
