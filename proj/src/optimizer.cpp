#include "tdoa/optimizer.hpp"

#include "tdoa/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace tdoa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxSampleAttempts = 1000;

/// Search space of one anchor within one local-search start. Free anchors
/// move through the whole bounds box; face anchors move inside a fixed face
/// with the flat axis pinned.
struct AnchorDomain {
  bool on_face = false;
  Box region;
  int flat_axis = -1;

  int dim(int n) const { return on_face ? n - 1 : n; }

  void decode(const double* x, int n, Vec& out) const {
    out.resize(n);
    int t = 0;
    for (int k = 0; k < n; ++k) {
      if (on_face && k == flat_axis) {
        out[k] = region.min[k];
      } else if (on_face) {
        out[k] = std::clamp(x[t++], region.min[k], region.max[k]);
      } else {
        out[k] = x[t++];
      }
    }
  }

  void encode(const Vec& a, int n, double* x) const {
    int t = 0;
    for (int k = 0; k < n; ++k) {
      if (on_face && k == flat_axis) continue;
      x[t++] = a[k];
    }
  }

  double axis_lo(int t, int n) const { return region.min[param_axis(t, n)]; }
  double axis_hi(int t, int n) const { return region.max[param_axis(t, n)]; }

  int param_axis(int t, int n) const {
    int seen = 0;
    for (int k = 0; k < n; ++k) {
      if (on_face && k == flat_axis) continue;
      if (seen == t) return k;
      ++seen;
    }
    return n - 1;
  }
};

int locate_face(const std::vector<Box>& faces, const Vec& a, double tol) {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (faces[f].contains_closed(a, tol)) return static_cast<int>(f);
  }
  // Fall back to the nearest face; validation keeps this within tolerance.
  int best = 0;
  double best_dist = kInf;
  for (std::size_t f = 0; f < faces.size(); ++f) {
    double d = 0.0;
    for (int k = 0; k < a.size(); ++k) {
      d += std::max({faces[f].min[k] - a[k], a[k] - faces[f].max[k], 0.0});
    }
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(f);
    }
  }
  return best;
}

AnchorDomain domain_for_face(const Box& face) {
  AnchorDomain d;
  d.on_face = true;
  d.region = face;
  d.flat_axis = face.flat_axis();
  return d;
}

AnchorDomain domain_free(const Scene& scene) {
  AnchorDomain d;
  d.on_face = false;
  d.region = scene.bounds;
  return d;
}

Vec sample_on_face(const Box& face, RngStream& rng) {
  const int n = face.dimension();
  Vec p(n);
  for (int k = 0; k < n; ++k) p[k] = rng.uniform(face.min[k], face.max[k]);
  return p;
}

/// Samples one feasible anchor, returning the domain it lives in. Faces are
/// picked proportionally to their measure. Throws NoFeasibleStart after 1000
/// consecutive rejected draws.
std::pair<Vec, AnchorDomain> sample_anchor(const Scene& scene, const std::vector<Box>& faces,
                                           RngStream& rng) {
  const int n = scene.dimension;
  if (faces.empty()) {
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
      Vec p(n);
      for (int k = 0; k < n; ++k) p[k] = rng.uniform(scene.bounds.min[k], scene.bounds.max[k]);
      if (!scene.inside_any_obstacle(p)) return {p, domain_free(scene)};
    }
  } else {
    double total = 0.0;
    for (const auto& f : faces) total += f.measure();
    if (total <= 0.0) throw NoFeasibleStart("feasible faces have zero total measure");
    for (int attempt = 0; attempt < kMaxSampleAttempts; ++attempt) {
      double u = rng.uniform01() * total;
      std::size_t pick = faces.size() - 1;
      for (std::size_t f = 0; f < faces.size(); ++f) {
        u -= faces[f].measure();
        if (u <= 0.0) {
          pick = f;
          break;
        }
      }
      const Vec p = sample_on_face(faces[pick], rng);
      if (!scene.inside_any_obstacle(p)) return {p, domain_for_face(faces[pick])};
    }
  }
  throw NoFeasibleStart("anchor sampler failed 1000 consecutive draws");
}

// Search values at or above kPlateau stand for the +inf sentinel. Ranking
// unlocalizable placements by how many usable pairs each sample point still
// lacks gives the local search a slope toward full coverage even when single
// block moves cannot make the whole scene localizable; any localizable
// placement still beats every unlocalizable one.
constexpr double kPlateau = 1e100;
constexpr double kPlateauStep = 1e90;  // far above ulp(kPlateau)
constexpr double kRejected = 1e200;

double to_reported(double search_value) {
  return search_value >= kPlateau ? kInf : search_value;
}

double search_objective(const Scene& scene, const NoiseParams& params, double bias_step,
                        const Placement& placement) {
  double sum = 0.0;
  long deficiency = 0;
  for (const auto& p : scene.sample_points) {
    const PointMetrics pm = mse_lower_bound(p, placement, scene, params, bias_step);
    if (pm.feasible) {
      sum += std::sqrt(pm.mse_lb);
    } else {
      const long missing = scene.dimension - std::min(pm.active_pairs, scene.dimension);
      deficiency += std::max<long>(1, missing);
    }
  }
  if (deficiency > 0) return kPlateau + static_cast<double>(deficiency) * kPlateauStep;
  return sum / static_cast<double>(scene.sample_points.size());
}

/// Objective for one block trial: feasibility by rejection, then the shaped
/// scene objective with the trial pair substituted.
double eval_block(const Scene& scene, const NoiseParams& params, double bias_step,
                  Placement& placement, int q, const Vec& pa, const Vec& pb) {
  if (!scene.bounds.contains_closed(pa) || scene.inside_any_obstacle(pa)) return kRejected;
  if (!scene.bounds.contains_closed(pb) || scene.inside_any_obstacle(pb)) return kRejected;
  placement.anchors[2 * q] = pa;
  placement.anchors[2 * q + 1] = pb;
  return search_objective(scene, params, bias_step, placement);
}

struct TrackedObjective {
  std::function<double(const Eigen::VectorXd&)> fn;
  long budget = 0;
  long evals = 0;
  double best = kInf;
  Eigen::VectorXd best_x;

  bool exhausted() const { return evals >= budget; }

  double operator()(const Eigen::VectorXd& x) {
    ++evals;
    const double v = fn(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
    return v;
  }
};

void nelder_mead(TrackedObjective& f, const Eigen::VectorXd& x0, const Eigen::VectorXd& scale) {
  const int d = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  std::vector<Eigen::VectorXd> xs(d + 1, x0);
  std::vector<double> fs(d + 1, kInf);
  if (f.exhausted()) return;
  fs[0] = f(xs[0]);
  for (int k = 0; k < d; ++k) {
    xs[k + 1][k] += scale[k];
    if (f.exhausted()) return;
    fs[k + 1] = f(xs[k + 1]);
  }

  std::vector<int> order(d + 1);
  while (!f.exhausted()) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });

    bool all_finite = true;
    for (double v : fs) all_finite &= std::isfinite(v);
    if (all_finite) {
      double spread = 0.0, diam = 0.0;
      for (int i = 0; i <= d; ++i) {
        spread = std::max(spread, std::abs(fs[i] - fs[order[0]]));
        diam = std::max(diam, (xs[i] - xs[order[0]]).lpNorm<Eigen::Infinity>());
      }
      if (spread <= 1e-12 * (1.0 + std::abs(fs[order[0]])) && diam <= 1e-10) break;
    }

    const int worst = order[d];
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < d; ++i) centroid += xs[order[i]];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
    const double fr = f(xr);
    if (fr < fs[order[0]]) {
      if (f.exhausted()) {
        if (fr < fs[worst]) {
          xs[worst] = xr;
          fs[worst] = fr;
        }
        break;
      }
      const Eigen::VectorXd xe = centroid + gamma * (centroid - xs[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        xs[worst] = xe;
        fs[worst] = fe;
      } else {
        xs[worst] = xr;
        fs[worst] = fr;
      }
    } else if (fr < fs[order[d - 1]]) {
      xs[worst] = xr;
      fs[worst] = fr;
    } else {
      if (f.exhausted()) break;
      if (fr < fs[worst]) {
        const Eigen::VectorXd xc = centroid + rho * (xr - centroid);
        const double fc = f(xc);
        if (fc <= fr) {
          xs[worst] = xc;
          fs[worst] = fc;
          continue;
        }
      } else {
        const Eigen::VectorXd xc = centroid - rho * (centroid - xs[worst]);
        const double fc = f(xc);
        if (fc < fs[worst]) {
          xs[worst] = xc;
          fs[worst] = fc;
          continue;
        }
      }
      // Shrink toward the best vertex.
      for (int i = 1; i <= d; ++i) {
        const int idx = order[i];
        xs[idx] = xs[order[0]] + sigma * (xs[idx] - xs[order[0]]);
        if (f.exhausted()) return;
        fs[idx] = f(xs[idx]);
      }
    }
  }
}

void pattern_search(TrackedObjective& f, const Eigen::VectorXd& x0,
                    const Eigen::VectorXd& scale) {
  Eigen::VectorXd x = x0;
  if (f.exhausted()) return;
  double fx = f(x);
  Eigen::VectorXd step = scale;
  const int d = static_cast<int>(x.size());
  while (!f.exhausted() && step.lpNorm<Eigen::Infinity>() > 1e-10) {
    bool improved = false;
    for (int k = 0; k < d && !f.exhausted(); ++k) {
      for (int s : {+1, -1}) {
        if (f.exhausted()) break;
        Eigen::VectorXd trial = x;
        trial[k] += s * step[k];
        const double v = f(trial);
        if (v < fx) {
          x = trial;
          fx = v;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
}

struct StartSpec {
  AnchorDomain da;
  AnchorDomain db;
  Eigen::VectorXd x0;
};

StartSpec make_start(const AnchorDomain& da, const AnchorDomain& db, const Vec& a, const Vec& b,
                     int n) {
  StartSpec s{da, db, Eigen::VectorXd(da.dim(n) + db.dim(n))};
  da.encode(a, n, s.x0.data());
  db.encode(b, n, s.x0.data() + da.dim(n));
  return s;
}

Eigen::VectorXd start_scale(const StartSpec& s, int n, double fraction) {
  const int da = s.da.dim(n);
  const int dim = da + s.db.dim(n);
  Eigen::VectorXd scale(dim);
  for (int t = 0; t < dim; ++t) {
    const AnchorDomain& dom = t < da ? s.da : s.db;
    const int local = t < da ? t : t - da;
    const double lo = dom.axis_lo(local, n);
    const double hi = dom.axis_hi(local, n);
    double step = fraction * (hi - lo);
    if (!(step > 0.0)) step = fraction;
    // Point the initial simplex inward when the start sits near the upper end.
    if (s.x0[t] + step > hi) step = -step;
    scale[t] = step;
  }
  return scale;
}

BlockResult enumerate_block(int q, const Placement& current, const Scene& scene,
                            const NoiseParams& params, const BcmConfig& cfg) {
  const auto& cands = scene.feasible.points;
  BlockResult best;
  best.objective = kInf;
  long evals = 0;
  Placement trial = current;
  bool found = false;
  for (std::size_t u = 0; u < cands.size(); ++u) {
    for (std::size_t v = 0; v < cands.size(); ++v) {
      if (u == v) continue;
      const double fv = eval_block(scene, params, cfg.bias_step, trial, q, cands[u], cands[v]);
      ++evals;
      if (!found || fv < best.objective) {
        best.objective = fv;
        best.anchor_a = cands[u];
        best.anchor_b = cands[v];
        found = true;
      }
    }
  }
  if (!found) throw NoFeasibleStart("explicit candidate set has fewer than two points");
  best.objective = to_reported(best.objective);
  best.evaluations = evals;
  return best;
}

}  // namespace

BlockResult optimize_block(int q, const Placement& current, const Scene& scene,
                           const NoiseParams& params, const BcmConfig& cfg,
                           std::uint64_t stream_salt) {
  if (q < 0 || q >= current.pair_count()) throw ValidationError("optimize_block: bad pair index");
  if (cfg.n_starts < 1 || cfg.local_budget < 1) {
    throw ValidationError("optimize_block: n_starts and local_budget must be >= 1");
  }
  if (scene.feasible.kind == FeasibilityKind::ExplicitSet && !scene.feasible.points.empty()) {
    return enumerate_block(q, current, scene, params, cfg);
  }

  const int n = scene.dimension;
  const std::vector<Box> faces = feasible_faces(scene);

  std::vector<StartSpec> starts;
  starts.reserve(cfg.n_starts + 1);
  if (cfg.include_incumbent) {
    const Vec& a = current.pair_first(q);
    const Vec& b = current.pair_second(q);
    AnchorDomain da = faces.empty() ? domain_free(scene)
                                    : domain_for_face(faces[locate_face(faces, a, 1e-9)]);
    AnchorDomain db = faces.empty() ? domain_free(scene)
                                    : domain_for_face(faces[locate_face(faces, b, 1e-9)]);
    starts.push_back(make_start(da, db, a, b, n));
  }
  for (int s = 0; s < cfg.n_starts; ++s) {
    RngStream rng = RngStream::substream(cfg.seed, stream_salt, static_cast<std::uint64_t>(q),
                                         static_cast<std::uint64_t>(s) + 1);
    auto [a, da] = sample_anchor(scene, faces, rng);
    auto [b, db] = sample_anchor(scene, faces, rng);
    starts.push_back(make_start(da, db, a, b, n));
  }

  struct StartOutcome {
    double value = kInf;
    Eigen::VectorXd x;
    long evals = 0;
  };
  std::vector<StartOutcome> outcomes(starts.size());

  parallel_for(static_cast<long>(starts.size()), cfg.threads, [&](long i) {
    const StartSpec& start = starts[i];
    Placement trial = current;
    Vec pa, pb;
    TrackedObjective obj;
    obj.budget = cfg.local_budget;
    obj.fn = [&](const Eigen::VectorXd& x) {
      start.da.decode(x.data(), n, pa);
      start.db.decode(x.data() + start.da.dim(n), n, pb);
      return eval_block(scene, params, cfg.bias_step, trial, q, pa, pb);
    };
    if (cfg.local_search == LocalSearch::NelderMead) {
      nelder_mead(obj, start.x0, start_scale(start, n, 0.05));
    } else {
      pattern_search(obj, start.x0, start_scale(start, n, 0.25));
    }
    outcomes[i].value = obj.best;
    outcomes[i].x = obj.best_x.size() ? obj.best_x : start.x0;
    outcomes[i].evals = obj.evals;
  });

  std::size_t winner = 0;
  long total_evals = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    total_evals += outcomes[i].evals;
    if (outcomes[i].value < outcomes[winner].value) winner = i;
  }

  BlockResult result;
  const StartSpec& ws = starts[winner];
  ws.da.decode(outcomes[winner].x.data(), n, result.anchor_a);
  ws.db.decode(outcomes[winner].x.data() + ws.da.dim(n), n, result.anchor_b);
  result.objective = to_reported(outcomes[winner].value);
  result.evaluations = total_evals;
  return result;
}

BcmResult bcm_optimize(const Placement& initial, const Scene& scene, const NoiseParams& params,
                       const BcmConfig& cfg) {
  if (cfg.max_iter < 1) throw ValidationError("bcm_optimize: max_iter must be >= 1");
  validate_placement(scene, initial);
  Placement current = canonicalize_placement(scene, initial);
  double objective = average_rmse_value(current, scene, params, cfg.bias_step);

  BcmResult result;
  for (int sweep = 0; sweep < cfg.max_iter; ++sweep) {
    const double sweep_before = objective;
    for (int q = 0; q < current.pair_count(); ++q) {
      BlockResult block = optimize_block(q, current, scene, params, cfg,
                                         static_cast<std::uint64_t>(sweep));
      result.trace.updates.push_back({sweep + 1, q + 1, objective, block.objective,
                                      block.anchor_a, block.anchor_b, block.evaluations});
      current.anchors[2 * q] = block.anchor_a;
      current.anchors[2 * q + 1] = block.anchor_b;
      objective = block.objective;
    }
    if (cfg.early_stop_tol > 0.0 && sweep_before - objective < cfg.early_stop_tol) break;
  }

  result.placement = current;
  result.score = average_rmse(current, scene, params, cfg.bias_step, cfg.threads);
  return result;
}

Placement random_placement(int pairs, const Scene& scene, RngStream& rng) {
  if (pairs < 1) throw ValidationError("random_placement: pairs must be >= 1");
  Placement placement;
  placement.anchors.reserve(2 * pairs);
  if (scene.feasible.kind == FeasibilityKind::ExplicitSet && !scene.feasible.points.empty()) {
    const auto& cands = scene.feasible.points;
    if (cands.size() < 2) throw NoFeasibleStart("explicit candidate set has fewer than two points");
    for (int q = 0; q < pairs; ++q) {
      const std::size_t u = rng.uniform_index(cands.size());
      std::size_t v = u;
      for (int attempt = 0; attempt < kMaxSampleAttempts && v == u; ++attempt) {
        v = rng.uniform_index(cands.size());
      }
      if (v == u) throw NoFeasibleStart("could not draw a distinct candidate pair");
      placement.anchors.push_back(cands[u]);
      placement.anchors.push_back(cands[v]);
    }
    return placement;
  }
  const std::vector<Box> faces = feasible_faces(scene);
  for (int i = 0; i < 2 * pairs; ++i) {
    placement.anchors.push_back(sample_anchor(scene, faces, rng).first);
  }
  return placement;
}

Placement canonicalize_placement(const Scene& scene, const Placement& placement) {
  Placement out = placement;
  if (scene.feasible.kind == FeasibilityKind::FreeSpace) return out;
  if (scene.feasible.kind == FeasibilityKind::ExplicitSet && !scene.feasible.points.empty()) {
    for (auto& a : out.anchors) {
      const auto& cands = scene.feasible.points;
      std::size_t best = 0;
      double best_d = kInf;
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const double d = (a - cands[c]).norm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      a = cands[best];
    }
    return out;
  }
  const std::vector<Box> faces = feasible_faces(scene);
  const int n = scene.dimension;
  for (auto& a : out.anchors) {
    const AnchorDomain dom = domain_for_face(faces[locate_face(faces, a, 1e-9)]);
    Eigen::VectorXd x(dom.dim(n));
    dom.encode(a, n, x.data());
    dom.decode(x.data(), n, a);
  }
  return out;
}

}  // namespace tdoa
