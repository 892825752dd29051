#include "tdoa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tdoa {

namespace {

// Slack on slab comparisons; keeps axis-parallel grazing segments and
// face-touching endpoints classified as contact.
constexpr double kSlabEps = 1e-9;

bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace

double Box::measure() const {
  double m = 1.0;
  for (int k = 0; k < dimension(); ++k) {
    const double e = max[k] - min[k];
    if (e > 0.0) m *= e;
  }
  return m;
}

bool Box::contains_closed(const Vec& p, double tol) const {
  for (int k = 0; k < dimension(); ++k) {
    if (p[k] < min[k] - tol || p[k] > max[k] + tol) return false;
  }
  return true;
}

bool Box::contains_strict(const Vec& p) const {
  for (int k = 0; k < dimension(); ++k) {
    if (!(p[k] > min[k] && p[k] < max[k])) return false;
  }
  return true;
}

int Box::flat_axis() const {
  for (int k = 0; k < dimension(); ++k) {
    if (max[k] == min[k]) return k;
  }
  return -1;
}

const char* to_string(Material m) {
  switch (m) {
    case Material::Blocking: return "blocking";
    case Material::Metal: return "metal";
    case Material::NonMetal: return "non_metal";
  }
  return "?";
}

const char* to_string(LinkCondition c) {
  switch (c) {
    case LinkCondition::Los: return "los";
    case LinkCondition::CommonNlos: return "common_nlos";
    case LinkCondition::SevereNlos: return "severe_nlos";
    case LinkCondition::Blocked: return "blocked";
  }
  return "?";
}

bool Scene::inside_any_obstacle(const Vec& p) const {
  for (const auto& o : obstacles) {
    if (o.box.contains_strict(p)) return true;
  }
  return false;
}

bool Scene::on_or_inside_any_obstacle(const Vec& p) const {
  for (const auto& o : obstacles) {
    if (o.box.contains_closed(p)) return true;
  }
  return false;
}

bool segment_intersects_box(const Vec& p0, const Vec& p1, const Box& box) {
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int k = 0; k < box.dimension(); ++k) {
    const double d = p1[k] - p0[k];
    if (d == 0.0) {
      // Axis-parallel slab: the axis never constrains t, it only vetoes.
      if (p0[k] < box.min[k] - kSlabEps || p0[k] > box.max[k] + kSlabEps) return false;
    } else {
      double ta = (box.min[k] - p0[k]) / d;
      double tb = (box.max[k] - p0[k]) / d;
      if (ta > tb) std::swap(ta, tb);
      t_enter = std::max(t_enter, ta);
      t_exit = std::min(t_exit, tb);
      if (t_enter > t_exit + kSlabEps) return false;
    }
  }
  return true;
}

LinkCondition classify_link(const Vec& p0, const Vec& p1, const Scene& scene) {
  if (!finite(p0) || !finite(p1)) throw ValidationError("classify_link: non-finite endpoint");
  for (const auto& o : scene.obstacles) {
    if (o.box.contains_strict(p0) || o.box.contains_strict(p1)) {
      throw ValidationError("classify_link: endpoint strictly inside an obstacle");
    }
  }
  bool blocking = false, metal = false, non_metal = false;
  for (const auto& o : scene.obstacles) {
    if (!segment_intersects_box(p0, p1, o.box)) continue;
    switch (o.material) {
      case Material::Blocking: blocking = true; break;
      case Material::Metal: metal = true; break;
      case Material::NonMetal: non_metal = true; break;
    }
  }
  if (blocking) return LinkCondition::Blocked;
  if (metal) return LinkCondition::SevereNlos;
  if (non_metal) return LinkCondition::CommonNlos;
  return LinkCondition::Los;
}

PairCondition classify_pair(const Vec& p, const Vec& anchor_i, const Vec& anchor_j,
                            const Scene& scene) {
  PairCondition cond;
  cond.tag_to_i = classify_link(p, anchor_i, scene);
  cond.tag_to_j = classify_link(p, anchor_j, scene);
  cond.anchor_to_anchor = classify_link(anchor_i, anchor_j, scene);
  const double r_max = std::max({(p - anchor_i).norm(), (p - anchor_j).norm(),
                                 (anchor_i - anchor_j).norm()});
  cond.in_range = r_max <= scene.operating_range;
  return cond;
}

std::vector<double> grid_axis_coords(double lo, double hi, double spacing) {
  if (!(spacing > 0.0)) throw ValidationError("grid spacing must be > 0");
  if (hi < lo) throw ValidationError("grid axis has max < min");
  const double extent = hi - lo;
  const int cells = extent > 0.0 ? static_cast<int>(std::ceil(extent / spacing - 1e-12)) : 0;
  std::vector<double> coords(cells + 1);
  const double step = cells > 0 ? extent / cells : 0.0;
  for (int i = 0; i <= cells; ++i) {
    coords[i] = (i == cells) ? hi : lo + i * step;
  }
  return coords;
}

std::vector<Vec> grid_sample_roi(const Box& region, double spacing, const Scene& scene) {
  const int n = scene.dimension;
  if (region.dimension() != n) throw ValidationError("grid region dimension mismatch");
  std::vector<std::vector<double>> axes(n);
  for (int k = 0; k < n; ++k) axes[k] = grid_axis_coords(region.min[k], region.max[k], spacing);

  std::vector<Vec> points;
  std::vector<int> idx(n, 0);
  Vec p(n);
  while (true) {
    for (int k = 0; k < n; ++k) p[k] = axes[k][idx[k]];
    if (scene.bounds.contains_closed(p) && !scene.on_or_inside_any_obstacle(p)) {
      points.push_back(p);
    }
    // Lexicographic: the last axis varies fastest.
    int k = n - 1;
    while (k >= 0 && ++idx[k] == static_cast<int>(axes[k].size())) {
      idx[k] = 0;
      --k;
    }
    if (k < 0) break;
  }
  if (points.empty()) throw ValidationError("grid_sample_roi: region is fully obstructed");
  return points;
}

std::vector<Box> boundary_faces(const Box& bounds) {
  std::vector<Box> faces;
  for (int k = 0; k < bounds.dimension(); ++k) {
    for (int side = 0; side < 2; ++side) {
      Box f{bounds.min, bounds.max};
      const double v = side == 0 ? bounds.min[k] : bounds.max[k];
      f.min[k] = v;
      f.max[k] = v;
      faces.push_back(f);
    }
  }
  return faces;
}

std::vector<Box> feasible_faces(const Scene& scene) {
  switch (scene.feasible.kind) {
    case FeasibilityKind::Boundary: return boundary_faces(scene.bounds);
    case FeasibilityKind::ExplicitSet: return scene.feasible.faces;
    case FeasibilityKind::FreeSpace: break;
  }
  return {};
}

namespace {

bool on_face(const Box& face, const Vec& p, double tol) {
  return face.contains_closed(p, tol);
}

}  // namespace

bool anchor_feasible(const Scene& scene, const Vec& anchor, double tol) {
  if (static_cast<int>(anchor.size()) != scene.dimension || !finite(anchor)) return false;
  if (!scene.bounds.contains_closed(anchor, tol)) return false;
  if (scene.inside_any_obstacle(anchor)) return false;
  switch (scene.feasible.kind) {
    case FeasibilityKind::FreeSpace:
      return true;
    case FeasibilityKind::Boundary: {
      for (const auto& f : boundary_faces(scene.bounds)) {
        if (on_face(f, anchor, tol)) return true;
      }
      return false;
    }
    case FeasibilityKind::ExplicitSet: {
      for (const auto& c : scene.feasible.points) {
        if ((anchor - c).lpNorm<Eigen::Infinity>() <= tol) return true;
      }
      for (const auto& f : scene.feasible.faces) {
        if (on_face(f, anchor, tol)) return true;
      }
      return false;
    }
  }
  return false;
}

void validate_scene(const Scene& scene) {
  if (scene.dimension != 2 && scene.dimension != 3) {
    throw ValidationError("scene dimension must be 2 or 3");
  }
  const int n = scene.dimension;
  auto check_vec = [&](const Vec& v, const std::string& what) {
    if (static_cast<int>(v.size()) != n) throw ValidationError(what + ": dimension mismatch");
    if (!v.allFinite()) throw ValidationError(what + ": non-finite coordinate");
  };
  check_vec(scene.bounds.min, "bounds.min");
  check_vec(scene.bounds.max, "bounds.max");
  for (int k = 0; k < n; ++k) {
    if (!(scene.bounds.min[k] < scene.bounds.max[k])) {
      throw ValidationError("bounds must satisfy min < max on every axis");
    }
  }
  for (std::size_t i = 0; i < scene.obstacles.size(); ++i) {
    const Box& b = scene.obstacles[i].box;
    check_vec(b.min, "obstacle min");
    check_vec(b.max, "obstacle max");
    for (int k = 0; k < n; ++k) {
      if (!(b.min[k] < b.max[k])) {
        throw ValidationError("obstacle " + std::to_string(i) +
                              " must satisfy min < max on every axis");
      }
    }
  }
  if (scene.sample_points.empty()) throw ValidationError("scene needs at least one sample point");
  for (std::size_t i = 0; i < scene.sample_points.size(); ++i) {
    const Vec& p = scene.sample_points[i];
    check_vec(p, "sample point " + std::to_string(i));
    if (!scene.bounds.contains_closed(p)) {
      throw ValidationError("sample point " + std::to_string(i) + " lies outside the bounds");
    }
    if (scene.on_or_inside_any_obstacle(p)) {
      throw ValidationError("sample point " + std::to_string(i) +
                            " is not strictly outside every obstacle");
    }
  }
  if (!(scene.operating_range > 0.0)) throw ValidationError("operating_range must be > 0");

  const auto& fs = scene.feasible;
  if (fs.kind == FeasibilityKind::ExplicitSet) {
    if (fs.points.empty() == fs.faces.empty()) {
      throw ValidationError("explicit feasibility needs exactly one of points or faces");
    }
    for (const auto& c : fs.points) {
      check_vec(c, "feasible point");
      if (!scene.bounds.contains_closed(c)) {
        throw ValidationError("feasible point lies outside the bounds");
      }
      if (scene.inside_any_obstacle(c)) {
        throw ValidationError("feasible point lies inside an obstacle");
      }
    }
    for (const auto& f : fs.faces) {
      check_vec(f.min, "feasible face min");
      check_vec(f.max, "feasible face max");
      int flat = 0;
      for (int k = 0; k < n; ++k) {
        if (f.min[k] > f.max[k]) throw ValidationError("feasible face has min > max");
        if (f.min[k] == f.max[k]) ++flat;
      }
      if (flat != 1) throw ValidationError("feasible face must be flat on exactly one axis");
      if (!scene.bounds.contains_closed(f.min) || !scene.bounds.contains_closed(f.max)) {
        throw ValidationError("feasible face extends outside the bounds");
      }
    }
  } else if (!fs.points.empty() || !fs.faces.empty()) {
    throw ValidationError("feasibility payload only allowed for the explicit kind");
  }
}

void validate_placement(const Scene& scene, const Placement& placement, double tol) {
  if (placement.anchors.empty() || placement.anchors.size() % 2 != 0) {
    throw ValidationError("placement needs a positive even number of anchors");
  }
  for (std::size_t i = 0; i < placement.anchors.size(); ++i) {
    if (!anchor_feasible(scene, placement.anchors[i], tol)) {
      throw ValidationError("anchor " + std::to_string(i) +
                            " violates the scene's feasibility set");
    }
  }
}

}  // namespace tdoa
