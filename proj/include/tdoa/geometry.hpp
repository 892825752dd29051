#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace tdoa {

// Dynamic-size vectors/matrices capped at dimension 3; they live on the stack.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using SqMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Vec vec2(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec vec3(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

/// Axis-aligned box. Obstacles have strictly positive extent on every axis;
/// anchor-feasibility faces have exactly one flat axis.
struct Box {
  Vec min;
  Vec max;

  int dimension() const { return static_cast<int>(min.size()); }
  Vec extent() const { return max - min; }

  /// Product of the strictly positive extents (length of an edge, area of a
  /// face, volume of a solid box). Used as a sampling weight.
  double measure() const;

  bool contains_closed(const Vec& p, double tol = 0.0) const;
  bool contains_strict(const Vec& p) const;

  /// First axis with zero extent, -1 if the box is solid.
  int flat_axis() const;
};

enum class Material { Blocking, Metal, NonMetal };

const char* to_string(Material m);

struct Obstacle {
  Box box;
  Material material = Material::Blocking;
};

enum class LinkCondition { Los, CommonNlos, SevereNlos, Blocked };

const char* to_string(LinkCondition c);

/// Radio conditions for one TDOA pair: the two tag-anchor links, the
/// anchor-anchor link, and whether all three distances are within the
/// operating range.
struct PairCondition {
  LinkCondition tag_to_i = LinkCondition::Los;
  LinkCondition tag_to_j = LinkCondition::Los;
  LinkCondition anchor_to_anchor = LinkCondition::Los;
  bool in_range = true;

  bool any_blocked() const {
    return tag_to_i == LinkCondition::Blocked || tag_to_j == LinkCondition::Blocked ||
           anchor_to_anchor == LinkCondition::Blocked;
  }

  /// The combined weight w_ij = w_r * w_b as a boolean.
  bool usable() const { return in_range && !any_blocked(); }
};

enum class FeasibilityKind { FreeSpace, Boundary, ExplicitSet };

/// Where anchors may be placed. FreeSpace allows anything inside the bounds
/// that is not inside an obstacle; Boundary restricts to the surface of the
/// bounds box; ExplicitSet carries either a finite candidate list or a list
/// of axis-aligned faces (boxes with one flat axis).
struct AnchorFeasibility {
  FeasibilityKind kind = FeasibilityKind::FreeSpace;
  std::vector<Vec> points;
  std::vector<Box> faces;
};

struct Scene {
  int dimension = 2;
  Box bounds;
  std::vector<Obstacle> obstacles;
  std::vector<Vec> sample_points;
  AnchorFeasibility feasible;
  double operating_range = 0.0;

  bool inside_any_obstacle(const Vec& p) const;
  bool on_or_inside_any_obstacle(const Vec& p) const;
};

/// Ordered anchor list of size 2Q; pair q is (anchors[2q], anchors[2q+1]).
struct Placement {
  std::vector<Vec> anchors;

  int pair_count() const { return static_cast<int>(anchors.size()) / 2; }
  const Vec& pair_first(int q) const { return anchors[2 * q]; }
  const Vec& pair_second(int q) const { return anchors[2 * q + 1]; }
};

/// True iff the segment p0-p1 touches the closed box. Contact with a face or
/// corner counts as an intersection (conservative for NLOS detection).
bool segment_intersects_box(const Vec& p0, const Vec& p1, const Box& box);

/// Classifies one radio link by ray tracing against every obstacle.
/// Blocking dominates Metal dominates NonMetal. Throws ValidationError if an
/// endpoint lies strictly inside an obstacle.
LinkCondition classify_link(const Vec& p0, const Vec& p1, const Scene& scene);

PairCondition classify_pair(const Vec& p, const Vec& anchor_i, const Vec& anchor_j,
                            const Scene& scene);

/// Even grid coordinates over [lo, hi] with cell size at most `spacing`.
/// Both endpoints are included; a degenerate axis yields the single value lo.
std::vector<double> grid_axis_coords(double lo, double hi, double spacing);

/// Regular grid over `region` in lexicographic order, restricted to points
/// inside the scene bounds and strictly outside every obstacle. Throws
/// ValidationError when nothing survives.
std::vector<Vec> grid_sample_roi(const Box& region, double spacing, const Scene& scene);

/// Faces of a bounds box: 4 edges in 2D, 6 faces in 3D.
std::vector<Box> boundary_faces(const Box& bounds);

/// Faces searched by Boundary or ExplicitSet-faces feasibility. Empty for
/// other kinds.
std::vector<Box> feasible_faces(const Scene& scene);

/// Membership test for the scene's anchor feasibility set: inside bounds, not
/// strictly inside an obstacle, and on the kind-specific support within tol.
bool anchor_feasible(const Scene& scene, const Vec& anchor, double tol = 1e-9);

void validate_scene(const Scene& scene);
void validate_placement(const Scene& scene, const Placement& placement, double tol = 1e-9);

}  // namespace tdoa
