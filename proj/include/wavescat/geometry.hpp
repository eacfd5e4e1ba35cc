#pragma once

// Waveguide scenes: a bounded polygonal junction glued to straight
// semi-infinite channels ("cylindrical ends"), and their truncation at a
// distance R along each channel axis.
//
// Scenes are rectilinear: every junction and obstacle edge is parallel to a
// coordinate axis. Each end is attached to one junction edge; its local
// coordinates are t (distance along the outward axis, t = 0 on the attach
// edge) and y (distance along the attach edge from its first vertex).

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

namespace wavescat {

using Vec2 = Eigen::Vector2d;

struct Polygon {
  std::vector<Vec2> vertices;

  /// Positive for counter-clockwise vertex order.
  double signed_area() const;
  /// Strict interior test (even-odd rule). Points on edges are unspecified.
  bool contains(const Vec2 &p) const;
  /// Two-vertex "polygons" are zero-thickness plates.
  bool is_segment() const { return vertices.size() == 2; }
  std::size_t edge_count() const;
  Vec2 edge_start(std::size_t e) const { return vertices[e]; }
  Vec2 edge_end(std::size_t e) const {
    return vertices[(e + 1) % vertices.size()];
  }
};

enum class WallCondition { Dirichlet };

struct CrossSection {
  double width = 0.0;
  WallCondition wall = WallCondition::Dirichlet;
};

struct LocalPoint {
  double y;
  double t;
};

struct CylindricalEnd {
  int index = 0; ///< 1-based end number
  CrossSection cross_section;
  int attach_edge = -1;
  Vec2 attach_point = Vec2::Zero(); ///< y = 0, t = 0
  Vec2 axis = Vec2::UnitX();        ///< unit outward direction of t
  double collar_length = 0.0;

  /// Unit direction of increasing y (axis rotated by +90 degrees).
  Vec2 transverse() const { return Vec2(-axis.y(), axis.x()); }
  Vec2 to_global(double y, double t) const {
    return attach_point + y * transverse() + t * axis;
  }
  LocalPoint to_local(const Vec2 &p) const {
    const Vec2 d = p - attach_point;
    return {d.dot(transverse()), d.dot(axis)};
  }
};

/// Per-end input used to build a scene from a junction polygon.
struct EndSpec {
  int attach_edge = -1;
  double width = 0.0;
  double collar_length = 0.0;
};

struct WaveguideScene {
  std::string name;
  Polygon junction;
  std::vector<Polygon> obstacles;
  std::vector<CylindricalEnd> ends;
};

/// Builds the ends from their attach edges. Geometry is not validated here;
/// attach points and axes are derived from the edge, so an invalid edge
/// index leaves the end at its defaults and validate_scene reports it.
WaveguideScene make_scene(std::string name, Polygon junction,
                          std::vector<Polygon> obstacles,
                          const std::vector<EndSpec> &ends);

/// Empty iff the scene is legal. Each message names the offending entity.
std::vector<std::string> validate_scene(const WaveguideScene &scene);

/// Cut Gamma^{p,R}: the segment t = R across end p, with outward normal
/// equal to the end axis. a is the y = 0 endpoint, b the y = width one.
struct GammaSegment {
  int end = 0; ///< 0-based position in scene.ends
  Vec2 a;
  Vec2 b;
  Vec2 normal;
  double width = 0.0;
};

struct TruncatedDomain {
  std::shared_ptr<const WaveguideScene> scene;
  double R = 0.0;
  /// Channel pieces {0 <= t <= R} of each end, as CCW rectangles.
  std::vector<Polygon> end_regions;
  std::vector<GammaSegment> gamma;

  bool contains(const Vec2 &p) const;
  /// Vertices of all pieces (junction, channel pieces).
  std::vector<Vec2> vertices() const;
};

/// Truncates every end at t = R. Throws InvalidRadius for R <= 0.
TruncatedDomain truncate(const WaveguideScene &scene, double R);

// Reference scenes. Widths and lengths in model units; all ends keep the
// straight channel of the junction as collar.

/// Straight strip of width d: junction [-len/2, len/2] x [0, d], ends left
/// (end 1) and right (end 2).
WaveguideScene strip_scene(double width, double length);

/// Strip with a rectangular Dirichlet obstacle [x0,x1] x [y0,y1].
WaveguideScene obstacle_scene(double width, double length, double x0,
                              double x1, double y0, double y1);

/// Strip with a zero-thickness Dirichlet plate on the centre line, spanning
/// [-plate/2, plate/2].
WaveguideScene plate_scene(double width, double length, double plate_length);

enum class StepAlignment { Centered, Flush };

/// Width step at x = 0: channel of width d_left on x < 0 (end 1, attached at
/// x = -left_length) and width d_right on x > 0 (end 2, attached at
/// x = right_length). Centered steps share the centre line; flush steps share
/// the bottom wall y = 0.
WaveguideScene step_scene(double d_left, double d_right,
                          StepAlignment alignment, double left_length,
                          double right_length);

/// T-junction of three channels of width d: left, right and up.
WaveguideScene tee_scene(double width, double arm_length);

} // namespace wavescat
