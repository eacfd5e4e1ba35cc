#include "wavescat/geometry.hpp"

#include "wavescat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wavescat {

namespace {

constexpr double kRelTol = 1e-9;

double cross(const Vec2 &a, const Vec2 &b) { return a.x() * b.y() - a.y() * b.x(); }

double segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

bool on_boundary(const Polygon &poly, const Vec2 &p, double tol) {
  for (std::size_t e = 0; e < poly.edge_count(); ++e)
    if (segment_distance(p, poly.edge_start(e), poly.edge_end(e)) <= tol)
      return true;
  return false;
}

bool axis_aligned(const Vec2 &a, const Vec2 &b, double tol) {
  return std::abs(a.x() - b.x()) <= tol || std::abs(a.y() - b.y()) <= tol;
}

// Proper or touching intersection of two closed segments.
bool segments_intersect(const Vec2 &p1, const Vec2 &p2, const Vec2 &q1,
                        const Vec2 &q2, double tol) {
  const auto orient = [](const Vec2 &a, const Vec2 &b, const Vec2 &c) {
    return cross(b - a, c - a);
  };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  if (((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol)) &&
      ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)))
    return true;
  return segment_distance(p1, q1, q2) <= tol ||
         segment_distance(p2, q1, q2) <= tol ||
         segment_distance(q1, p1, p2) <= tol ||
         segment_distance(q2, p1, p2) <= tol;
}

struct Box {
  double x0, x1, y0, y1;
};

Box box_of(const std::vector<Vec2> &pts) {
  Box b{pts[0].x(), pts[0].x(), pts[0].y(), pts[0].y()};
  for (const auto &p : pts) {
    b.x0 = std::min(b.x0, p.x());
    b.x1 = std::max(b.x1, p.x());
    b.y0 = std::min(b.y0, p.y());
    b.y1 = std::max(b.y1, p.y());
  }
  return b;
}

bool interiors_overlap(const Box &a, const Box &b, double tol) {
  return std::min(a.x1, b.x1) - std::max(a.x0, b.x0) > tol &&
         std::min(a.y1, b.y1) - std::max(a.y0, b.y0) > tol;
}

double scene_scale(const WaveguideScene &scene) {
  if (scene.junction.vertices.empty()) return 1.0;
  const Box b = box_of(scene.junction.vertices);
  return std::max({b.x1 - b.x0, b.y1 - b.y0, 1.0});
}

Polygon channel_rectangle(const CylindricalEnd &end, double t0, double t1) {
  const double w = end.cross_section.width;
  return Polygon{{end.to_global(0.0, t0), end.to_global(0.0, t1),
                  end.to_global(w, t1), end.to_global(w, t0)}};
}

// Drops repeated and collinear vertices so builder polygons stay minimal.
Polygon simplify(std::vector<Vec2> pts) {
  bool changed = true;
  while (changed && pts.size() > 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec2 &prev = pts[(i + pts.size() - 1) % pts.size()];
      const Vec2 &next = pts[(i + 1) % pts.size()];
      if ((pts[i] - prev).norm() < 1e-14 ||
          std::abs(cross(pts[i] - prev, next - pts[i])) < 1e-14) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return Polygon{std::move(pts)};
}

int find_edge(const Polygon &poly, const Vec2 &a, const Vec2 &b) {
  for (std::size_t e = 0; e < poly.edge_count(); ++e)
    if ((poly.edge_start(e) - a).norm() < 1e-12 &&
        (poly.edge_end(e) - b).norm() < 1e-12)
      return static_cast<int>(e);
  throw GeometryError("builder: attach edge not found in junction polygon");
}

} // namespace

double Polygon::signed_area() const {
  double a = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i)
    a += cross(vertices[i], vertices[(i + 1) % vertices.size()]);
  return 0.5 * a;
}

std::size_t Polygon::edge_count() const {
  if (vertices.size() < 2) return 0;
  return is_segment() ? 1 : vertices.size();
}

bool Polygon::contains(const Vec2 &p) const {
  if (vertices.size() < 3) return false;
  bool inside = false;
  for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
    const Vec2 &a = vertices[i];
    const Vec2 &b = vertices[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (p.x() < x) inside = !inside;
    }
  }
  return inside;
}

WaveguideScene make_scene(std::string name, Polygon junction,
                          std::vector<Polygon> obstacles,
                          const std::vector<EndSpec> &ends) {
  WaveguideScene scene;
  scene.name = std::move(name);
  scene.junction = std::move(junction);
  scene.obstacles = std::move(obstacles);
  for (std::size_t i = 0; i < ends.size(); ++i) {
    CylindricalEnd end;
    end.index = static_cast<int>(i) + 1;
    end.cross_section.width = ends[i].width;
    end.attach_edge = ends[i].attach_edge;
    end.collar_length = ends[i].collar_length;
    const auto n = scene.junction.edge_count();
    if (ends[i].attach_edge >= 0 && static_cast<std::size_t>(ends[i].attach_edge) < n) {
      const Vec2 a = scene.junction.edge_start(ends[i].attach_edge);
      const Vec2 b = scene.junction.edge_end(ends[i].attach_edge);
      const Vec2 dir = b - a;
      if (dir.norm() > 0.0) {
        end.attach_point = a;
        // CCW junction: outward normal is the edge direction turned clockwise.
        end.axis = Vec2(dir.y(), -dir.x()).normalized();
      }
    }
    scene.ends.push_back(end);
  }
  return scene;
}

std::vector<std::string> validate_scene(const WaveguideScene &scene) {
  std::vector<std::string> diags;
  const auto &jv = scene.junction.vertices;
  const double scale = scene_scale(scene);
  const double tol = kRelTol * scale;

  if (jv.size() < 3) {
    diags.emplace_back("junction needs at least 3 vertices");
    return diags;
  }
  if (scene.junction.signed_area() <= 0.0)
    diags.emplace_back("junction must be counter-clockwise with positive area");
  const std::size_t ne = scene.junction.edge_count();
  for (std::size_t e = 0; e < ne; ++e) {
    const Vec2 a = scene.junction.edge_start(e), b = scene.junction.edge_end(e);
    if ((b - a).norm() <= tol)
      diags.push_back("junction edge " + std::to_string(e) + " has zero length");
    else if (!axis_aligned(a, b, tol))
      diags.push_back("junction edge " + std::to_string(e) + " is not axis-aligned");
  }
  for (std::size_t e = 0; e < ne; ++e)
    for (std::size_t f = e + 1; f < ne; ++f) {
      if (f == e + 1 || (e == 0 && f == ne - 1)) continue;
      if (segments_intersect(scene.junction.edge_start(e), scene.junction.edge_end(e),
                             scene.junction.edge_start(f), scene.junction.edge_end(f), tol))
        diags.push_back("junction edges " + std::to_string(e) + " and " +
                        std::to_string(f) + " intersect");
    }

  for (std::size_t k = 0; k < scene.obstacles.size(); ++k) {
    const Polygon &ob = scene.obstacles[k];
    const std::string id = "obstacle " + std::to_string(k);
    if (ob.vertices.size() < 2) {
      diags.push_back(id + " needs at least 2 vertices");
      continue;
    }
    if (!ob.is_segment() && ob.signed_area() >= 0.0)
      diags.push_back(id + " must be clockwise with nonzero area");
    for (std::size_t e = 0; e < ob.edge_count(); ++e)
      if (!axis_aligned(ob.edge_start(e), ob.edge_end(e), tol))
        diags.push_back(id + " edge " + std::to_string(e) + " is not axis-aligned");
    for (const auto &v : ob.vertices)
      if (!scene.junction.contains(v) && !on_boundary(scene.junction, v, tol)) {
        diags.push_back(id + " leaves the junction");
        break;
      }
  }

  if (scene.ends.empty()) diags.emplace_back("scene has no cylindrical ends");
  const double far = 100.0 * scale;
  for (std::size_t i = 0; i < scene.ends.size(); ++i) {
    const CylindricalEnd &end = scene.ends[i];
    const std::string id = "end " + std::to_string(end.index);
    const double w = end.cross_section.width;
    if (!(w > 0.0)) {
      diags.push_back(id + ": cross-section width must be positive");
      continue;
    }
    if (end.attach_edge < 0 || static_cast<std::size_t>(end.attach_edge) >= ne) {
      diags.push_back(id + ": attach edge index out of range");
      continue;
    }
    const Vec2 a = scene.junction.edge_start(end.attach_edge);
    const Vec2 b = scene.junction.edge_end(end.attach_edge);
    const double len = (b - a).norm();
    if (std::abs(len - w) > kRelTol * std::max(1.0, w)) {
      std::ostringstream os;
      os << id << ": width " << w << " does not match attach edge length " << len;
      diags.push_back(os.str());
      continue;
    }
    if (end.collar_length < 0.0) {
      diags.push_back(id + ": collar length must be nonnegative");
    } else if (end.collar_length > 0.0) {
      // The walls adjacent to the attach edge must run straight along the
      // axis for the whole collar.
      const std::size_t e = static_cast<std::size_t>(end.attach_edge);
      const std::size_t prev = (e + ne - 1) % ne, next = (e + 1) % ne;
      const Vec2 pd = scene.junction.edge_end(prev) - scene.junction.edge_start(prev);
      const Vec2 nd = scene.junction.edge_end(next) - scene.junction.edge_start(next);
      const bool straight = pd.normalized().dot(end.axis) > 1.0 - 1e-12 &&
                            nd.normalized().dot(-end.axis) > 1.0 - 1e-12 &&
                            pd.norm() >= end.collar_length - tol &&
                            nd.norm() >= end.collar_length - tol;
      bool clear = true;
      const double in = 1e-7 * scale;
      const Polygon collar{{end.to_global(in, -end.collar_length + in), end.to_global(in, -in),
                            end.to_global(w - in, -in), end.to_global(w - in, -end.collar_length + in)}};
      for (const auto &ob : scene.obstacles)
        for (const auto &v : ob.vertices)
          if (collar.contains(v)) clear = false;
      if (!straight || !clear)
        diags.push_back(id + ": junction is not a straight channel over the collar");
    }
    const Box cb = box_of(channel_rectangle(end, 0.0, far).vertices);
    const double inset = 1e-7 * scale;
    const Polygon inner{{end.to_global(inset, inset), end.to_global(inset, far),
                         end.to_global(w - inset, far), end.to_global(w - inset, inset)}};
    for (const auto &v : jv)
      if (inner.contains(v)) {
        diags.push_back(id + ": channel runs into the junction");
        break;
      }
    if (scene.junction.contains(end.to_global(0.5 * w, 1e-6 * scale)))
      diags.push_back(id + ": axis does not point out of the junction");
    for (std::size_t j = i + 1; j < scene.ends.size(); ++j) {
      const CylindricalEnd &other = scene.ends[j];
      if (!(other.cross_section.width > 0.0)) continue;
      if (other.attach_edge == end.attach_edge) {
        diags.push_back("ends " + std::to_string(end.index) + "," +
                        std::to_string(other.index) + " share an attach edge");
        continue;
      }
      const Box ob = box_of(channel_rectangle(other, 0.0, far).vertices);
      if (interiors_overlap(cb, ob, tol))
        diags.push_back("ends " + std::to_string(end.index) + "," +
                        std::to_string(other.index) + " overlap");
    }
  }
  return diags;
}

bool TruncatedDomain::contains(const Vec2 &p) const {
  bool inside = scene->junction.contains(p);
  for (const auto &r : end_regions)
    if (!inside && r.contains(p)) inside = true;
  if (!inside) return false;
  for (const auto &ob : scene->obstacles)
    if (ob.contains(p)) return false;
  return true;
}

std::vector<Vec2> TruncatedDomain::vertices() const {
  std::vector<Vec2> out = scene->junction.vertices;
  for (const auto &r : end_regions)
    out.insert(out.end(), r.vertices.begin(), r.vertices.end());
  return out;
}

TruncatedDomain truncate(const WaveguideScene &scene, double R) {
  if (!(R > 0.0)) {
    std::ostringstream os;
    os << "invalid radius: truncation radius must be positive, got R = " << R;
    throw InvalidRadius(os.str());
  }
  TruncatedDomain dom;
  dom.scene = std::make_shared<const WaveguideScene>(scene);
  dom.R = R;
  for (std::size_t p = 0; p < scene.ends.size(); ++p) {
    const CylindricalEnd &end = scene.ends[p];
    const double w = end.cross_section.width;
    dom.end_regions.push_back(channel_rectangle(end, 0.0, R));
    GammaSegment g;
    g.end = static_cast<int>(p);
    g.a = end.to_global(0.0, R);
    g.b = end.to_global(w, R);
    g.normal = end.axis;
    g.width = w;
    dom.gamma.push_back(g);
  }
  return dom;
}

WaveguideScene strip_scene(double width, double length) {
  const double l = 0.5 * length;
  Polygon j{{{-l, 0.0}, {l, 0.0}, {l, width}, {-l, width}}};
  return make_scene("strip", std::move(j), {}, {{3, width, l}, {1, width, l}});
}

WaveguideScene obstacle_scene(double width, double length, double x0, double x1,
                              double y0, double y1) {
  const double l = 0.5 * length;
  Polygon j{{{-l, 0.0}, {l, 0.0}, {l, width}, {-l, width}}};
  Polygon ob{{{x0, y0}, {x0, y1}, {x1, y1}, {x1, y0}}};
  const double collar = std::min(x0 + l, l - x1);
  return make_scene("obstacle", std::move(j), {std::move(ob)},
                    {{3, width, collar}, {1, width, collar}});
}

WaveguideScene plate_scene(double width, double length, double plate_length) {
  const double l = 0.5 * length;
  Polygon j{{{-l, 0.0}, {l, 0.0}, {l, width}, {-l, width}}};
  const double p = 0.5 * plate_length;
  Polygon plate{{{-p, 0.5 * width}, {p, 0.5 * width}}};
  const double collar = l - p;
  return make_scene("plate", std::move(j), {std::move(plate)},
                    {{3, width, collar}, {1, width, collar}});
}

WaveguideScene step_scene(double d_left, double d_right, StepAlignment alignment,
                          double left_length, double right_length) {
  const double c = alignment == StepAlignment::Centered ? 0.5 * (d_right - d_left) : 0.0;
  const double a = left_length, b = right_length;
  Polygon j = simplify({{-a, c},
                        {0.0, c},
                        {0.0, 0.0},
                        {b, 0.0},
                        {b, d_right},
                        {0.0, d_right},
                        {0.0, c + d_left},
                        {-a, c + d_left}});
  const int left = find_edge(j, {-a, c + d_left}, {-a, c});
  const int right = find_edge(j, {b, 0.0}, {b, d_right});
  return make_scene("step", std::move(j), {},
                    {{left, d_left, a}, {right, d_right, b}});
}

WaveguideScene tee_scene(double width, double arm_length) {
  const double d = width;
  const double lx = arm_length + 0.5 * d, ly = arm_length;
  Polygon j{{{-lx, 0.0},
             {lx, 0.0},
             {lx, d},
             {0.5 * d, d},
             {0.5 * d, d + ly},
             {-0.5 * d, d + ly},
             {-0.5 * d, d},
             {-lx, d}}};
  return make_scene("tee", std::move(j), {},
                    {{7, d, arm_length}, {1, d, arm_length}, {4, d, arm_length}});
}

} // namespace wavescat
