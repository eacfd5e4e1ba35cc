#include "wavescat/mesh.hpp"

#include "wavescat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

namespace wavescat {

namespace {

std::vector<double> unique_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

std::vector<double> subdivide(const std::vector<double> &breaks, double h) {
  std::vector<double> out{breaks.front()};
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double len = breaks[i + 1] - breaks[i];
    const int n = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
    for (int k = 1; k < n; ++k) out.push_back(breaks[i] + len * k / n);
    out.push_back(breaks[i + 1]);
  }
  return out;
}

double segment_distance(const Vec2 &p, const Vec2 &a, const Vec2 &b) {
  const Vec2 ab = b - a;
  const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

void grade_toward(std::vector<Vec2> &nodes, const Vec2 &corner, double radius,
                  double exponent) {
  for (auto &p : nodes) {
    const double r = (p - corner).norm();
    if (r <= 0.0 || r >= radius) continue;
    const double g = radius * std::pow(r / radius, exponent);
    p = corner + (p - corner) * (g / r);
  }
}

void add_midpoints(Mesh &mesh) {
  std::map<std::pair<int, int>, int> mid;
  const auto mid_of = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    const int id = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
    mid.emplace(key, id);
    return id;
  };
  mesh.midpoints.reserve(mesh.triangles.size());
  for (const auto &t : mesh.triangles)
    mesh.midpoints.push_back({mid_of(t[0], t[1]), mid_of(t[1], t[2]), mid_of(t[2], t[0])});
  for (auto &e : mesh.boundary_edges) e.mid = mid_of(e.nodes[0], e.nodes[1]);
  mesh.dirichlet.resize(mesh.nodes.size(), 0);
  for (const auto &e : mesh.boundary_edges)
    if (e.label.kind == EdgeKind::Wall) mesh.dirichlet[e.mid] = 1;
}

} // namespace

Mesh generate(const TruncatedDomain &domain, double h, bool grade_corners, int order) {
  if (order != 1 && order != 2) throw InvalidParameter("element order must be 1 or 2");
  const WaveguideScene &scene = *domain.scene;
  double min_width = std::numeric_limits<double>::infinity();
  for (const auto &end : scene.ends) min_width = std::min(min_width, end.cross_section.width);
  if (!(h > 0.0) || !(h < min_width / 4.0)) {
    std::ostringstream os;
    os << "mesh size h = " << h << " must satisfy 0 < h < min(width)/4 = " << min_width / 4.0;
    throw InvalidParameter(os.str());
  }
  if (auto diags = validate_scene(scene); !diags.empty())
    throw GeometryError("unmeshable scene: " + diags.front());

  std::vector<Vec2> pts = domain.vertices();
  for (const auto &ob : scene.obstacles)
    pts.insert(pts.end(), ob.vertices.begin(), ob.vertices.end());
  std::vector<double> bx, by;
  double extent = 0.0;
  for (const auto &p : pts) {
    bx.push_back(p.x());
    by.push_back(p.y());
    extent = std::max({extent, std::abs(p.x()), std::abs(p.y())});
  }
  const double tol = 1e-12 * std::max(1.0, extent);
  const std::vector<double> xs = subdivide(unique_sorted(bx, tol), h);
  const std::vector<double> ys = subdivide(unique_sorted(by, tol), h);
  const int nx = static_cast<int>(xs.size()) - 1, ny = static_cast<int>(ys.size()) - 1;

  std::vector<char> kept(static_cast<std::size_t>(nx) * ny, 0);
  const auto cell = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      kept[cell(i, j)] = domain.contains({0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])});
  const auto is_kept = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < nx && j < ny && kept[cell(i, j)];
  };

  // Connectivity over cells sharing an edge.
  {
    std::size_t total = 0, start = kept.size();
    for (std::size_t c = 0; c < kept.size(); ++c)
      if (kept[c]) {
        ++total;
        if (start == kept.size()) start = c;
      }
    if (total == 0) throw GeometryError("unmeshable scene: no grid cell inside the domain");
    std::vector<char> seen(kept.size(), 0);
    std::queue<std::size_t> q;
    q.push(start);
    seen[start] = 1;
    std::size_t reached = 0;
    while (!q.empty()) {
      const std::size_t c = q.front();
      q.pop();
      ++reached;
      const int i = static_cast<int>(c % nx), j = static_cast<int>(c / nx);
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k)
        if (is_kept(i + di[k], j + dj[k]) && !seen[cell(i + di[k], j + dj[k])]) {
          seen[cell(i + di[k], j + dj[k])] = 1;
          q.push(cell(i + di[k], j + dj[k]));
        }
    }
    if (reached != total) throw GeometryError("unmeshable scene: domain is not connected");
  }

  Mesh mesh;
  mesh.order = order;
  mesh.h = h;
  mesh.R = domain.R;
  mesh.ends = scene.ends;
  std::vector<int> node_id(static_cast<std::size_t>(nx + 1) * (ny + 1), -1);
  const auto gid = [nx](int i, int j) { return static_cast<std::size_t>(j) * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (is_kept(i, j) || is_kept(i - 1, j) || is_kept(i, j - 1) || is_kept(i - 1, j - 1)) {
        node_id[gid(i, j)] = static_cast<int>(mesh.nodes.size());
        mesh.nodes.emplace_back(xs[i], ys[j]);
      }
  const auto nid = [&](int i, int j) { return node_id[gid(i, j)]; };

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (!is_kept(i, j)) continue;
      const int n00 = nid(i, j), n10 = nid(i + 1, j), n11 = nid(i + 1, j + 1), n01 = nid(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({n00, n10, n11});
        mesh.triangles.push_back({n00, n11, n01});
      } else {
        mesh.triangles.push_back({n00, n10, n01});
        mesh.triangles.push_back({n10, n11, n01});
      }
    }

  const auto label_of = [&](int a, int b) {
    EdgeLabel label;
    for (const auto &g : domain.gamma)
      if (segment_distance(mesh.nodes[a], g.a, g.b) <= tol &&
          segment_distance(mesh.nodes[b], g.a, g.b) <= tol) {
        label.kind = EdgeKind::Gamma;
        label.end = g.end;
      }
    return label;
  };
  const auto on_plate = [&](int a, int b) {
    for (const auto &ob : scene.obstacles)
      if (ob.is_segment() &&
          segment_distance(mesh.nodes[a], ob.vertices[0], ob.vertices[1]) <= tol &&
          segment_distance(mesh.nodes[b], ob.vertices[0], ob.vertices[1]) <= tol)
        return true;
    return false;
  };
  // Horizontal edges (i,j)-(i+1,j): cell above is (i,j), below (i,j-1).
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool above = is_kept(i, j), below = is_kept(i, j - 1);
      if (above && below) {
        if (on_plate(nid(i, j), nid(i + 1, j)))
          mesh.boundary_edges.push_back({{nid(i, j), nid(i + 1, j)}, {}});
      } else if (above) {
        mesh.boundary_edges.push_back({{nid(i, j), nid(i + 1, j)}, label_of(nid(i, j), nid(i + 1, j))});
      } else if (below) {
        mesh.boundary_edges.push_back({{nid(i + 1, j), nid(i, j)}, label_of(nid(i + 1, j), nid(i, j))});
      }
    }
  // Vertical edges (i,j)-(i,j+1): cell right is (i,j), left (i-1,j).
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const bool right = is_kept(i, j), left = is_kept(i - 1, j);
      if (right && left) {
        if (on_plate(nid(i, j), nid(i, j + 1)))
          mesh.boundary_edges.push_back({{nid(i, j), nid(i, j + 1)}, {}});
      } else if (right) {
        mesh.boundary_edges.push_back({{nid(i, j + 1), nid(i, j)}, label_of(nid(i, j + 1), nid(i, j))});
      } else if (left) {
        mesh.boundary_edges.push_back({{nid(i, j), nid(i, j + 1)}, label_of(nid(i, j), nid(i, j + 1))});
      }
    }

  mesh.dirichlet.assign(mesh.nodes.size(), 0);
  for (const auto &e : mesh.boundary_edges)
    if (e.label.kind == EdgeKind::Wall) mesh.dirichlet[e.nodes[0]] = mesh.dirichlet[e.nodes[1]] = 1;

  for (const auto &g : domain.gamma) {
    const bool found = std::any_of(mesh.boundary_edges.begin(), mesh.boundary_edges.end(),
                                   [&](const BoundaryEdge &e) {
                                     return e.label.kind == EdgeKind::Gamma && e.label.end == g.end;
                                   });
    if (!found)
      throw GeometryError("unmeshable scene: cut of end " + std::to_string(g.end + 1) + " has no edges");
  }

  if (grade_corners) {
    for (const auto &g : domain.gamma) {
      const double radius = std::min({4.0 * h, 0.45 * g.width, 0.45 * domain.R});
      if (radius <= 1.5 * h) continue;
      const double exponent = std::log(8.0 * radius / h) / std::log(radius / h);
      grade_toward(mesh.nodes, g.a, radius, exponent);
      grade_toward(mesh.nodes, g.b, radius, exponent);
    }
  }
  if (order == 2) add_midpoints(mesh);
  return mesh;
}

MeshReport check_mesh(const Mesh &mesh) {
  MeshReport rep;
  rep.min_area = std::numeric_limits<double>::infinity();
  rep.min_angle_deg = 180.0;
  std::map<std::pair<int, int>, int> edge_use;
  for (const auto &t : mesh.triangles) {
    const Vec2 &a = mesh.nodes[t[0]], &b = mesh.nodes[t[1]], &c = mesh.nodes[t[2]];
    const double area = 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
    rep.min_area = std::min(rep.min_area, area);
    const Vec2 *v[3] = {&a, &b, &c};
    for (int k = 0; k < 3; ++k) {
      const Vec2 e1 = *v[(k + 1) % 3] - *v[k], e2 = *v[(k + 2) % 3] - *v[k];
      const double ang = std::acos(std::clamp(e1.dot(e2) / (e1.norm() * e2.norm()), -1.0, 1.0));
      rep.min_angle_deg = std::min(rep.min_angle_deg, ang * 180.0 / M_PI);
      const int p = t[k], q = t[(k + 1) % 3];
      ++edge_use[{std::min(p, q), std::max(p, q)}];
    }
  }
  if (rep.min_area <= 0.0) rep.problems.push_back("triangle with nonpositive signed area");

  std::map<std::pair<int, int>, int> bnd;
  for (const auto &e : mesh.boundary_edges)
    ++bnd[{std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1])}];
  for (const auto &[edge, uses] : edge_use) {
    if (uses > 2) rep.conforming = false;
    if (uses == 1 && !bnd.count(edge)) rep.conforming = false;
  }
  if (!rep.conforming) rep.problems.push_back("mesh is not conforming");

  // Outer boundary: every node has equal in- and out-degree.
  std::vector<int> balance(mesh.nodes.size(), 0);
  for (const auto &e : mesh.boundary_edges) {
    const auto key = std::make_pair(std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1]));
    if (edge_use[key] != 1) continue; // plate edge
    ++balance[e.nodes[0]];
    --balance[e.nodes[1]];
  }
  if (std::any_of(balance.begin(), balance.end(), [](int b) { return b != 0; })) {
    rep.closed_loops = false;
    rep.problems.push_back("boundary edges do not form closed loops");
  }

  for (const auto &e : mesh.boundary_edges) {
    if (e.label.kind != EdgeKind::Gamma) continue;
    const CylindricalEnd &end = mesh.ends[e.label.end];
    for (int n : e.nodes)
      if (std::abs(end.to_local(mesh.nodes[n]).t - mesh.R) > 1e-12 * mesh.R)
        rep.gamma_on_cut = false;
  }
  if (!rep.gamma_on_cut) rep.problems.push_back("Gamma node off the cut t = R");
  return rep;
}

TraceMesh TraceMesh::from_points(int end, double width, std::vector<int> nodes,
                                 std::vector<double> y, int order) {
  if (order != 1 && order != 2) throw InvalidParameter("trace mesh order must be 1 or 2");
  if (nodes.size() != y.size() || nodes.size() < static_cast<std::size_t>(order) + 1)
    throw GeometryError("trace mesh needs at least one element with coordinates");
  if (order == 2 && nodes.size() % 2 == 0)
    throw GeometryError("quadratic trace mesh needs an odd number of nodes");
  std::vector<std::size_t> perm(nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
  TraceMesh tm;
  tm.end_ = end;
  tm.order_ = order;
  tm.width_ = width;
  for (auto k : perm) {
    tm.nodes_.push_back(nodes[k]);
    tm.y_.push_back(y[k]);
  }
  const double tol = 1e-10 * std::max(1.0, width);
  for (std::size_t i = 0; i + 1 < tm.y_.size(); ++i)
    if (tm.y_[i + 1] - tm.y_[i] <= tol) throw GeometryError("trace mesh has duplicate nodes");
  if (std::abs(tm.y_.front()) > tol || std::abs(tm.y_.back() - width) > tol)
    throw GeometryError("trace mesh must span [0, width]");
  // Snap endpoints to the exact interval.
  tm.y_.front() = 0.0;
  tm.y_.back() = width;
  if (order == 2)
    for (std::size_t i = 1; i < tm.y_.size(); i += 2)
      if (std::abs(tm.y_[i] - 0.5 * (tm.y_[i - 1] + tm.y_[i + 1])) > tol)
        throw GeometryError("quadratic trace mesh: midpoint node off the element centre");
  return tm;
}

Eigen::MatrixXd TraceMesh::mass_matrix() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  if (order_ == 1) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double len = y_[i + 1] - y_[i];
      M(i, i) += len / 3.0;
      M(i + 1, i + 1) += len / 3.0;
      M(i, i + 1) += len / 6.0;
      M(i + 1, i) += len / 6.0;
    }
    return M;
  }
  const double local[3][3] = {{4.0, 2.0, -1.0}, {2.0, 16.0, 2.0}, {-1.0, 2.0, 4.0}};
  for (Eigen::Index i = 0; i + 2 < n; i += 2) {
    const double len = y_[i + 2] - y_[i];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) M(i + a, i + b) += len / 30.0 * local[a][b];
  }
  return M;
}

Eigen::VectorXcd TraceMesh::apply_mass(const Eigen::VectorXcd &f) const {
  if (static_cast<std::size_t>(f.size()) != size())
    throw TraceMismatch("trace vector length does not match the trace mesh");
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
  if (order_ == 1) {
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double len = y_[i + 1] - y_[i];
      out(i) += len / 3.0 * f(i) + len / 6.0 * f(i + 1);
      out(i + 1) += len / 6.0 * f(i) + len / 3.0 * f(i + 1);
    }
    return out;
  }
  for (Eigen::Index i = 0; i + 2 < n; i += 2) {
    const double c = (y_[i + 2] - y_[i]) / 30.0;
    out(i) += c * (4.0 * f(i) + 2.0 * f(i + 1) - f(i + 2));
    out(i + 1) += c * (2.0 * f(i) + 16.0 * f(i + 1) + 2.0 * f(i + 2));
    out(i + 2) += c * (-f(i) + 2.0 * f(i + 1) + 4.0 * f(i + 2));
  }
  return out;
}

std::complex<double> TraceMesh::inner(const Eigen::VectorXcd &f, const Eigen::VectorXcd &g) const {
  if (static_cast<std::size_t>(g.size()) != size())
    throw TraceMismatch("trace vector length does not match the trace mesh");
  // g^H M f
  return g.dot(apply_mass(f));
}

double TraceMesh::norm(const Eigen::VectorXcd &f) const {
  return std::sqrt(std::max(0.0, inner(f, f).real()));
}

TraceMesh trace_mesh(const Mesh &mesh, int end) {
  if (end < 0 || static_cast<std::size_t>(end) >= mesh.ends.size())
    throw InvalidParameter("unknown end index " + std::to_string(end));
  std::vector<int> nodes;
  std::size_t edges = 0;
  for (const auto &e : mesh.boundary_edges)
    if (e.label.kind == EdgeKind::Gamma && e.label.end == end) {
      ++edges;
      nodes.push_back(e.nodes[0]);
      nodes.push_back(e.nodes[1]);
      if (mesh.order == 2) nodes.push_back(e.mid);
    }
  if (edges == 0) throw InvalidParameter("mesh has no cut edges for end " + std::to_string(end + 1));
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.size() != static_cast<std::size_t>(mesh.order) * edges + 1)
    throw GeometryError("cut edges of an end do not form a chain");
  const CylindricalEnd &ce = mesh.ends[end];
  std::vector<double> y;
  for (int n : nodes) y.push_back(ce.to_local(mesh.nodes[n]).y);
  return TraceMesh::from_points(end, ce.cross_section.width, std::move(nodes), std::move(y),
                                mesh.order);
}

std::vector<TraceMesh> trace_meshes(const Mesh &mesh) {
  std::vector<TraceMesh> out;
  for (std::size_t p = 0; p < mesh.ends.size(); ++p) out.push_back(trace_mesh(mesh, static_cast<int>(p)));
  return out;
}

void write_mesh_dump(std::ostream &os, const Mesh &mesh, const Eigen::VectorXcd *values) {
  os << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    os << "v " << mesh.nodes[i].x() << ' ' << mesh.nodes[i].y();
    if (values) os << ' ' << (*values)(static_cast<Eigen::Index>(i)).real() << ' '
                   << (*values)(static_cast<Eigen::Index>(i)).imag();
    os << '\n';
  }
  for (const auto &t : mesh.triangles) os << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto &e : mesh.boundary_edges) {
    os << "e " << e.nodes[0] << ' ' << e.nodes[1] << ' ';
    if (e.label.kind == EdgeKind::Gamma)
      os << "gamma" << e.label.end + 1;
    else
      os << "wall";
    os << '\n';
  }
}

} // namespace wavescat
