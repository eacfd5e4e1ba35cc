#pragma once

#include "wavescat/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

namespace wavescat {

enum class EdgeKind { Wall, Gamma };

struct EdgeLabel {
  EdgeKind kind = EdgeKind::Wall;
  int end = -1; ///< 0-based end for Gamma edges
};

struct BoundaryEdge {
  std::array<int, 2> nodes;
  EdgeLabel label;
  int mid = -1; ///< midpoint node of quadratic meshes
};

/// Conforming triangulation of a truncated domain with linear (order 1) or
/// quadratic (order 2) Lagrange nodes.
///
/// Boundary edges run counter-clockwise around the domain (domain on the
/// left). Zero-thickness plates appear as Wall edges that are shared by two
/// triangles; their nodes are Dirichlet nodes like any other wall node.
/// Quadratic meshes append one node per edge midpoint after the vertices.
struct Mesh {
  int order = 1;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  /// Order 2: midpoint nodes of edges (0,1), (1,2), (2,0) of each triangle.
  std::vector<std::array<int, 3>> midpoints;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<char> dirichlet; ///< per node: lies on a wall
  std::vector<CylindricalEnd> ends;
  double h = 0.0;
  double R = 0.0;
};

/// Meshes G^R with a tensor-product grid refined to spacing <= h between the
/// scene breakpoints; each cell is split into two triangles with alternating
/// diagonals. With grade_corners, nodes near the corner points of Gamma^R are
/// pulled toward them by a radial power map so that the first layer is about
/// h/8 (three halvings).
///
/// Throws InvalidParameter unless 0 < h < min(width)/4 and order is 1 or 2,
/// and GeometryError for invalid or disconnected scenes.
Mesh generate(const TruncatedDomain &domain, double h, bool grade_corners = false,
              int order = 1);

struct MeshReport {
  bool conforming = true;  ///< edges shared by at most two triangles, boundary edges by one
  bool closed_loops = true;
  bool gamma_on_cut = true;
  double min_area = 0.0;
  double min_angle_deg = 0.0;
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
};

MeshReport check_mesh(const Mesh &mesh);

/// Ordered 1-D mesh of one cut Gamma^{p,R} with its consistent mass matrix,
/// used for all L2(Gamma^R) inner products. Order 2 meshes have elements
/// (2e, 2e+1, 2e+2) with the midpoint in the middle.
class TraceMesh {
public:
  /// Sorts the nodes by y. Throws GeometryError for duplicate nodes or
  /// endpoints that are not 0 and width.
  static TraceMesh from_points(int end, double width, std::vector<int> nodes,
                               std::vector<double> y, int order = 1);

  int end() const { return end_; }
  int order() const { return order_; }
  double width() const { return width_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<int> &nodes() const { return nodes_; }
  const std::vector<double> &y() const { return y_; }

  Eigen::MatrixXd mass_matrix() const;
  Eigen::VectorXcd apply_mass(const Eigen::VectorXcd &f) const;
  /// Integral of f * conj(g) over the cut.
  std::complex<double> inner(const Eigen::VectorXcd &f, const Eigen::VectorXcd &g) const;
  double norm(const Eigen::VectorXcd &f) const;

private:
  int end_ = 0;
  int order_ = 1;
  double width_ = 0.0;
  std::vector<int> nodes_;
  std::vector<double> y_;
};

/// Throws InvalidParameter for an unknown end index.
TraceMesh trace_mesh(const Mesh &mesh, int end);
std::vector<TraceMesh> trace_meshes(const Mesh &mesh);

/// Text dump: "v x y" per node (or "v x y re im" with nodal values),
/// "t i j k" per triangle, "e i j label" per boundary edge.
void write_mesh_dump(std::ostream &os, const Mesh &mesh,
                     const Eigen::VectorXcd *values = nullptr);

} // namespace wavescat
