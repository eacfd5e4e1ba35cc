#pragma once

// Auxiliary impedance problem on the truncated domain:
//   (Laplace + mu) v = 0 in G^R,  v = 0 on walls,  (d/dnu + i zeta) v = h on Gamma^R,
// discretized with linear or quadratic triangles through the weak form
//   (grad v, grad w) - mu (v, w) + i zeta (v, w)_Gamma = (h, w)_Gamma.

#include "wavescat/mesh.hpp"
#include "wavescat/spectral.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace wavescat {

using SparseMatrixC = Eigen::SparseMatrix<std::complex<double>>;

/// Nodal values of h on the trace-mesh nodes of every cut.
struct BoundaryData {
  std::vector<Eigen::VectorXcd> values;
};

/// (d/dt + i zeta) u sampled on each cut; zero on cuts of other ends.
BoundaryData impedance_data(const Wave &u, std::span<const TraceMesh> traces, double R,
                            double zeta);

struct FieldSolution {
  Eigen::VectorXcd nodal; ///< one value per mesh node, zero on walls
  double relative_residual = 0.0;

  Eigen::VectorXcd trace(const TraceMesh &tm) const;
  std::vector<Eigen::VectorXcd> traces(std::span<const TraceMesh> tms) const;
};

class TruncatedSystem {
public:
  /// Throws InvalidParameter for zeta == 0.
  TruncatedSystem(std::shared_ptr<const Mesh> mesh, double mu, double zeta);
  ~TruncatedSystem();
  TruncatedSystem(TruncatedSystem &&) noexcept;
  TruncatedSystem &operator=(TruncatedSystem &&) noexcept;

  const Mesh &mesh() const { return *mesh_; }
  double mu() const { return mu_; }
  double zeta() const { return zeta_; }
  const std::vector<TraceMesh> &traces() const { return traces_; }

  /// Operator on all nodes, before eliminating wall nodes.
  const SparseMatrixC &full_matrix() const { return full_; }
  /// Operator on the free (non-wall) nodes.
  const SparseMatrixC &matrix() const { return reduced_; }
  const std::vector<int> &dof_of_node() const { return dof_of_node_; }
  const std::vector<int> &node_of_dof() const { return node_of_dof_; }

  /// a(u, w) = w^H A u for nodal vectors on all nodes.
  std::complex<double> form(const Eigen::VectorXcd &u, const Eigen::VectorXcd &w) const;
  /// Load vector (h, phi_i)_Gamma on all nodes.
  Eigen::VectorXcd load(const BoundaryData &h) const;

  /// Sparse LU of the reduced operator; computed once, reused by solve().
  /// Throws SingularSystem if the factorization fails.
  void factorize();
  bool factorized() const;
  Eigen::VectorXcd solve_reduced(const Eigen::VectorXcd &rhs) const;

private:
  struct Factorization;
  std::shared_ptr<const Mesh> mesh_;
  double mu_;
  double zeta_;
  std::vector<TraceMesh> traces_;
  SparseMatrixC full_;
  SparseMatrixC reduced_;
  std::vector<int> dof_of_node_;
  std::vector<int> node_of_dof_;
  std::unique_ptr<Factorization> lu_;
};

TruncatedSystem assemble(std::shared_ptr<const Mesh> mesh, double mu, double zeta);

/// One factorization, one back-substitution per right-hand side. Each
/// solution is checked against ||A x - b|| / ||b|| < 1e-10.
std::vector<FieldSolution> solve(TruncatedSystem &system, std::span<const BoundaryData> rhs);

struct TraceBoundCheck {
  double lhs = 0.0; ///< ||D u||_{L2(Gamma)}
  double rhs = 0.0; ///< ||h||_{L2(Gamma)} / |zeta|
};

/// Solves the problem with data (0, 0, h) and evaluates both sides of the
/// a-priori bound ||D u|| <= ||h|| / |zeta| in the trace-mass norm.
TraceBoundCheck trace_bound_check(TruncatedSystem &system, const BoundaryData &h);

} // namespace wavescat
