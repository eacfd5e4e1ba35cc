#pragma once

// Cross-section spectra, propagating modes and the incoming/outgoing wave
// basis of each cylindrical end.
//
// For a strip of width d with Dirichlet walls the separated solutions are
// exp(±i*lambda*t) * phi_k(y) with phi_k(y) = sqrt(2/d) sin(k*pi*y/d) and
// lambda_k = sqrt(mu - nu_k). Waves are normalized so that the boundary
// form q(u, v) = (N u, D v) - (D u, N v) on a cut t = R satisfies
//   q(u_j^+, u_k^+) = -i delta_jk,  q(u_j^-, u_k^-) = +i delta_jk,
//   q(u_j^+, u_k^-) = 0,
// which makes u^+ = (2 lambda)^(-1/2) exp(-i lambda t) phi incoming
// (i q(u, u) > 0) and u^- = (2 lambda)^(-1/2) exp(+i lambda t) phi outgoing.

#include "wavescat/geometry.hpp"
#include "wavescat/mesh.hpp"

#include <Eigen/Core>

#include <complex>
#include <span>
#include <vector>

namespace wavescat {

/// Symmetric tridiagonal matrix with Sturm-sequence bisection for selected
/// eigenvalues and inverse iteration for their eigenvectors.
class SymmetricTridiagonal {
public:
  SymmetricTridiagonal(std::vector<double> diag, std::vector<double> off);

  std::size_t size() const { return diag_.size(); }
  /// Number of eigenvalues strictly below x.
  std::size_t count_below(double x) const;
  /// The `count` smallest eigenvalues, ascending.
  std::vector<double> smallest_eigenvalues(std::size_t count) const;
  /// Unit-norm eigenvector for a (simple) computed eigenvalue.
  Eigen::VectorXd eigenvector(double eigenvalue) const;

private:
  std::vector<double> diag_;
  std::vector<double> off_;
};

struct TransverseBasis {
  int end = 0;
  double width = 0.0;
  int grid_n = 0;
  /// nu_1 < nu_2 < ..., from the second-order finite-difference problem.
  std::vector<double> eigenvalues;
  /// Eigenvectors on the grid nodes y_i = i*d/grid_n, i = 0..grid_n
  /// (endpoints zero), normalized in the trapezoidal L2 norm with positive
  /// slope at y = 0.
  std::vector<Eigen::VectorXd> samples;

  /// Closed-form L2-normalized eigenfunction, k is 1-based.
  double phi(int k, double y) const;
  double analytic_eigenvalue(int k) const;
};

/// First `count` Dirichlet eigenpairs on (0, d). Requires count >= 1 and
/// grid_n >= 16 (number of grid intervals).
TransverseBasis transverse_eigs(const CrossSection &cs, int count, int grid_n, int end = 0);

inline constexpr int kDefaultTransverseGrid = 4096;

/// One basis per scene end, each holding every eigenvalue up to mu_max plus
/// the first one above it.
std::vector<TransverseBasis> scene_bases(const WaveguideScene &scene, double mu_max,
                                         int grid_n = kDefaultTransverseGrid);

struct PropagatingMode {
  int end = 0;   ///< 0-based end
  int k = 0;     ///< 1-based transverse index
  int index = 0; ///< 0-based global index, lexicographic in (end, k)
  double width = 0.0;
  double nu = 0.0;
  double lambda = 0.0; ///< sqrt(mu - nu) > 0
  double gap_below = 0.0; ///< mu - nu_k
  double gap_above = 0.0; ///< nu_{M^p+1} - mu
};

struct ModeSet {
  double mu = 0.0;
  std::vector<PropagatingMode> modes;
  std::vector<int> per_end; ///< M^p
  /// min over ends of sqrt(nu_{M^p+1} - mu): decay rate of the slowest
  /// evanescent mode.
  double gamma_estimate = 0.0;

  int M() const { return static_cast<int>(modes.size()); }
};

inline constexpr double kDefaultThresholdGuard = 1e-3;

/// Throws ThresholdProximity when mu is within `guard` of any nu_k.
ModeSet enumerate_modes(std::span<const TransverseBasis> bases, double mu,
                        double guard = kDefaultThresholdGuard);

enum class Direction { Incoming, Outgoing };

class Wave {
public:
  Wave(PropagatingMode mode, Direction direction);

  const PropagatingMode &mode() const { return mode_; }
  Direction direction() const { return direction_; }
  double amplitude() const { return amplitude_; }

  /// Value at local coordinates (y, t) of its own end.
  std::complex<double> value(double y, double t) const;
  /// Derivative along the outward axis, d/dt.
  std::complex<double> normal_derivative(double y, double t) const;
  /// (d/dt + i zeta) u, the impedance datum on a cut.
  std::complex<double> impedance_datum(double y, double t, double zeta) const;

private:
  PropagatingMode mode_;
  Direction direction_;
  double amplitude_;
  double sign_; ///< -1 incoming, +1 outgoing: exp(sign * i * lambda * t)
};

Wave make_wave(const PropagatingMode &mode, Direction direction);

/// Boundary form (N u, D v) - (D u, N v) on the cut t = R, integrated with
/// composite Gauss-Legendre quadrature that is exact to roundoff for the
/// trigonometric products involved. Waves on different ends give 0.
std::complex<double> wronskian(const Wave &u, const Wave &v, double R);

/// Dirichlet and Neumann traces on every cut, as nodal values on the trace
/// meshes (one vector per end).
struct BoundaryTraces {
  std::vector<Eigen::VectorXcd> dirichlet;
  std::vector<Eigen::VectorXcd> neumann;
};

BoundaryTraces sample_traces(const Wave &u, std::span<const TraceMesh> traces, double R);

/// Discrete boundary form using the trace mass matrices. Throws
/// TraceMismatch when the traces were sampled on different discretizations.
std::complex<double> wronskian(const BoundaryTraces &u, const BoundaryTraces &v,
                               std::span<const TraceMesh> traces);

} // namespace wavescat
