#pragma once

// Scattering matrix by minimization of the quadratic functional
//   J_l(a) = || D(v_l^+ - u_l^+) + sum_j a_j D(v_j^- - u_j^-) ||^2_{L2(Gamma^R)},
// where v_j^{+-} solve the impedance problem with the data of u_j^{+-}.
// With e_j = D(v_j^- - u_j^-), f_i = D(v_i^+ - u_i^+):
//   E_ij = (e_i, e_j),  F_ij = (f_i, e_j),  G_i = (f_i, f_i),
//   J_l(a) = <a E, a> + 2 Re <F_l, a> + G_l,
// and the minimizing row solves a E + F_l = 0.

#include "wavescat/geometry.hpp"
#include "wavescat/mesh.hpp"
#include "wavescat/spectral.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wavescat {

/// D-trace of one field: one vector per end, on that end's trace mesh.
using TraceSet = std::vector<Eigen::VectorXcd>;

/// (f, g)_{Gamma^R} summed over all ends.
std::complex<double> gamma_inner(const TraceSet &f, const TraceSet &g,
                                 std::span<const TraceMesh> traces);

struct GramMatrices {
  Eigen::MatrixXcd E;
  Eigen::MatrixXcd F;
  Eigen::VectorXd G;
  double R = 0.0;
  double mu = 0.0;

  int M() const { return static_cast<int>(E.rows()); }
};

/// Throws TraceMismatch when the families differ in size or the traces do
/// not match the trace meshes.
GramMatrices assemble_gram(std::span<const TraceSet> v_plus, std::span<const TraceSet> v_minus,
                           std::span<const TraceSet> u_plus, std::span<const TraceSet> u_minus,
                           std::span<const TraceMesh> traces, double R = 0.0, double mu = 0.0);

/// J_l(a) evaluated from the Gram matrices.
double functional_value(const GramMatrices &gram, int l, const Eigen::RowVectorXcd &a);

struct RowMinimizer {
  Eigen::RowVectorXcd a;
  double J = 0.0;
  double normal_residual = 0.0; ///< ||a E + F_l|| / ||F||
};

/// Spectral data of E and its Hermitian factorization, shared by all rows.
/// Throws NonsingularityViolation when E is not numerically positive
/// definite (cond(E) >= 1 / (100 eps)).
class GramSolver {
public:
  explicit GramSolver(const GramMatrices &gram);

  double cond() const { return cond_; }
  double min_eig() const { return min_eig_; }
  double max_eig() const { return max_eig_; }

  /// Throws NumericalFailure if J_l < -1e-12 at the minimizer.
  RowMinimizer minimize(int l) const;

private:
  GramMatrices gram_;
  Eigen::LDLT<Eigen::MatrixXcd> ldlt_;
  double cond_ = 0.0;
  double min_eig_ = 0.0;
  double max_eig_ = 0.0;
};

RowMinimizer minimize_row(const GramMatrices &gram, int l);

struct ScatteringParams {
  double mu = 2.5;
  double R = 6.0;
  double h = 0.1;
  double zeta = 1.0;
  bool grade_corners = false;
  int element_order = 2;
  double threshold_guard = kDefaultThresholdGuard;
  int grid_n = kDefaultTransverseGrid;
};

struct ScatteringResult {
  double mu = 0.0;
  double R = 0.0;
  double h = 0.0;
  double zeta = 0.0;
  ModeSet modes;
  Eigen::MatrixXcd S;              ///< row l: minimizer for incoming mode l
  Eigen::VectorXd J;               ///< J_l at the minimizer
  Eigen::VectorXd minimizer_norms; ///< sum_j |S_lj|^2
  Eigen::VectorXd normal_residuals;
  double unitarity_defect = 0.0; ///< ||S S^* - I||_F
  double cond_E = 0.0;
  double min_eig_E = 0.0;
  double max_solve_residual = 0.0;
  std::size_t node_count = 0;
  std::size_t triangle_count = 0;
  GramMatrices gram;
};

/// modes -> waves -> impedance data -> 2M solves -> Gram -> M row minimizations.
ScatteringResult compute_scattering(const WaveguideScene &scene, const ScatteringParams &params);

double unitarity_defect(const Eigen::MatrixXcd &S);

struct ExponentialFit {
  bool floor_limited = false; ///< every error below the floor; no fit performed
  double rate = 0.0;          ///< fitted decay rate (minus the slope of log err vs R)
  double intercept = 0.0;     ///< log err at R = 0
  double residual = 0.0;      ///< RMS residual of the log-linear fit
  int points = 0;
};

inline constexpr double kErrorFloor = 1e-12;

/// Least-squares fit of log(err) = c - rate * R over points with err above
/// `floor`. Throws FitError for fewer than 3 usable points.
ExponentialFit fit_exponential_rate(std::span<const double> R, std::span<const double> err,
                                    double floor = kErrorFloor);

struct ConvergencePoint {
  double R = 0.0;
  double err_fro = 0.0; ///< ||S^R - S^{R_ref}||_F; NaN for the reference and excluded points
  double J_max = 0.0;
  bool used = false;
};

struct ConvergenceStudy {
  double mu = 0.0;
  double R_ref = 0.0;
  double margin = 0.0;
  double gamma_estimate = 0.0;
  std::vector<ConvergencePoint> points;
  std::vector<ScatteringResult> results; ///< one per entry of R_list, same order
  ExponentialFit error_fit;              ///< rate = Lambda_hat
  std::optional<ExponentialFit> J_fit;   ///< rate = 2 gamma_hat
};

/// Per-R errors against the largest R (last entry) and J_max, without a fit.
/// Points closer than `margin` to the reference get err_fro = NaN.
std::vector<ConvergencePoint> convergence_points(std::span<const ScatteringResult> results, double margin);

/// Error of every R below R_ref - margin against the largest R, where the
/// margin is two decay lengths 2 / gamma_estimate. Requires an ascending
/// R_list of at least 4 values.
ConvergenceStudy convergence_study(std::span<const ScatteringResult> results);
ConvergenceStudy convergence_study(const WaveguideScene &scene, const ScatteringParams &params,
                                   std::span<const double> R_list);

} // namespace wavescat
