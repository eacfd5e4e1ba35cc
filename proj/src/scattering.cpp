#include "wavescat/scattering.hpp"

#include "wavescat/errors.hpp"
#include "wavescat/helmholtz.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

namespace wavescat {

namespace {

using cd = std::complex<double>;

void check_family(std::span<const TraceSet> family, std::size_t M,
                  std::span<const TraceMesh> traces, const char *name) {
  if (family.size() != M)
    throw TraceMismatch(std::string("assemble_gram: family ") + name + " has the wrong number of fields");
  for (const auto &f : family) {
    if (f.size() != traces.size())
      throw TraceMismatch(std::string("assemble_gram: a trace of ") + name +
                          " covers the wrong number of ends");
    for (std::size_t p = 0; p < traces.size(); ++p)
      if (f[p].size() != static_cast<Eigen::Index>(traces[p].size()))
        throw TraceMismatch(std::string("assemble_gram: a trace of ") + name +
                            " does not match the trace mesh of end " + std::to_string(p + 1));
  }
}

TraceSet difference(const TraceSet &a, const TraceSet &b) {
  TraceSet out(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) out[p] = a[p] - b[p];
  return out;
}

} // namespace

std::complex<double> gamma_inner(const TraceSet &f, const TraceSet &g,
                                 std::span<const TraceMesh> traces) {
  cd s{0.0, 0.0};
  for (std::size_t p = 0; p < traces.size(); ++p) s += traces[p].inner(f[p], g[p]);
  return s;
}

GramMatrices assemble_gram(std::span<const TraceSet> v_plus, std::span<const TraceSet> v_minus,
                           std::span<const TraceSet> u_plus, std::span<const TraceSet> u_minus,
                           std::span<const TraceMesh> traces, double R, double mu) {
  const std::size_t M = v_plus.size();
  check_family(v_plus, M, traces, "v+");
  check_family(v_minus, M, traces, "v-");
  check_family(u_plus, M, traces, "u+");
  check_family(u_minus, M, traces, "u-");

  std::vector<TraceSet> e, f;
  for (std::size_t j = 0; j < M; ++j) {
    e.push_back(difference(v_minus[j], u_minus[j]));
    f.push_back(difference(v_plus[j], u_plus[j]));
  }
  const auto m = static_cast<Eigen::Index>(M);
  GramMatrices g;
  g.R = R;
  g.mu = mu;
  g.E.resize(m, m);
  g.F.resize(m, m);
  g.G.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      g.E(i, j) = gamma_inner(e[i], e[j], traces);
      g.E(j, i) = std::conj(g.E(i, j));
    }
    g.E(i, i) = g.E(i, i).real();
    for (Eigen::Index j = 0; j < m; ++j) g.F(i, j) = gamma_inner(f[i], e[j], traces);
    g.G(i) = gamma_inner(f[i], f[i], traces).real();
  }
  return g;
}

double functional_value(const GramMatrices &gram, int l, const Eigen::RowVectorXcd &a) {
  const Eigen::RowVectorXcd aE = a * gram.E;
  const double q = (aE * a.adjoint())(0, 0).real();
  const double lin = (gram.F.row(l) * a.adjoint())(0, 0).real();
  return q + 2.0 * lin + gram.G(l);
}

GramSolver::GramSolver(const GramMatrices &gram) : gram_(gram) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram_.E, Eigen::EigenvaluesOnly);
  min_eig_ = eig.eigenvalues().minCoeff();
  max_eig_ = eig.eigenvalues().maxCoeff();
  cond_ = min_eig_ > 0.0 ? max_eig_ / min_eig_ : std::numeric_limits<double>::infinity();
  const double limit = 1.0 / (100.0 * std::numeric_limits<double>::epsilon());
  if (!(cond_ < limit)) {
    std::ostringstream os;
    os << "Gram matrix E is numerically singular at mu = " << gram_.mu << ", R = " << gram_.R
       << " (min eigenvalue " << min_eig_ << ", cond " << cond_
       << "); E is nonsingular only for R >= R_0, so increase R";
    throw NonsingularityViolation(os.str());
  }
  ldlt_.compute(gram_.E);
}

RowMinimizer GramSolver::minimize(int l) const {
  // a E + F_l = 0  <=>  E conj(a)^T = -conj(F_l)^T, E Hermitian.
  const Eigen::VectorXcd rhs = -gram_.F.row(l).adjoint();
  const Eigen::VectorXcd x = ldlt_.solve(rhs);
  RowMinimizer out;
  out.a = x.adjoint();
  const double fnorm = gram_.F.norm();
  out.normal_residual = fnorm > 0.0 ? (out.a * gram_.E + gram_.F.row(l)).norm() / fnorm : 0.0;
  double J = functional_value(gram_, l, out.a);
  if (J < 0.0) {
    if (J < -1e-12 * std::max(1.0, gram_.G(l))) {
      std::ostringstream os;
      os << "functional value J_" << l + 1 << " = " << J << " is negative at mu = " << gram_.mu
         << ", R = " << gram_.R;
      throw NumericalFailure(os.str());
    }
    J = 0.0;
  }
  out.J = J;
  return out;
}

RowMinimizer minimize_row(const GramMatrices &gram, int l) {
  if (l < 0 || l >= gram.M()) throw InvalidParameter("minimize_row: row index out of range");
  return GramSolver(gram).minimize(l);
}

double unitarity_defect(const Eigen::MatrixXcd &S) {
  return (S * S.adjoint() - Eigen::MatrixXcd::Identity(S.rows(), S.rows())).norm();
}

ScatteringResult compute_scattering(const WaveguideScene &scene, const ScatteringParams &params) {
  const auto bases = scene_bases(scene, params.mu, params.grid_n);
  ScatteringResult res;
  res.mu = params.mu;
  res.R = params.R;
  res.h = params.h;
  res.zeta = params.zeta;
  res.modes = enumerate_modes(bases, params.mu, params.threshold_guard);

  const TruncatedDomain domain = truncate(scene, params.R);
  auto mesh = std::make_shared<const Mesh>(generate(domain, params.h, params.grade_corners, params.element_order));
  res.node_count = mesh->nodes.size();
  res.triangle_count = mesh->triangles.size();
  TruncatedSystem system = assemble(mesh, params.mu, params.zeta);
  const auto &traces = system.traces();

  const int M = res.modes.M();
  std::vector<Wave> incoming, outgoing;
  std::vector<BoundaryData> rhs;
  for (const auto &mode : res.modes.modes) {
    incoming.push_back(make_wave(mode, Direction::Incoming));
    outgoing.push_back(make_wave(mode, Direction::Outgoing));
  }
  for (const auto &w : incoming) rhs.push_back(impedance_data(w, traces, params.R, params.zeta));
  for (const auto &w : outgoing) rhs.push_back(impedance_data(w, traces, params.R, params.zeta));
  const auto solutions = solve(system, rhs);

  std::vector<TraceSet> v_plus, v_minus, u_plus, u_minus;
  for (int j = 0; j < M; ++j) {
    v_plus.push_back(solutions[static_cast<std::size_t>(j)].traces(traces));
    v_minus.push_back(solutions[static_cast<std::size_t>(M + j)].traces(traces));
    u_plus.push_back(sample_traces(incoming[static_cast<std::size_t>(j)], traces, params.R).dirichlet);
    u_minus.push_back(sample_traces(outgoing[static_cast<std::size_t>(j)], traces, params.R).dirichlet);
  }
  for (const auto &s : solutions) res.max_solve_residual = std::max(res.max_solve_residual, s.relative_residual);

  res.gram = assemble_gram(v_plus, v_minus, u_plus, u_minus, traces, params.R, params.mu);
  const GramSolver solver(res.gram);
  res.cond_E = solver.cond();
  res.min_eig_E = solver.min_eig();
  res.S.resize(M, M);
  res.J.resize(M);
  res.minimizer_norms.resize(M);
  res.normal_residuals.resize(M);
  for (int l = 0; l < M; ++l) {
    const RowMinimizer row = solver.minimize(l);
    res.S.row(l) = row.a;
    res.J(l) = row.J;
    res.minimizer_norms(l) = row.a.squaredNorm();
    res.normal_residuals(l) = row.normal_residual;
  }
  res.unitarity_defect = unitarity_defect(res.S);
  return res;
}

ExponentialFit fit_exponential_rate(std::span<const double> R, std::span<const double> err,
                                    double floor) {
  if (R.size() != err.size()) throw FitError("fit_exponential_rate: R and err differ in length");
  std::vector<double> x, y;
  bool any_finite = false;
  for (std::size_t i = 0; i < R.size(); ++i) {
    if (!std::isfinite(err[i])) continue;
    any_finite = true;
    if (err[i] > floor) {
      x.push_back(R[i]);
      y.push_back(std::log(err[i]));
    }
  }
  ExponentialFit fit;
  if (any_finite && x.empty()) {
    fit.floor_limited = true;
    return fit;
  }
  if (x.size() < 3) throw FitError("fit_exponential_rate: fewer than 3 usable points");
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double denom = n * sxx - sx * sx;
  if (!(denom > 0.0)) throw FitError("fit_exponential_rate: all usable points share one R");
  const double slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - slope * sx) / n;
  fit.rate = -slope;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + slope * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = static_cast<int>(x.size());
  return fit;
}

std::vector<ConvergencePoint> convergence_points(std::span<const ScatteringResult> results, double margin) {
  std::vector<ConvergencePoint> points;
  if (results.empty()) return points;
  const ScatteringResult &ref = results.back();
  for (const auto &r : results) {
    ConvergencePoint pt;
    pt.R = r.R;
    pt.J_max = r.J.size() > 0 ? r.J.maxCoeff() : 0.0;
    pt.err_fro = std::numeric_limits<double>::quiet_NaN();
    if (&r != &ref && r.R < ref.R - margin && r.S.rows() == ref.S.rows()) {
      pt.err_fro = (r.S - ref.S).norm();
      pt.used = true;
    }
    points.push_back(pt);
  }
  return points;
}

ConvergenceStudy convergence_study(std::span<const ScatteringResult> results) {
  if (results.size() < 4) throw FitError("convergence_study: need at least 4 values of R");
  for (std::size_t i = 1; i < results.size(); ++i)
    if (!(results[i].R > results[i - 1].R))
      throw FitError("convergence_study: R values must be strictly ascending");
  ConvergenceStudy st;
  const ScatteringResult &ref = results.back();
  st.mu = ref.mu;
  st.R_ref = ref.R;
  st.gamma_estimate = ref.modes.gamma_estimate;
  st.margin = 2.0 / st.gamma_estimate;
  st.points = convergence_points(results, st.margin);
  std::vector<double> R, err, Rj, J;
  for (const auto &pt : st.points) {
    if (pt.used) {
      R.push_back(pt.R);
      err.push_back(pt.err_fro);
    }
    Rj.push_back(pt.R);
    J.push_back(pt.J_max);
  }
  st.error_fit = fit_exponential_rate(R, err);
  try {
    st.J_fit = fit_exponential_rate(Rj, J);
  } catch (const FitError &) {
    st.J_fit.reset();
  }
  st.results.assign(results.begin(), results.end());
  return st;
}

ConvergenceStudy convergence_study(const WaveguideScene &scene, const ScatteringParams &params,
                                   std::span<const double> R_list) {
  std::vector<ScatteringResult> results;
  for (double R : R_list) {
    ScatteringParams p = params;
    p.R = R;
    results.push_back(compute_scattering(scene, p));
  }
  return convergence_study(results);
}

} // namespace wavescat
