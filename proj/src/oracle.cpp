#include "wavescat/oracle.hpp"

#include "wavescat/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace wavescat {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

void guard_thresholds(double d, double mu, double guard, int end) {
  for (int k = 1;; ++k) {
    const double nu = std::pow(k * M_PI / d, 2);
    if (std::abs(mu - nu) < guard) {
      std::ostringstream os;
      os << "mu = " << mu << " is within " << guard << " of threshold nu_" << k << " = " << nu
         << " of end " << end + 1;
      throw ThresholdProximity(os.str(), nu, end, k);
    }
    if (nu > mu + guard) break;
  }
}

int propagating_count(double d, double mu) {
  int m = 0;
  while (std::pow((m + 1) * M_PI / d, 2) < mu) ++m;
  return m;
}

/// sqrt(mu - nu_k) on the principal branch: positive for propagating modes,
/// i * kappa for evanescent ones.
cd axial_wavenumber(double d, int k, double mu) {
  const double s = mu - std::pow(k * M_PI / d, 2);
  return s >= 0.0 ? cd(std::sqrt(s), 0.0) : cd(0.0, std::sqrt(-s));
}

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

/// Integral of cos(k Y + phase) over [c, c + d].
double cos_integral(double k, double phase, double c, double d) {
  return d * std::cos(k * (c + 0.5 * d) + phase) * sinc(0.5 * k * d);
}

} // namespace

Eigen::MatrixXcd straight_guide_S(double d, double mu, double L1, double L2, double guard) {
  if (!(d > 0.0)) throw InvalidParameter("straight_guide_S: width must be positive");
  guard_thresholds(d, mu, guard, 0);
  const int m = propagating_count(d, mu);
  if (m == 0) throw InvalidParameter("straight_guide_S: mu is below the first threshold");
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(2 * m, 2 * m);
  for (int k = 1; k <= m; ++k) {
    const double lambda = axial_wavenumber(d, k, mu).real();
    const cd t = (k % 2 == 1 ? 1.0 : -1.0) * std::exp(I * lambda * (L1 + L2));
    S(k - 1, m + k - 1) = t;
    S(m + k - 1, k - 1) = t;
  }
  return S;
}

Eigen::MatrixXcd step_junction_S(const StepJunction &j, int n_left, int n_right) {
  const double dL = j.d_left, dR = j.d_right, mu = j.mu;
  const double c = j.alignment == StepAlignment::Centered ? 0.5 * (dR - dL) : 0.0;
  const int mL = propagating_count(dL, mu), mR = propagating_count(dR, mu);
  if (n_left < mL || n_right < mR) throw InvalidParameter("step_junction_S: truncation below the propagating count");

  // Global coordinates: step at X = 0, narrow channel on Y in (c, c + dL) for
  // X < 0, wide channel on (0, dR) for X > 0. Transverse bases
  //   psiL_m(Y) = sqrt(2/dL) sin(m pi (Y - c) / dL),  psiR_n(Y) = sqrt(2/dR) sin(n pi Y / dR).
  // Left field sum (A_m e^{i b_m X} + B_m e^{-i b_m X}) psiL_m,
  // right field sum (C_n e^{i b'_n X} + D_n e^{-i b'_n X}) psiR_n.
  Eigen::MatrixXd W(n_left, n_right);
  for (int m = 1; m <= n_left; ++m)
    for (int n = 1; n <= n_right; ++n) {
      const double p = m * M_PI / dL, q = n * M_PI / dR;
      W(m - 1, n - 1) = std::sqrt(1.0 / (dL * dR)) *
                        (cos_integral(p - q, -p * c, c, dL) - cos_integral(p + q, -p * c, c, dL));
    }
  Eigen::VectorXcd bL(n_left), bR(n_right);
  for (int m = 0; m < n_left; ++m) bL(m) = axial_wavenumber(dL, m + 1, mu);
  for (int n = 0; n < n_right; ++n) bR(n) = axial_wavenumber(dR, n + 1, mu);

  // C + D = W^T (A + B) and W diag(bR) (C - D) = diag(bL) (A - B) give
  //   (W diag(bR) W^T + diag(bL)) B = (diag(bL) - W diag(bR) W^T) A + 2 W diag(bR) D.
  const Eigen::MatrixXcd WB = W.cast<cd>() * bR.asDiagonal();
  const Eigen::MatrixXcd K = WB * W.transpose().cast<cd>();
  Eigen::MatrixXcd lhs = K;
  lhs.diagonal() += bL;
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(lhs);

  const int M = mL + mR;
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n_left, M), D = Eigen::MatrixXcd::Zero(n_right, M);
  // Wave u_(1,k)^+ = c_k exp(-i lambda t1) phi_k(y1) with t1 = -a - X and
  // y1 = c + dL - Y, so phi_k(y1) = (-1)^(k+1) psiL_k(Y).
  for (int k = 1; k <= mL; ++k) {
    const double lam = bL(k - 1).real();
    A(k - 1, k - 1) = (k % 2 == 1 ? 1.0 : -1.0) * std::exp(I * lam * j.left_length) / std::sqrt(2.0 * lam);
  }
  // Wave u_(2,k)^+ = c_k exp(-i lambda t2) phi_k(y2) with t2 = X - b and y2 = Y.
  for (int k = 1; k <= mR; ++k) {
    const double lam = bR(k - 1).real();
    D(k - 1, mL + k - 1) = std::exp(I * lam * j.right_length) / std::sqrt(2.0 * lam);
  }
  Eigen::MatrixXcd rhs = -K * A + 2.0 * WB * D;
  rhs += bL.asDiagonal() * A;
  const Eigen::MatrixXcd B = lu.solve(rhs);
  const Eigen::MatrixXcd C = W.transpose().cast<cd>() * (A + B) - D;

  // Project onto outgoing waves: B_k e^{-i lambda X} psiL_k is
  // (-1)^(k+1) exp(i lambda a) / c_k times u_(1,k)^-, and C_k e^{i lambda X} psiR_k
  // is exp(i lambda b) / c_k times u_(2,k)^-.
  Eigen::MatrixXcd S(M, M);
  for (int l = 0; l < M; ++l) {
    for (int k = 1; k <= mL; ++k) {
      const double lam = bL(k - 1).real();
      S(l, k - 1) = B(k - 1, l) * (k % 2 == 1 ? 1.0 : -1.0) * std::exp(I * lam * j.left_length) *
                    std::sqrt(2.0 * lam);
    }
    for (int k = 1; k <= mR; ++k) {
      const double lam = bR(k - 1).real();
      S(l, mL + k - 1) = C(k - 1, l) * std::exp(I * lam * j.right_length) * std::sqrt(2.0 * lam);
    }
  }
  return S;
}

StepJunctionResult step_junction_S(const StepJunction &j) {
  if (!(j.d_left > 0.0) || !(j.d_right > 0.0))
    throw InvalidParameter("step_junction_S: widths must be positive");
  if (j.d_left > j.d_right) throw InvalidParameter("step_junction_S: requires d_left <= d_right");
  guard_thresholds(j.d_left, j.mu, j.guard, 0);
  guard_thresholds(j.d_right, j.mu, j.guard, 1);
  StepJunctionResult res;
  res.M_left = propagating_count(j.d_left, j.mu);
  res.M_right = propagating_count(j.d_right, j.mu);
  if (res.M_left == 0 || res.M_right == 0)
    throw InvalidParameter("step_junction_S: mu is below the first threshold of an end");
  const int M = res.M_left + res.M_right;
  int n = j.n_trunc > 0 ? j.n_trunc : std::max(3 * M, M + 8);
  if (n < M + 8) throw InvalidParameter("step_junction_S: n_trunc must be at least M + 8");
  const auto right_count = [&](int nl) {
    return std::max(res.M_right + 1, static_cast<int>(std::lround(nl * j.d_right / j.d_left)));
  };
  Eigen::MatrixXcd prev = step_junction_S(j, n, right_count(n));
  while (2 * n <= j.max_trunc) {
    n *= 2;
    Eigen::MatrixXcd next = step_junction_S(j, n, right_count(n));
    res.change = (next - prev).norm();
    prev = std::move(next);
    if (res.change < 1e-6) {
      res.converged = true;
      break;
    }
  }
  res.S = std::move(prev);
  res.n_left = n;
  res.n_right = right_count(n);
  return res;
}

} // namespace wavescat
