#include "wavescat/spectral.hpp"

#include "wavescat/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wavescat {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

template <class F> cd integrate_complex(const F &f, double a, double b) {
  using Rule = boost::math::quadrature::gauss<double, 20>;
  return {Rule::integrate([&](double y) { return f(y).real(); }, a, b),
          Rule::integrate([&](double y) { return f(y).imag(); }, a, b)};
}

} // namespace

SymmetricTridiagonal::SymmetricTridiagonal(std::vector<double> diag, std::vector<double> off)
    : diag_(std::move(diag)), off_(std::move(off)) {
  if (diag_.empty() || off_.size() + 1 != diag_.size())
    throw InvalidParameter("tridiagonal: off-diagonal must have size n - 1");
}

std::size_t SymmetricTridiagonal::count_below(double x) const {
  // Signs of the pivots of T - x I = L D L^T.
  std::size_t negatives = 0;
  double q = diag_[0] - x;
  const double tiny = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0;; ++i) {
    if (q == 0.0) q = -tiny;
    if (q < 0.0) ++negatives;
    if (i + 1 == diag_.size()) break;
    q = diag_[i + 1] - x - off_[i] * off_[i] / q;
  }
  return negatives;
}

std::vector<double> SymmetricTridiagonal::smallest_eigenvalues(std::size_t count) const {
  count = std::min(count, size());
  // Gershgorin interval.
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < size(); ++i) {
    const double r = (i > 0 ? std::abs(off_[i - 1]) : 0.0) + (i < off_.size() ? std::abs(off_[i]) : 0.0);
    lo = std::min(lo, diag_[i] - r);
    hi = std::max(hi, diag_[i] + r);
  }
  std::vector<double> out;
  double left = lo;
  for (std::size_t k = 0; k < count; ++k) {
    // k-th eigenvalue: smallest x with count_below(x) > k.
    double a = left, b = hi;
    for (int it = 0; it < 200 && b - a > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)); ++it) {
      const double mid = 0.5 * (a + b);
      if (count_below(mid) > k)
        b = mid;
      else
        a = mid;
    }
    out.push_back(0.5 * (a + b));
    left = a;
  }
  return out;
}

Eigen::VectorXd SymmetricTridiagonal::eigenvector(double eigenvalue) const {
  const std::size_t n = size();
  const double shift = eigenvalue + 1e-10 * std::max(1.0, std::abs(eigenvalue));
  Eigen::VectorXd x = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) += 1e-3 * static_cast<double>(i % 7);
  // Thomas algorithm on (T - shift I); the shifted matrix is nearly singular,
  // which is what inverse iteration wants.
  std::vector<double> c(n), d(n);
  for (int iter = 0; iter < 3; ++iter) {
    double denom = diag_[0] - shift;
    c[0] = n > 1 ? off_[0] / denom : 0.0;
    d[0] = x(0) / denom;
    for (std::size_t i = 1; i < n; ++i) {
      denom = diag_[i] - shift - off_[i - 1] * c[i - 1];
      if (denom == 0.0) denom = std::numeric_limits<double>::epsilon();
      c[i] = i + 1 < n ? off_[i] / denom : 0.0;
      d[i] = (x(static_cast<Eigen::Index>(i)) - off_[i - 1] * d[i - 1]) / denom;
    }
    x(static_cast<Eigen::Index>(n - 1)) = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
      x(static_cast<Eigen::Index>(i)) = d[i] - c[i] * x(static_cast<Eigen::Index>(i + 1));
    x.normalize();
  }
  return x;
}

double TransverseBasis::phi(int k, double y) const {
  return std::sqrt(2.0 / width) * std::sin(k * M_PI * y / width);
}

double TransverseBasis::analytic_eigenvalue(int k) const {
  const double s = k * M_PI / width;
  return s * s;
}

TransverseBasis transverse_eigs(const CrossSection &cs, int count, int grid_n, int end) {
  if (count < 1) throw InvalidParameter("transverse_eigs: count must be >= 1");
  if (grid_n < 16) throw InvalidParameter("transverse_eigs: grid_n must be >= 16");
  if (!(cs.width > 0.0)) throw InvalidParameter("transverse_eigs: width must be positive");
  if (count >= grid_n) throw InvalidParameter("transverse_eigs: count must be below grid_n");
  const double h = cs.width / grid_n;
  const std::size_t n = static_cast<std::size_t>(grid_n) - 1; // interior nodes
  SymmetricTridiagonal T(std::vector<double>(n, 2.0 / (h * h)),
                         std::vector<double>(n - 1, -1.0 / (h * h)));
  TransverseBasis basis;
  basis.end = end;
  basis.width = cs.width;
  basis.grid_n = grid_n;
  basis.eigenvalues = T.smallest_eigenvalues(static_cast<std::size_t>(count));
  for (double nu : basis.eigenvalues) {
    const Eigen::VectorXd v = T.eigenvector(nu);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(grid_n + 1);
    s.segment(1, static_cast<Eigen::Index>(n)) = v;
    s /= std::sqrt(h * s.squaredNorm()); // trapezoid rule, endpoints vanish
    if (s(1) < 0.0) s = -s;
    basis.samples.push_back(std::move(s));
  }
  return basis;
}

std::vector<TransverseBasis> scene_bases(const WaveguideScene &scene, double mu_max, int grid_n) {
  std::vector<TransverseBasis> out;
  for (std::size_t p = 0; p < scene.ends.size(); ++p) {
    const double d = scene.ends[p].cross_section.width;
    const int count = static_cast<int>(std::floor(d * std::sqrt(std::max(mu_max, 0.0)) / M_PI)) + 2;
    out.push_back(transverse_eigs(scene.ends[p].cross_section, count, grid_n, static_cast<int>(p)));
  }
  return out;
}

ModeSet enumerate_modes(std::span<const TransverseBasis> bases, double mu, double guard) {
  ModeSet set;
  set.mu = mu;
  set.gamma_estimate = std::numeric_limits<double>::infinity();
  int index = 0;
  for (const auto &basis : bases) {
    for (std::size_t k = 0; k < basis.eigenvalues.size(); ++k) {
      const double nu = basis.eigenvalues[k];
      if (std::abs(mu - nu) < guard) {
        std::ostringstream os;
        os << "mu = " << mu << " is within " << guard << " of threshold nu_" << k + 1 << " = "
           << nu << " of end " << basis.end + 1;
        throw ThresholdProximity(os.str(), nu, basis.end, static_cast<int>(k) + 1);
      }
    }
    const auto above = std::find_if(basis.eigenvalues.begin(), basis.eigenvalues.end(),
                                    [mu](double nu) { return nu > mu; });
    if (above == basis.eigenvalues.end())
      throw InvalidParameter("transverse basis of end " + std::to_string(basis.end + 1) +
                             " has no eigenvalue above mu; increase its count");
    const int mp = static_cast<int>(above - basis.eigenvalues.begin());
    set.per_end.push_back(mp);
    set.gamma_estimate = std::min(set.gamma_estimate, std::sqrt(*above - mu));
    for (int k = 0; k < mp; ++k) {
      PropagatingMode m;
      m.end = basis.end;
      m.k = k + 1;
      m.index = index++;
      m.width = basis.width;
      m.nu = basis.eigenvalues[k];
      m.lambda = std::sqrt(mu - m.nu);
      m.gap_below = mu - m.nu;
      m.gap_above = *above - mu;
      set.modes.push_back(m);
    }
  }
  return set;
}

Wave::Wave(PropagatingMode mode, Direction direction)
    : mode_(mode), direction_(direction), amplitude_(1.0 / std::sqrt(2.0 * mode.lambda)),
      sign_(direction == Direction::Incoming ? -1.0 : 1.0) {}

std::complex<double> Wave::value(double y, double t) const {
  const double phi = std::sqrt(2.0 / mode_.width) * std::sin(mode_.k * M_PI * y / mode_.width);
  return amplitude_ * std::exp(sign_ * I * mode_.lambda * t) * phi;
}

std::complex<double> Wave::normal_derivative(double y, double t) const {
  return sign_ * I * mode_.lambda * value(y, t);
}

std::complex<double> Wave::impedance_datum(double y, double t, double zeta) const {
  return normal_derivative(y, t) + I * zeta * value(y, t);
}

Wave make_wave(const PropagatingMode &mode, Direction direction) { return Wave(mode, direction); }

std::complex<double> wronskian(const Wave &u, const Wave &v, double R) {
  if (u.mode().end != v.mode().end) return {0.0, 0.0};
  const double d = u.mode().width;
  const int panels = std::max(u.mode().k, v.mode().k) + 2;
  const double w = d / panels;
  const auto integrand = [&](double y) {
    return u.normal_derivative(y, R) * std::conj(v.value(y, R)) -
           u.value(y, R) * std::conj(v.normal_derivative(y, R));
  };
  cd sum{0.0, 0.0};
  for (int p = 0; p < panels; ++p)
    sum += integrate_complex(integrand, p * w, (p + 1) * w);
  return sum;
}

BoundaryTraces sample_traces(const Wave &u, std::span<const TraceMesh> traces, double R) {
  BoundaryTraces out;
  for (const auto &tm : traces) {
    Eigen::VectorXcd dv = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(tm.size()));
    Eigen::VectorXcd nv = dv;
    if (tm.end() == u.mode().end)
      for (std::size_t i = 0; i < tm.size(); ++i) {
        dv(static_cast<Eigen::Index>(i)) = u.value(tm.y()[i], R);
        nv(static_cast<Eigen::Index>(i)) = u.normal_derivative(tm.y()[i], R);
      }
    out.dirichlet.push_back(std::move(dv));
    out.neumann.push_back(std::move(nv));
  }
  return out;
}

std::complex<double> wronskian(const BoundaryTraces &u, const BoundaryTraces &v,
                               std::span<const TraceMesh> traces) {
  const std::size_t n = traces.size();
  if (u.dirichlet.size() != n || u.neumann.size() != n || v.dirichlet.size() != n ||
      v.neumann.size() != n)
    throw TraceMismatch("wronskian: traces cover a different number of ends");
  cd sum{0.0, 0.0};
  for (std::size_t p = 0; p < n; ++p) {
    const auto sz = static_cast<Eigen::Index>(traces[p].size());
    if (u.dirichlet[p].size() != sz || u.neumann[p].size() != sz || v.dirichlet[p].size() != sz ||
        v.neumann[p].size() != sz)
      throw TraceMismatch("wronskian: trace length differs from the trace mesh of end " +
                          std::to_string(p + 1));
    sum += traces[p].inner(u.neumann[p], v.dirichlet[p]) - traces[p].inner(u.dirichlet[p], v.neumann[p]);
  }
  return sum;
}

} // namespace wavescat
