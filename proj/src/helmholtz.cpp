#include "wavescat/helmholtz.hpp"

#include "wavescat/errors.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseLU>

#include <array>
#include <cmath>
#include <sstream>

namespace wavescat {

namespace {

using cd = std::complex<double>;
using Triplet = Eigen::Triplet<cd>;

void add_linear_elements(const Mesh &m, double mu, std::vector<Triplet> &trips) {
  trips.reserve(trips.size() + m.triangles.size() * 9);
  for (const auto &t : m.triangles) {
    const Vec2 &p0 = m.nodes[t[0]], &p1 = m.nodes[t[1]], &p2 = m.nodes[t[2]];
    const double b[3] = {p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y()};
    const double c[3] = {p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x()};
    const double area = 0.5 * (b[0] * c[1] - b[1] * c[0]);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const double k = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        const double mass = area / 12.0 * (i == j ? 2.0 : 1.0);
        trips.emplace_back(t[i], t[j], cd(k - mu * mass, 0.0));
      }
  }
}

// Six-point rule of degree 4 on the reference triangle, weights summing to 1.
constexpr double kQuadA[2] = {0.445948490915965, 0.091576213509771};
constexpr double kQuadW[2] = {0.223381589678011, 0.109951743655322};

void add_quadratic_elements(const Mesh &m, double mu, std::vector<Triplet> &trips) {
  std::vector<std::array<double, 3>> bary;
  std::vector<double> weight;
  for (int g = 0; g < 2; ++g) {
    const double a = kQuadA[g], b = 1.0 - 2.0 * a;
    for (const auto &l : {std::array<double, 3>{a, a, b}, std::array<double, 3>{a, b, a},
                          std::array<double, 3>{b, a, a}}) {
      bary.push_back(l);
      weight.push_back(kQuadW[g]);
    }
  }
  trips.reserve(trips.size() + m.triangles.size() * 36);
  for (std::size_t e = 0; e < m.triangles.size(); ++e) {
    const auto &t = m.triangles[e];
    const auto &md = m.midpoints[e];
    const int node[6] = {t[0], t[1], t[2], md[0], md[1], md[2]};
    const Vec2 &p0 = m.nodes[t[0]], &p1 = m.nodes[t[1]], &p2 = m.nodes[t[2]];
    const double b[3] = {p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y()};
    const double c[3] = {p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x()};
    const double area = 0.5 * (b[0] * c[1] - b[1] * c[0]);
    Vec2 gl[3];
    for (int i = 0; i < 3; ++i) gl[i] = Vec2(b[i], c[i]) / (2.0 * area);
    const int ea[3] = {0, 1, 2}, eb[3] = {1, 2, 0};
    double K[6][6] = {}, Mm[6][6] = {};
    for (std::size_t q = 0; q < bary.size(); ++q) {
      const auto &l = bary[q];
      double N[6];
      Vec2 G[6];
      for (int i = 0; i < 3; ++i) {
        N[i] = l[i] * (2.0 * l[i] - 1.0);
        G[i] = (4.0 * l[i] - 1.0) * gl[i];
        N[3 + i] = 4.0 * l[ea[i]] * l[eb[i]];
        G[3 + i] = 4.0 * (l[ea[i]] * gl[eb[i]] + l[eb[i]] * gl[ea[i]]);
      }
      const double w = weight[q] * area;
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
          K[i][j] += w * G[i].dot(G[j]);
          Mm[i][j] += w * N[i] * N[j];
        }
    }
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) trips.emplace_back(node[i], node[j], cd(K[i][j] - mu * Mm[i][j], 0.0));
  }
}

double total_norm(const BoundaryData &h, std::span<const TraceMesh> traces) {
  double s = 0.0;
  for (std::size_t p = 0; p < traces.size(); ++p) {
    const double n = traces[p].norm(h.values[p]);
    s += n * n;
  }
  return std::sqrt(s);
}

} // namespace

struct TruncatedSystem::Factorization {
  Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu;
};

BoundaryData impedance_data(const Wave &u, std::span<const TraceMesh> traces, double R,
                            double zeta) {
  BoundaryData out;
  for (const auto &tm : traces) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(tm.size()));
    if (tm.end() == u.mode().end)
      for (std::size_t i = 0; i < tm.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = u.impedance_datum(tm.y()[i], R, zeta);
    out.values.push_back(std::move(v));
  }
  return out;
}

Eigen::VectorXcd FieldSolution::trace(const TraceMesh &tm) const {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(tm.size()));
  for (std::size_t i = 0; i < tm.size(); ++i) out(static_cast<Eigen::Index>(i)) = nodal(tm.nodes()[i]);
  return out;
}

std::vector<Eigen::VectorXcd> FieldSolution::traces(std::span<const TraceMesh> tms) const {
  std::vector<Eigen::VectorXcd> out;
  for (const auto &tm : tms) out.push_back(trace(tm));
  return out;
}

TruncatedSystem::TruncatedSystem(std::shared_ptr<const Mesh> mesh, double mu, double zeta)
    : mesh_(std::move(mesh)), mu_(mu), zeta_(zeta) {
  if (zeta_ == 0.0 || !std::isfinite(zeta_))
    throw InvalidParameter("impedance parameter zeta must be a nonzero real number");
  const Mesh &m = *mesh_;
  traces_ = trace_meshes(m);
  const auto n = static_cast<Eigen::Index>(m.nodes.size());

  std::vector<Triplet> trips;
  if (m.order == 2)
    add_quadratic_elements(m, mu_, trips);
  else
    add_linear_elements(m, mu_, trips);
  for (const auto &tm : traces_) {
    const Eigen::MatrixXd B = tm.mass_matrix();
    const auto &nodes = tm.nodes();
    for (Eigen::Index a = 0; a < B.rows(); ++a)
      for (Eigen::Index b = 0; b < B.cols(); ++b)
        if (B(a, b) != 0.0)
          trips.emplace_back(nodes[static_cast<std::size_t>(a)], nodes[static_cast<std::size_t>(b)],
                             cd(0.0, zeta_ * B(a, b)));
  }
  full_.resize(n, n);
  full_.setFromTriplets(trips.begin(), trips.end());

  dof_of_node_.assign(m.nodes.size(), -1);
  for (std::size_t i = 0; i < m.nodes.size(); ++i)
    if (!m.dirichlet[i]) {
      dof_of_node_[i] = static_cast<int>(node_of_dof_.size());
      node_of_dof_.push_back(static_cast<int>(i));
    }
  std::vector<Triplet> red;
  red.reserve(static_cast<std::size_t>(full_.nonZeros()));
  for (Eigen::Index col = 0; col < full_.outerSize(); ++col)
    for (SparseMatrixC::InnerIterator it(full_, col); it; ++it) {
      const int r = dof_of_node_[static_cast<std::size_t>(it.row())];
      const int c = dof_of_node_[static_cast<std::size_t>(it.col())];
      if (r >= 0 && c >= 0) red.emplace_back(r, c, it.value());
    }
  const auto nd = static_cast<Eigen::Index>(node_of_dof_.size());
  reduced_.resize(nd, nd);
  reduced_.setFromTriplets(red.begin(), red.end());
  reduced_.makeCompressed();
}

TruncatedSystem::~TruncatedSystem() = default;
TruncatedSystem::TruncatedSystem(TruncatedSystem &&) noexcept = default;
TruncatedSystem &TruncatedSystem::operator=(TruncatedSystem &&) noexcept = default;

std::complex<double> TruncatedSystem::form(const Eigen::VectorXcd &u, const Eigen::VectorXcd &w) const {
  return w.dot(full_ * u);
}

Eigen::VectorXcd TruncatedSystem::load(const BoundaryData &h) const {
  if (h.values.size() != traces_.size())
    throw TraceMismatch("boundary data covers a different number of ends than the mesh");
  Eigen::VectorXcd b = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh_->nodes.size()));
  for (std::size_t p = 0; p < traces_.size(); ++p) {
    const Eigen::VectorXcd mh = traces_[p].apply_mass(h.values[p]);
    for (std::size_t i = 0; i < traces_[p].size(); ++i)
      b(traces_[p].nodes()[i]) += mh(static_cast<Eigen::Index>(i));
  }
  return b;
}

void TruncatedSystem::factorize() {
  if (lu_) return;
  auto f = std::make_unique<Factorization>();
  f->lu.analyzePattern(reduced_);
  f->lu.factorize(reduced_);
  if (f->lu.info() != Eigen::Success) {
    std::ostringstream os;
    os << "sparse LU of the truncated impedance problem failed (mu = " << mu_ << ", zeta = " << zeta_
       << ", R = " << mesh_->R << "): " << f->lu.lastErrorMessage();
    throw SingularSystem(os.str());
  }
  lu_ = std::move(f);
}

bool TruncatedSystem::factorized() const { return static_cast<bool>(lu_); }

Eigen::VectorXcd TruncatedSystem::solve_reduced(const Eigen::VectorXcd &rhs) const {
  if (!lu_) throw SingularSystem("solve_reduced called before factorize");
  return lu_->lu.solve(rhs);
}

TruncatedSystem assemble(std::shared_ptr<const Mesh> mesh, double mu, double zeta) {
  return TruncatedSystem(std::move(mesh), mu, zeta);
}

std::vector<FieldSolution> solve(TruncatedSystem &system, std::span<const BoundaryData> rhs) {
  system.factorize();
  const auto &n2d = system.node_of_dof();
  const auto nd = static_cast<Eigen::Index>(n2d.size());
  std::vector<FieldSolution> out;
  for (const auto &h : rhs) {
    const Eigen::VectorXcd full_load = system.load(h);
    Eigen::VectorXcd b(nd);
    for (Eigen::Index i = 0; i < nd; ++i) b(i) = full_load(n2d[static_cast<std::size_t>(i)]);
    FieldSolution sol;
    sol.nodal = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(system.mesh().nodes.size()));
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
      out.push_back(std::move(sol));
      continue;
    }
    const Eigen::VectorXcd x = system.solve_reduced(b);
    sol.relative_residual = (system.matrix() * x - b).norm() / bnorm;
    if (!(sol.relative_residual < 1e-10)) {
      std::ostringstream os;
      os << "impedance solve residual " << sol.relative_residual << " exceeds 1e-10 (mu = " << system.mu()
         << ", R = " << system.mesh().R << ")";
      throw SingularSystem(os.str());
    }
    for (Eigen::Index i = 0; i < nd; ++i) sol.nodal(n2d[static_cast<std::size_t>(i)]) = x(i);
    out.push_back(std::move(sol));
  }
  return out;
}

TraceBoundCheck trace_bound_check(TruncatedSystem &system, const BoundaryData &h) {
  const auto sol = solve(system, std::span<const BoundaryData>(&h, 1));
  TraceBoundCheck out;
  double s = 0.0;
  for (const auto &tm : system.traces()) {
    const double n = tm.norm(sol.front().trace(tm));
    s += n * n;
  }
  out.lhs = std::sqrt(s);
  out.rhs = total_norm(h, system.traces()) / std::abs(system.zeta());
  return out;
}

} // namespace wavescat
