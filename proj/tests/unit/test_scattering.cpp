#include "wavescat/errors.hpp"
#include "wavescat/oracle.hpp"
#include "wavescat/scattering.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace wavescat;
using cd = std::complex<double>;

namespace {

std::vector<TraceMesh> two_cuts(int n) {
  std::vector<TraceMesh> out;
  for (int p = 0; p < 2; ++p) {
    std::vector<int> nodes(static_cast<std::size_t>(n + 1));
    std::vector<double> y(nodes.size());
    for (int i = 0; i <= n; ++i) {
      nodes[static_cast<std::size_t>(i)] = i;
      y[static_cast<std::size_t>(i)] = M_PI * i / n;
    }
    out.push_back(TraceMesh::from_points(p, M_PI, nodes, y));
  }
  return out;
}

std::vector<TraceSet> random_family(std::size_t M, std::span<const TraceMesh> tms, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  std::vector<TraceSet> fam(M);
  for (auto &f : fam)
    for (const auto &tm : tms) {
      Eigen::VectorXcd v(static_cast<Eigen::Index>(tm.size()));
      for (auto &x : v) x = cd(g(rng), g(rng));
      f.push_back(v);
    }
  return fam;
}

GramMatrices random_gram(std::size_t M, std::mt19937_64 &rng) {
  const auto tms = two_cuts(24);
  return assemble_gram(random_family(M, tms, rng), random_family(M, tms, rng), random_family(M, tms, rng),
                       random_family(M, tms, rng), tms, 5.0, 2.5);
}

ScatteringParams strip_params(double mu, double R, double h) {
  ScatteringParams p;
  p.mu = mu;
  p.R = R;
  p.h = h;
  return p;
}

} // namespace

TEST(Gram, HermitianPositiveSemidefinite) {
  std::mt19937_64 rng(1);
  const GramMatrices g = random_gram(4, rng);
  EXPECT_LE((g.E - g.E.adjoint()).norm(), 1e-12 * g.E.norm());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(g.E);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12 * g.E.norm());
  EXPECT_GE(g.G.minCoeff(), 0.0);
}

TEST(Gram, InnerProductIsConjugateSymmetric) {
  std::mt19937_64 rng(2);
  const auto tms = two_cuts(10);
  const auto fam = random_family(2, tms, rng);
  const cd ab = gamma_inner(fam[0], fam[1], tms);
  const cd ba = gamma_inner(fam[1], fam[0], tms);
  EXPECT_LT(std::abs(ab - std::conj(ba)), 1e-13 * std::abs(ab));
}

TEST(Gram, SingleModeIsNonnegativeReal) {
  std::mt19937_64 rng(3);
  const GramMatrices g = random_gram(1, rng);
  ASSERT_EQ(g.M(), 1);
  EXPECT_EQ(g.E(0, 0).imag(), 0.0);
  EXPECT_GE(g.E(0, 0).real(), 0.0);
}

TEST(Gram, MismatchedTracesThrow) {
  std::mt19937_64 rng(4);
  const auto tms = two_cuts(10);
  const auto other = two_cuts(12);
  const auto a = random_family(2, tms, rng);
  const auto b = random_family(2, other, rng);
  EXPECT_THROW(assemble_gram(a, a, a, b, tms), TraceMismatch);
  const auto c = random_family(3, tms, rng);
  EXPECT_THROW(assemble_gram(a, a, c, a, tms), TraceMismatch);
}

TEST(Minimize, ScalarNormalEquation) {
  GramMatrices g;
  g.E = Eigen::MatrixXcd::Constant(1, 1, cd(2.0, 0.0));
  g.F = Eigen::MatrixXcd::Constant(1, 1, cd(0.6, -0.8));
  g.G = Eigen::VectorXd::Constant(1, 1.0);
  const RowMinimizer r = minimize_row(g, 0);
  EXPECT_LT(std::abs(r.a(0) - (-g.F(0, 0) / g.E(0, 0))), 1e-15);
  EXPECT_NEAR(r.J, 1.0 - std::norm(g.F(0, 0)) / 2.0, 1e-15);
}

TEST(Minimize, SingularGramThrows) {
  GramMatrices g;
  g.E = Eigen::MatrixXcd::Zero(2, 2);
  g.E(0, 0) = 1.0;
  g.F = Eigen::MatrixXcd::Ones(2, 2);
  g.G = Eigen::VectorXd::Ones(2);
  EXPECT_THROW(GramSolver{g}, NonsingularityViolation);
  EXPECT_THROW(minimize_row(g, 2), InvalidParameter);
}

TEST(MinimizeProperty, MinimizerBeatsRandomPerturbations) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 5; ++trial) {
    const GramMatrices g = random_gram(3, rng);
    const GramSolver solver(g);
    for (int l = 0; l < g.M(); ++l) {
      const RowMinimizer r = solver.minimize(l);
      EXPECT_GE(r.J, 0.0);
      EXPECT_LE(r.normal_residual, 1e-10);
      EXPECT_NEAR(r.J, functional_value(g, l, r.a), 1e-10 * std::max(1.0, g.G(l)));
      for (int k = 0; k < 100; ++k) {
        Eigen::RowVectorXcd d(g.M());
        for (auto &x : d) x = cd(n(rng), n(rng));
        d *= std::pow(10.0, -4.0 + 4.0 * (k % 5) / 4.0);
        EXPECT_GE(functional_value(g, l, r.a + d), r.J);
      }
    }
  }
}

TEST(Fit, ExactExponentialIsRecovered) {
  const std::vector<double> R{2, 3, 4, 5, 6, 8};
  std::vector<double> err;
  for (double r : R) err.push_back(std::exp(-1.2 * r));
  const auto fit = fit_exponential_rate(R, err);
  EXPECT_FALSE(fit.floor_limited);
  EXPECT_NEAR(fit.rate, 1.2, 1e-6);
  EXPECT_EQ(fit.points, 6);
}

TEST(Fit, AllBelowFloorIsFloorLimited) {
  const std::vector<double> R{2, 3, 4, 5};
  const std::vector<double> err{1e-13, 5e-14, 2e-15, 0.0};
  EXPECT_TRUE(fit_exponential_rate(R, err).floor_limited);
}

TEST(Fit, TooFewPointsThrows) {
  const std::vector<double> R{2, 3, 4, 5};
  const std::vector<double> err{1e-3, 1e-4, 1e-14, 1e-15};
  EXPECT_THROW(fit_exponential_rate(R, err), FitError);
}

TEST(Convergence, NeedsFourAscendingRadii) {
  std::vector<ScatteringResult> rs(3);
  EXPECT_THROW(convergence_study(rs), FitError);
  rs.resize(4);
  for (int i = 0; i < 4; ++i) rs[i].R = 4.0 - i;
  EXPECT_THROW(convergence_study(rs), FitError);
}

TEST(Pipeline, StraightStripTransmitsWithoutReflection) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto res = compute_scattering(scene, strip_params(2.5, 6.0, M_PI / 20));
  ASSERT_EQ(res.modes.M(), 2);
  const Eigen::MatrixXcd S0 = straight_guide_S(M_PI, 2.5, 2.0, 2.0);
  EXPECT_LT(std::abs(res.S(0, 0)), 5e-3);
  EXPECT_LT(std::abs(res.S(1, 1)), 5e-3);
  EXPECT_NEAR(std::abs(res.S(0, 1)), 1.0, 5e-3);
  EXPECT_LT(std::abs(std::arg(res.S(0, 1) / S0(0, 1))), 1e-2);
  EXPECT_LT(res.max_solve_residual, 1e-10);
  for (int l = 0; l < 2; ++l) EXPECT_LE(res.normal_residuals(l), 1e-10);
}

TEST(Pipeline, StraightStripDoesNotCoupleModes) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto res = compute_scattering(scene, strip_params(5.0, 5.0, M_PI / 20));
  ASSERT_EQ(res.modes.M(), 4);
  const Eigen::MatrixXcd S0 = straight_guide_S(M_PI, 5.0, 2.0, 2.0);
  EXPECT_LT((res.S - S0).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(Pipeline, MinimizerBeatsTheOracleRow) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto res = compute_scattering(scene, strip_params(2.5, 4.0, M_PI / 12));
  const Eigen::MatrixXcd S0 = straight_guide_S(M_PI, 2.5, 2.0, 2.0);
  for (int l = 0; l < 2; ++l) EXPECT_LE(res.J(l), functional_value(res.gram, l, S0.row(l)));

  StepJunction j;
  j.d_left = M_PI;
  j.d_right = 2 * M_PI;
  j.mu = 2.5;
  j.left_length = 2.0;
  j.right_length = 2.0;
  const auto oracle = step_junction_S(j);
  const auto step = compute_scattering(step_scene(M_PI, 2 * M_PI, StepAlignment::Centered, 2.0, 2.0),
                                       strip_params(2.5, 4.0, M_PI / 12));
  for (int l = 0; l < step.modes.M(); ++l)
    EXPECT_LE(step.J(l), functional_value(step.gram, l, oracle.S.row(l)));
}

TEST(PipelineProperty, ReciprocityAndSymmetryOnCenteredObstacle) {
  // The scene is invariant under the half turn, which swaps the ends and
  // keeps the orientation of y.
  const auto scene = obstacle_scene(M_PI, 4.0, -0.5, 0.5, M_PI / 2 - 0.5, M_PI / 2 + 0.5);
  for (double mu : {2.5, 5.0}) {
    const auto res = compute_scattering(scene, strip_params(mu, 4.0, M_PI / 12));
    const int half = res.modes.M() / 2;
    const double tol = std::max(res.unitarity_defect, 1e-10);
    EXPECT_LT((res.S - res.S.transpose()).norm(), tol) << "mu " << mu;
    for (int a = 0; a < half; ++a)
      for (int b = 0; b < half; ++b) {
        EXPECT_LT(std::abs(res.S(a, b) - res.S(half + a, half + b)), tol);
        EXPECT_LT(std::abs(res.S(a, half + b) - res.S(half + a, b)), tol);
      }
  }
}

TEST(PipelineProperty, UnitarityImprovesAlongRefinementLadder) {
  for (const auto &scene : {obstacle_scene(M_PI, 4.0, -0.5, 0.5, M_PI / 2 - 0.5, M_PI / 2 + 0.5),
                            plate_scene(M_PI, 4.0, 2.0)}) {
    double prev = 0.0;
    double h = M_PI / 6, R = 3.0;
    for (int step = 0; step < 3; ++step, h /= 2, R += 1.5) {
      ScatteringParams p = strip_params(2.5, R, h);
      p.element_order = 1;
      const auto res = compute_scattering(scene, p);
      EXPECT_LT(std::abs(res.minimizer_norms(0) - 1.0), 5e-3);
      if (prev > 0.0) EXPECT_LT(res.unitarity_defect, 1.1 * prev) << scene.name << " step " << step;
      prev = res.unitarity_defect;
    }
  }
}

TEST(PipelineProperty, PlateSweepHasNoSpikes) {
  const auto scene = plate_scene(M_PI, 4.0, 2.0);
  std::vector<ScatteringResult> rs;
  for (int i = 0; i < 14; ++i) rs.push_back(compute_scattering(scene, strip_params(1.2 + 0.2 * i, 4.0, M_PI / 10)));
  double max_slope = 0.0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_LT(rs[i].cond_E, 1e3);
    EXPECT_LT(rs[i].unitarity_defect, 5e-3);
    if (i > 0) max_slope = std::max(max_slope, (rs[i].S - rs[i - 1].S).norm() / (rs[i].mu - rs[i - 1].mu));
  }
  EXPECT_LT(max_slope, 20.0);
}
