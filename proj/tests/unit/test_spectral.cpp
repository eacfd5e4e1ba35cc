#include "wavescat/errors.hpp"
#include "wavescat/helmholtz.hpp"
#include "wavescat/scene_io.hpp"
#include "wavescat/spectral.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>

using namespace wavescat;
using cd = std::complex<double>;

namespace {

constexpr cd I{0.0, 1.0};

PropagatingMode strip_mode(double width, int k, double mu) {
  PropagatingMode m;
  m.k = k;
  m.width = width;
  m.nu = std::pow(k * M_PI / width, 2);
  m.lambda = std::sqrt(mu - m.nu);
  return m;
}

} // namespace

TEST(Tridiagonal, CountsAndEigenvalues) {
  // 2 on the diagonal, -1 off it: eigenvalues 2 - 2 cos(k pi / (n + 1)).
  const int n = 12;
  SymmetricTridiagonal T(std::vector<double>(n, 2.0), std::vector<double>(n - 1, -1.0));
  const auto ev = T.smallest_eigenvalues(5);
  for (int k = 1; k <= 5; ++k) EXPECT_NEAR(ev[k - 1], 2.0 - 2.0 * std::cos(k * M_PI / (n + 1)), 1e-13);
  EXPECT_EQ(T.count_below(ev[2] + 1e-9), 3u);
  const Eigen::VectorXd v = T.eigenvector(ev[0]);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(Tridiagonal, SizeMismatchThrows) {
  EXPECT_THROW(SymmetricTridiagonal({1.0, 2.0}, {1.0, 2.0}), InvalidParameter);
}

TEST(TransverseEigs, StripOfWidthPi) {
  const auto b = transverse_eigs({M_PI}, 4, 1024);
  EXPECT_NEAR(b.eigenvalues[0], 1.0, 1e-5);
  EXPECT_NEAR(b.eigenvalues[2], 9.0, 1e-4);
  EXPECT_NEAR(b.analytic_eigenvalue(3), 9.0, 1e-14);
}

TEST(TransverseEigs, UnitWidth) {
  const auto b = transverse_eigs({1.0}, 3, 1024);
  EXPECT_NEAR(b.eigenvalues[1], 4.0 * M_PI * M_PI, 4.0 * M_PI * M_PI * 1e-5);
}

TEST(TransverseEigs, RejectsBadInput) {
  EXPECT_THROW(transverse_eigs({M_PI}, 0, 64), InvalidParameter);
  EXPECT_THROW(transverse_eigs({M_PI}, 2, 8), InvalidParameter);
  EXPECT_THROW(transverse_eigs({0.0}, 2, 64), InvalidParameter);
}

TEST(TransverseEigsProperty, SimpleIncreasingOrthonormal) {
  for (double d : {0.7, M_PI, 2 * M_PI}) {
    const auto b = transverse_eigs({d}, 6, 512);
    for (std::size_t k = 1; k < b.eigenvalues.size(); ++k) EXPECT_GT(b.eigenvalues[k], b.eigenvalues[k - 1]);
    const double hy = d / b.grid_n;
    for (std::size_t i = 0; i < b.samples.size(); ++i)
      for (std::size_t j = 0; j < b.samples.size(); ++j) {
        // Trapezoidal rule; endpoint samples vanish.
        const double ip = hy * b.samples[i].dot(b.samples[j]);
        EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-10) << "d = " << d << " (" << i << ", " << j << ")";
      }
  }
}

TEST(TransverseEigsProperty, SecondOrderConvergence) {
  for (double d : {1.0, M_PI}) {
    for (int k : {1, 3}) {
      double prev = 0.0;
      for (int n : {64, 128, 256}) {
        const auto b = transverse_eigs({d}, k, n);
        const double err = std::abs(b.eigenvalues[k - 1] - b.analytic_eigenvalue(k));
        if (prev > 0.0) EXPECT_NEAR(prev / err, 4.0, 0.05) << "d = " << d << " k = " << k << " n = " << n;
        prev = err;
      }
    }
  }
}

TEST(TransverseEigs, SamplesMatchClosedForm) {
  const auto b = transverse_eigs({2.0}, 3, 2048);
  for (int k = 1; k <= 3; ++k)
    for (int i = 0; i <= b.grid_n; i += 97) {
      const double y = 2.0 * i / b.grid_n;
      EXPECT_NEAR(b.samples[k - 1](i), b.phi(k, y), 1e-5);
    }
}

TEST(EnumerateModes, StripBelowSecondThreshold) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto bases = scene_bases(scene, 2.5);
  const auto modes = enumerate_modes(bases, 2.5);
  EXPECT_EQ(modes.M(), 2);
  EXPECT_EQ(modes.per_end, (std::vector<int>{1, 1}));
  for (const auto &m : modes.modes) EXPECT_NEAR(m.lambda, std::sqrt(1.5), 1e-6);
  EXPECT_NEAR(modes.gamma_estimate, std::sqrt(1.5), 1e-6);
}

TEST(EnumerateModes, StripTwoModesPerEnd) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto modes = enumerate_modes(scene_bases(scene, 5.0), 5.0);
  ASSERT_EQ(modes.M(), 4);
  EXPECT_NEAR(modes.modes[0].lambda, 2.0, 1e-6);
  EXPECT_NEAR(modes.modes[1].lambda, 1.0, 1e-5);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(modes.modes[i].index, i);
  EXPECT_EQ(modes.modes[2].end, 1);
  EXPECT_EQ(modes.modes[3].k, 2);
}

TEST(EnumerateModes, ThresholdGuard) {
  const auto bases = scene_bases(strip_scene(M_PI, 4.0), 4.0005);
  try {
    enumerate_modes(bases, 4.0005, 1e-3);
    FAIL() << "expected ThresholdProximity";
  } catch (const ThresholdProximity &e) {
    EXPECT_EQ(e.mode(), 2);
    EXPECT_NEAR(e.threshold(), 4.0, 1e-4);
  }
}

TEST(EnumerateModesProperty, CountJumpsByMultiplicityAtThresholds) {
  // Widths pi and 2 pi share the threshold 1 (k = 1 and k = 2).
  const auto scene = step_scene(M_PI, 2 * M_PI, StepAlignment::Centered, 2.0, 2.0);
  const auto bases = scene_bases(scene, 10.0);
  int prev = 0;
  double prev_mu = 0.0;
  for (double mu = 0.3; mu < 10.0; mu += 0.01) {
    bool near = false;
    int multiplicity = 0;
    for (const auto &b : bases)
      for (int k = 1; k <= 8; ++k) {
        const double nu = b.analytic_eigenvalue(k);
        if (std::abs(mu - nu) < 2e-3) near = true;
        if (nu > prev_mu && nu < mu) ++multiplicity;
      }
    if (near) continue;
    const int M = enumerate_modes(bases, mu).M();
    EXPECT_EQ(M - prev, multiplicity) << "mu = " << mu;
    prev = M;
    prev_mu = mu;
  }
}

TEST(Wave, TraceOfIncomingFirstMode) {
  const Wave u = make_wave(strip_mode(M_PI, 1, 2.0), Direction::Incoming);
  for (double R : {0.0, 1.3, 7.0})
    for (double y : {0.2, 1.0, 2.9}) {
      const cd expected = std::exp(-I * R) / std::sqrt(2.0) * std::sqrt(2.0 / M_PI) * std::sin(y);
      EXPECT_NEAR(std::abs(u.value(y, R) - expected), 0.0, 1e-15);
    }
}

TEST(Wave, IncomingHasPositiveFlux) {
  for (int k : {1, 2}) {
    const auto mode = strip_mode(M_PI, k, 5.0);
    const Wave in = make_wave(mode, Direction::Incoming);
    const Wave out = make_wave(mode, Direction::Outgoing);
    EXPECT_NEAR((I * wronskian(in, in, 3.0)).real(), 1.0, 1e-12);
    EXPECT_NEAR((I * wronskian(out, out, 3.0)).real(), -1.0, 1e-12);
  }
}

TEST(Wronskian, FirstModeValues) {
  const auto mode = strip_mode(M_PI, 1, 2.5);
  const Wave in = make_wave(mode, Direction::Incoming);
  const Wave out = make_wave(mode, Direction::Outgoing);
  EXPECT_NEAR(std::abs(wronskian(in, in, 4.0) - (-I)), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(wronskian(out, out, 4.0) - I), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(wronskian(in, out, 4.0)), 0.0, 1e-12);
}

TEST(Wronskian, CrossPairOfDifferentModesVanishes) {
  const Wave a = make_wave(strip_mode(M_PI, 1, 5.0), Direction::Incoming);
  const Wave b = make_wave(strip_mode(M_PI, 2, 5.0), Direction::Outgoing);
  EXPECT_NEAR(std::abs(wronskian(a, b, 2.0)), 0.0, 1e-14);
}

TEST(WronskianProperty, OrthogonalityOnShippedScenes) {
  for (const auto &entry : std::filesystem::directory_iterator(WAVESCAT_SCENE_DIR)) {
    if (entry.path().extension() != ".json") continue;
    const auto scene = load_scene(entry.path().string());
    for (double mu : {2.5, 3.5, 5.5}) {
      const auto modes = enumerate_modes(scene_bases(scene, mu), mu);
      for (double R : {1.0, 4.0, 8.0, 12.0})
        for (const auto &mj : modes.modes)
          for (const auto &mk : modes.modes)
            for (auto dj : {Direction::Incoming, Direction::Outgoing})
              for (auto dk : {Direction::Incoming, Direction::Outgoing}) {
                if (mj.end != mk.end) continue;
                const cd q = wronskian(make_wave(mj, dj), make_wave(mk, dk), R);
                cd expected = 0.0;
                if (mj.index == mk.index && dj == dk) expected = dj == Direction::Incoming ? -I : I;
                EXPECT_LT(std::abs(q - expected), 1e-10)
                    << scene.name << " mu " << mu << " R " << R << " modes " << mj.index << "," << mk.index;
              }
    }
  }
}

TEST(Wronskian, DiscreteTracesConvergeToTheForm) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto modes = enumerate_modes(scene_bases(scene, 2.5), 2.5);
  const Wave in_wave = make_wave(modes.modes[0], Direction::Incoming);
  const Wave out_wave = make_wave(modes.modes[0], Direction::Outgoing);
  double prev = 0.0;
  for (int n : {10, 20, 40}) {
    const Mesh mesh = generate(truncate(scene, 3.0), M_PI / n, false, 2);
    const auto tms = trace_meshes(mesh);
    const auto in = sample_traces(in_wave, tms, 3.0);
    const auto out = sample_traces(out_wave, tms, 3.0);
    const double err = std::max({std::abs(wronskian(in, in, tms) + I), std::abs(wronskian(out, out, tms) - I),
                                 std::abs(wronskian(in, out, tms))});
    if (n == 20) EXPECT_LT(err, 1e-5);
    if (prev > 0.0) EXPECT_GT(prev / err, 8.0) << "n = " << n;
    prev = err;
  }
}

TEST(Wronskian, TracesOnDifferentMeshesThrow) {
  const auto scene = strip_scene(M_PI, 4.0);
  const auto modes = enumerate_modes(scene_bases(scene, 2.5), 2.5);
  const auto tms = trace_meshes(generate(truncate(scene, 3.0), M_PI / 20, false, 2));
  const auto tms2 = trace_meshes(generate(truncate(scene, 3.0), M_PI / 10, false, 2));
  const auto in = sample_traces(make_wave(modes.modes[0], Direction::Incoming), tms, 3.0);
  const auto out = sample_traces(make_wave(modes.modes[0], Direction::Outgoing), tms, 3.0);
  EXPECT_THROW(wronskian(in, out, tms2), TraceMismatch);
}
