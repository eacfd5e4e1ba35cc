#pragma once

// Reference scattering matrices in the wave basis of the spectral module
// (q-normalized, lexicographic in (end, k), local end frames as built by the
// scene constructors): the uniform strip in closed form and the width step by
// mode matching.

#include "wavescat/geometry.hpp"
#include "wavescat/spectral.hpp"

#include <Eigen/Core>

namespace wavescat {

/// Strip of width d whose end 1 and end 2 attach points lie at distances L1
/// and L2 from a common cross-section, as in strip_scene (L1 = L2 =
/// length / 2). The guide does not reflect and does not couple modes:
///   S_{(1,k),(2,k)} = S_{(2,k),(1,k)} = (-1)^(k+1) exp(i lambda_k (L1 + L2)).
/// The sign comes from the opposite orientation of y on the two ends.
/// Throws ThresholdProximity near a threshold, InvalidParameter below nu_1.
Eigen::MatrixXcd straight_guide_S(double d, double mu, double L1, double L2,
                                  double guard = kDefaultThresholdGuard);

struct StepJunction {
  double d_left = 0.0;
  double d_right = 0.0;
  StepAlignment alignment = StepAlignment::Centered;
  double mu = 0.0;
  /// Distances from the step to the attach points of end 1 and end 2.
  double left_length = 0.0;
  double right_length = 0.0;
  /// Left-side modes of the first truncation; 0 picks max(3 M, M + 8).
  int n_trunc = 0;
  double guard = kDefaultThresholdGuard;
  /// Largest left truncation tried while doubling.
  int max_trunc = 2048;
};

struct StepJunctionResult {
  Eigen::MatrixXcd S;
  bool converged = false;
  int n_left = 0;      ///< left modes of the returned solution
  int n_right = 0;     ///< right modes, about n_left * d_right / d_left
  double change = 0.0; ///< ||S(N) - S(N/2)||_F at the returned N
  int M_left = 0;
  int M_right = 0;
};

/// Mode matching at the step: fields on both sides expanded in their
/// transverse bases, value continuity projected on the wide side,
/// normal-derivative continuity projected on the narrow side. The truncation
/// is doubled until S moves by less than 1e-6.
/// Requires d_left <= d_right; throws InvalidParameter otherwise.
StepJunctionResult step_junction_S(const StepJunction &j);

/// Mode matching at a single truncation (n_left, n_right).
Eigen::MatrixXcd step_junction_S(const StepJunction &j, int n_left, int n_right);

} // namespace wavescat
