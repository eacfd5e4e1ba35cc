#pragma once

#include <stdexcept>
#include <string>

namespace wavescat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Unmeshable or inconsistent scene geometry.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Truncation radius R <= 0.
class InvalidRadius : public Error {
public:
  using Error::Error;
};

/// A parameter outside its admissible range (zeta = 0, h too large, ...).
class InvalidParameter : public Error {
public:
  using Error::Error;
};

/// The spectral parameter lies within the guard distance of a threshold.
class ThresholdProximity : public Error {
public:
  ThresholdProximity(const std::string &what, double threshold, int end,
                     int mode)
      : Error(what), threshold_(threshold), end_(end), mode_(mode) {}

  double threshold() const { return threshold_; }
  int end() const { return end_; }
  int mode() const { return mode_; }

private:
  double threshold_;
  int end_;
  int mode_;
};

/// Sparse factorization of the truncated impedance problem failed.
class SingularSystem : public Error {
public:
  using Error::Error;
};

/// The Gram matrix of outgoing residues is numerically singular.
class NonsingularityViolation : public Error {
public:
  using Error::Error;
};

/// Trace vectors that do not live on the same boundary discretization.
class TraceMismatch : public Error {
public:
  using Error::Error;
};

/// Exponential-rate fit has too few usable points.
class FitError : public Error {
public:
  using Error::Error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A value that must be nonnegative came out negative beyond roundoff.
class NumericalFailure : public Error {
public:
  using Error::Error;
};

} // namespace wavescat
