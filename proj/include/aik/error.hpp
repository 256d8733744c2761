#pragma once

#include <stdexcept>
#include <string>

namespace aik {

// Base of every error thrown by the library. Callers that only care about
// "something in aik failed" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file (ragged rows, non-numeric cells, bad label column).
class ParseError : public Error {
 public:
  using Error::Error;
};

// More than two distinct label values in a two-class loader.
class LabelCardinalityError : public Error {
 public:
  using Error::Error;
};

// Vectors or matrices whose dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Out-of-range numeric parameter (rate, rho, k, tau2, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Data that cannot support the requested computation: one-class splits,
// empty classes, constant targets.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Linear solve failed or its residual check did not hold.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double rcond)
      : Error(what), rcond_(rcond) {}

  double rcond() const noexcept { return rcond_; }

 private:
  double rcond_;
};

// Class information requested where none exists, e.g. a test-side centroid.
class PhaseError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (missing centroid for a label, unsupported
// solver/kernel pairing, malformed config file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Reports that cannot be laid side by side (different rate grids or modes).
class ComparisonError : public Error {
 public:
  using Error::Error;
};

}  // namespace aik
