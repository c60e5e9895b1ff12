#pragma once

#include <stdexcept>
#include <string>

namespace ineq {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, schemas or configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

// Value outside the mathematical domain of an operation (non-positive income, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Too few usable observations for the requested estimator.
class InsufficientSampleError : public Error {
 public:
  using Error::Error;
};

// Zero spread, constant populations and similar degenerate inputs.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

// Invalid or unusable sampling design (singleton PSU, degenerate stratum).
class DesignError : public Error {
 public:
  using Error::Error;
};

// Numerical estimation failed (root solve, optimizer, non-finite functional).
class EstimationFailure : public Error {
 public:
  using Error::Error;
};

class RankConsistencyError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, double worst_gap)
      : Error(what), worst_gap_(worst_gap) {}

  double worst_gap() const noexcept { return worst_gap_; }

 private:
  double worst_gap_;
};

// Run-quality failures: too many failed replicates in a bootstrap or a simulation.
class RunQualityError : public Error {
 public:
  using Error::Error;
};

}  // namespace ineq
