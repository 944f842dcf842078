// Copyright (c) 2026 the dissipgap authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dissipgap {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every exception thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class NotHermitianError : public Error {
 public:
  using Error::Error;
};

/// A matrix failed positive-semidefinite certification; carries the
/// offending eigenvalue.
class NotPsdError : public Error {
 public:
  NotPsdError(const std::string& what, double eigenvalue)
      : Error(what), offending_eigenvalue(eigenvalue) {}
  double offending_eigenvalue;
};

class NotDissipativeError : public Error {
 public:
  NotDissipativeError(const std::string& what, double eigenvalue)
      : Error(what), offending_eigenvalue(eigenvalue) {}
  double offending_eigenvalue;
};

class NotAccretiveError : public Error {
 public:
  NotAccretiveError(const std::string& what, double eigenvalue)
      : Error(what), offending_eigenvalue(eigenvalue) {}
  double offending_eigenvalue;
};

class NotContractionError : public Error {
 public:
  NotContractionError(const std::string& what, double norm)
      : Error(what), norm(norm) {}
  double norm;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A proved bound was observed to fail numerically. This always signals an
/// implementation bug, never an expected outcome; the failure carries the
/// location of the violation.
class BoundViolationError : public Error {
 public:
  BoundViolationError(const std::string& what, double at, double observed,
                      double allowed)
      : Error(what), at(at), observed(observed), allowed(allowed) {}
  double at;         // t (continuous) or n (discrete) of the violation
  double observed;   // measured quantity
  double allowed;    // bound it should have satisfied
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Configuration / input validation failure (scenario runner).
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
}

inline void require_same_shape(const Matrix& a, const Matrix& b,
                               const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(who) + ": dimension mismatch " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

}  // namespace dissipgap
