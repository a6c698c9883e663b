// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace phasecal {

/// Broad failure category. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kUsage,      ///< invalid argument, configuration or precondition
  kData,       ///< malformed or missing input data, I/O failure
  kNumerical,  ///< numerically degenerate result
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

/// UE location coincides with an antenna (some d_n == 0).
class CoincidentLocation : public Error {
 public:
  explicit CoincidentLocation(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class PreconditionViolation : public Error {
 public:
  explicit PreconditionViolation(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class SingularMatrix : public Error {
 public:
  explicit SingularMatrix(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

class NumericalFailure : public Error {
 public:
  explicit NumericalFailure(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// CSIB container violations: bad magic, version, truncation, overflow.
class FormatError : public DataError {
 public:
  explicit FormatError(const std::string& what) : DataError(what) {}
};

}  // namespace phasecal
