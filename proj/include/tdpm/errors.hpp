// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_ERRORS_HPP
#define TDPM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tdpm {

/// Broad failure categories. The C API maps these one-to-one onto status codes.
enum class ErrorKind {
  invalid_argument,
  validation,  // model or config violates an invariant
  data,        // malformed or incompatible input data
  io,
  numeric,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::invalid_argument, w) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& w) : Error(ErrorKind::validation, w) {}
};

struct DataError : Error {
  explicit DataError(const std::string& w) : Error(ErrorKind::data, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};

/// Raised when every class assigns zero likelihood to a sequence.
struct ZeroLikelihood : DataError {
  explicit ZeroLikelihood(const std::string& w) : DataError(w) {}
};

/// Raised by fit_weibull when the weighted profile equation has no root.
struct DegenerateData : NumericError {
  explicit DegenerateData(const std::string& w) : NumericError(w) {}
};

}  // namespace tdpm

#endif  // TDPM_ERRORS_HPP
