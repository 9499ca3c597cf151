#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace invot {

enum class ErrorCode {
  InvalidArgument,
  NegativeEntry,
  MassMismatch,
  MarginalMismatch,
  SupportViolation,
  ZeroReference,
  NotConverged,
  NumericalOverflow,
  NonSquare,
  BadBounds,
  RankDeficient,
  ZeroObservation,
  DimMismatch,
  SingularCovariance,
  HighVariance,
  Diverged,
  IoError,
  ParseError,
  ShapeHeaderMismatch,
};

const char* to_string(ErrorCode code);

/// Base exception for every failure raised by the library. `row()`/`col()`
/// locate the offending entry when the failure is tied to one (else -1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, long row = -1, long col = -1)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        row_(row),
        col_(col) {}

  ErrorCode code() const noexcept { return code_; }
  long row() const noexcept { return row_; }
  long col() const noexcept { return col_; }

 private:
  ErrorCode code_;
  long row_;
  long col_;
};

/// Raised when an iterative solver exhausts its iteration budget. The last
/// iterate is carried along so callers can still inspect or use it.
template <class Result>
class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, Result best)
      : Error(ErrorCode::NotConverged, what), best_(std::move(best)) {}

  const Result& best() const noexcept { return best_; }

 private:
  Result best_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line, long column)
      : Error(ErrorCode::ParseError,
              what + " (line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ")",
              line, column) {}

  long line() const noexcept { return row(); }
  long column() const noexcept { return col(); }
};

}  // namespace invot
