#pragma once

#include <stdexcept>
#include <string>

namespace hypsep {

/// Bad input data: malformed records, inconsistent files, degenerate matrices.
/// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong invocation or configuration. The CLI maps these to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class MalformedRecord : public DataError {
 public:
  MalformedRecord(const std::string& what, std::size_t line = 0)
      : DataError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DuplicateTweetId : public DataError {
 public:
  using DataError::DataError;
};
class UnknownLabel : public DataError {
 public:
  using DataError::DataError;
};
class DuplicateUser : public DataError {
 public:
  using DataError::DataError;
};
class MissingProfile : public DataError {
 public:
  using DataError::DataError;
};
class RowMismatch : public DataError {
 public:
  using DataError::DataError;
};
class NumericDomain : public DataError {
 public:
  using DataError::DataError;
};
class DegenerateData : public DataError {
 public:
  using DataError::DataError;
};
class InsufficientMinority : public DataError {
 public:
  using DataError::DataError;
};
class UnknownFeatureSet : public DataError {
 public:
  using DataError::DataError;
};
class EmptyClass : public DataError {
 public:
  using DataError::DataError;
};
class ZeroVector : public DataError {
 public:
  using DataError::DataError;
};
class InvalidConfig : public UsageError {
 public:
  using UsageError::UsageError;
};

}  // namespace hypsep
