#pragma once

#include <stdexcept>
#include <string>

namespace ligas {

// Error taxonomy. The CLI maps these onto exit codes:
// UsageError -> 1, DataError (and subclasses) -> 2, NumericError -> 3.

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor shapes.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

// Malformed file contents (bad magic, truncation, header mismatch).
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Bracketed-tree syntax error; offset is a byte position in the input.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : DataError(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ligas
