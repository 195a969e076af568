#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace elasto {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary container. Carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A value violates a type invariant (odd kernel, whole-valued prior, ...).
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration. `path()` is the JSON path of the offending key when known.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Numerical breakdown: factorization failure, non-finite cost.
class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace elasto
