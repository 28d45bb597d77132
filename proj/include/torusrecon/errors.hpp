#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace torusrecon {

/// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorCategory {
  kInput,      // bad configuration, malformed or inconsistent input data
  kNumerical,  // factorization failure, divergence, negative variance
  kIo,         // file could not be opened or written
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  [[nodiscard]] ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kInput, what) {}
};

/// Arguments violating an operation's preconditions.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorCategory::kInput, what) {}
};

/// A file is well formed but does not carry what is required (e.g. no normals).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCategory::kInput, what) {}
};

/// Malformed file structure. Carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(ErrorCategory::kInput,
              what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  [[nodiscard]] std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

/// A record with invalid values (e.g. a zero-length normal). Carries the 1-based line.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line)
      : Error(ErrorCategory::kInput, what + " (line " + std::to_string(line) + ")"),
        line_(line) {}

  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::kNumerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

}  // namespace torusrecon
