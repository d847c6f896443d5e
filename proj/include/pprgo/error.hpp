#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pprgo {

/// Broad failure category, mapped one-to-one onto CLI exit codes.
enum class ErrorKind { config, data, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Malformed or inconsistent input data. Carries the offending file and the
/// element offset inside it when known.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
  DataError(const std::string& file, std::uint64_t offset, const std::string& what)
      : Error(ErrorKind::data, file + " @" + std::to_string(offset) + ": " + what),
        file_(file),
        offset_(offset) {}

  const std::string& file() const noexcept { return file_; }
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::string file_;
  std::uint64_t offset_ = 0;
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& what) : Error(ErrorKind::runtime, what) {}
};

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::data: return 3;
    case ErrorKind::runtime: return 4;
  }
  return 4;
}

}  // namespace pprgo
