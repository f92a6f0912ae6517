#pragma once

#include <stdexcept>
#include <string>

namespace releta {

// Numeric values double as CLI exit codes and C API status codes.
enum class ErrorKind {
  kRuntime = 1,     // I/O, diverged training, mismatched comparisons
  kUsage = 2,
  kParse = 3,
  kValidation = 4,  // a type invariant does not hold
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace releta
