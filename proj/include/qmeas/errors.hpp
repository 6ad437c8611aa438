#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmeas {

// Error classes shared by every module. The C API maps each one to a status code.
enum class ErrorKind {
  Domain,        // argument outside an operation's contract
  Resource,      // size caps (atom counts, LP size)
  Convergence,   // iterative solver did not converge
  GridTooSmall,  // solution touches the grid boundary
  Accuracy,      // discretisation too coarse for the requested check
  Internal,      // broken invariant inside the library
  Io,            // file could not be read or written
  Schema,        // malformed input file
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace qmeas
