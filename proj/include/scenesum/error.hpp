#pragma once

#include <stdexcept>
#include <string>

namespace scenesum {

/// Failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_argument,  // bad input values or shapes
  io,                // file missing, unreadable, unwritable, malformed
  missing_capability // e.g. a pose-dependent step on a pose-free dataset
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorKind::invalid_argument, msg);
}

}  // namespace scenesum
