#pragma once

#include <stdexcept>
#include <string>

namespace hypermass {

enum class ErrorKind {
  degenerate_metric,
  range,
  boundary,
  unsupported,
  hypothesis,
  solver,
  construction,
  contract,
  io,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Solver failures carry the last residual so callers can report it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual)
      : Error(ErrorKind::solver, what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace hypermass
