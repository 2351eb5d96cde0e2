#pragma once

#include <stdexcept>
#include <string>

namespace evosteer {

enum class ErrorKind {
  InvalidInput,
  Dimension,
  Resolution,
  Ordering,
  Window,
  Domain,
  Configuration,
  SolverFailure,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Dimension: return "dimension mismatch";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Ordering: return "time ordering";
    case ErrorKind::Window: return "history window";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::SolverFailure: return "solver failure";
  }
  return "error";
}

}  // namespace evosteer
