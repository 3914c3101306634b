#pragma once

#include <stdexcept>
#include <string>

namespace evofam {

/// Failure categories. The command-line front end maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,
  numerical,
  non_convergence,
  hypothesis,
  config,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_argument(const std::string& what) {
  return Error(ErrorKind::invalid_argument, what);
}

inline Error numerical_error(const std::string& what) {
  return Error(ErrorKind::numerical, what);
}

/// Raised when a fixed-point iteration exhausts its budget.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, int iterations, double last_defect)
      : Error(ErrorKind::non_convergence, what), iterations_(iterations), last_defect_(last_defect) {}

  int iterations() const noexcept { return iterations_; }
  double last_defect() const noexcept { return last_defect_; }

 private:
  int iterations_;
  double last_defect_;
};

}  // namespace evofam
