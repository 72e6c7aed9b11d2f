#pragma once

#include <stdexcept>
#include <string>

namespace lilxing {

/// Thrown when an argument lies outside the domain where a formula is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical integration did not reach its requested tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double achieved_rel_error)
      : std::runtime_error(what), achieved_(achieved_rel_error) {}

  double achieved_rel_error() const noexcept { return achieved_; }

 private:
  double achieved_;
};

}  // namespace lilxing
