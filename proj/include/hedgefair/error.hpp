#pragma once

#include <stdexcept>
#include <string>

namespace hedgefair {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An instance does not conform to the schema a function was built for.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// The penalty solver could not bring a constraint set within tolerance.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::string worst_subset, double worst_violation)
      : Error(what), worst_subset_(std::move(worst_subset)), worst_violation_(worst_violation) {}

  const std::string& worst_subset() const { return worst_subset_; }
  double worst_violation() const { return worst_violation_; }

 private:
  std::string worst_subset_;
  double worst_violation_;
};

/// Replay produced a step record that differs from the stored report.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t step) : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

}  // namespace hedgefair
