#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace geig {

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Cholesky or CG breakdown on a matrix that was required to be SPD.
class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Every direction of a Rayleigh-Ritz trial basis was dropped as numerically null.
class DegenerateBasis : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public std::runtime_error {
 public:
  LoadError(const std::string& path, std::size_t line, const std::string& message)
      : std::runtime_error(path + ": line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// An iterative method hit its iteration cap; carries the per-iteration residuals.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& message, std::vector<double> residual_history)
      : std::runtime_error(message), history_(std::move(residual_history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace geig
