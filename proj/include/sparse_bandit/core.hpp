#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace sparse_bandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = std::size_t;

/// Tolerance for unit-norm checks on feature rows and net points.
inline constexpr double kNormTolerance = 1e-9;

enum class ErrorKind { kValidation, kGuard, kConvergence, kParse, kNumerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// A model invariant was violated. `invariant()` names it so callers and the
/// CLI can report which one.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : Error(ErrorKind::kValidation, invariant + ": " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// The requested configuration exceeds a desk-scale limit.
class GuardError : public Error {
 public:
  explicit GuardError(const std::string& what) : Error(ErrorKind::kGuard, what) {}
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achieved)
      : Error(ErrorKind::kConvergence, what), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(ErrorKind::kParse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace sparse_bandit
