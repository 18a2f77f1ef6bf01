#pragma once

#include <stdexcept>
#include <string>

namespace memcost {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (shape, symmetry, ordering).
class ContractError : public Error {
public:
  using Error::Error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Parameters fall outside the overparameterized / proportional regime, or
/// a request is made on the wrong side of a threshold.
class RegimeError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

/// Bisection was handed a bracket without a sign change.
class BracketError : public Error {
public:
  BracketError(const std::string& what, double f_lo, double f_hi)
      : Error(what), f_lo_(f_lo), f_hi_(f_hi) {}
  double f_lo() const noexcept { return f_lo_; }
  double f_hi() const noexcept { return f_hi_; }

private:
  double f_lo_;
  double f_hi_;
};

/// An iterative routine hit its iteration cap. Carries the last bracket
/// (or the last iterate in both fields when there is no bracket).
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, double last_lo, double last_hi)
      : Error(what), last_lo_(last_lo), last_hi_(last_hi) {}
  double last_lo() const noexcept { return last_lo_; }
  double last_hi() const noexcept { return last_hi_; }

private:
  double last_lo_;
  double last_hi_;
};

/// The requested training-error level needs a multiplier beyond the solver
/// cap just below 1/lambda_plus, where the spectral integral diverges.
class NearDivergenceError : public Error {
public:
  NearDivergenceError(const std::string& what, double value_at_cap)
      : Error(what), value_at_cap_(value_at_cap) {}
  double value_at_cap() const noexcept { return value_at_cap_; }

private:
  double value_at_cap_;
};

/// Sigma - (rho/d) X^T X is not positive definite.
class FeasibilityError : public Error {
public:
  FeasibilityError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const noexcept { return min_eigenvalue_; }

private:
  double min_eigenvalue_;
};

/// X X^T is numerically singular.
class RankError : public Error {
public:
  RankError(const std::string& what, double smallest_singular_value)
      : Error(what), smallest_(smallest_singular_value) {}
  double smallest_singular_value() const noexcept { return smallest_; }

private:
  double smallest_;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

}  // namespace memcost
