#pragma once

#include <stdexcept>
#include <string>

namespace hslab {

// Base for every error raised by the library. Callers that only care about
// "something in hslab failed" catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class NonMonotoneError : public Error {
 public:
  using Error::Error;
};

class GridError : public Error {
 public:
  using Error::Error;
};

class CertificationError : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, double min_pivot)
      : Error(what), min_pivot_(min_pivot) {}
  double min_pivot() const noexcept { return min_pivot_; }

 private:
  double min_pivot_;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double witness)
      : Error(what), witness_(witness) {}
  double witness() const noexcept { return witness_; }

 private:
  double witness_;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

class SearchBudgetError : public Error {
 public:
  using Error::Error;
};

class EstimatorError : public Error {
 public:
  EstimatorError(const std::string& what, std::size_t member)
      : Error(what), member_(member) {}
  std::size_t member() const noexcept { return member_; }

 private:
  std::size_t member_;
};

}  // namespace hslab
