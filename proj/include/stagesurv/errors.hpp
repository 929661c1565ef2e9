#pragma once

#include <stdexcept>
#include <string>

namespace stagesurv {

// Base for every error the library raises on bad input or degenerate models.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A RateParams field (or a derived row) violates its range constraint.
class ParameterError : public Error {
 public:
  ParameterError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// A matrix that is not a valid progression matrix.
class MatrixError : public Error {
 public:
  using Error::Error;
};

// Some probability mass can never leave a transient state.
class DegenerateError : public Error {
 public:
  DegenerateError(std::string state, const std::string& what)
      : Error(state + ": " + what), state_(std::move(state)) {}

  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

class MixtureError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; the message carries the row/column location.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stagesurv
