#pragma once

#include <stdexcept>
#include <string>

namespace ebitflow {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A label is not present in the layout it was used against.
class UnknownLabel : public Error {
 public:
  using Error::Error;
};

// A label list is not a permutation of the layout's labels.
class InvalidPermutation : public Error {
 public:
  using Error::Error;
};

// Matrix or vector shape does not match the layout or operand it is paired with.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// The left/right label sets do not form a disjoint nonempty cover of a layout.
class InvalidBipartition : public Error {
 public:
  using Error::Error;
};

// An operation was given an input whose shape rules it out, for example a
// closed-form entanglement formula applied outside two qubits.
class WrongShape : public Error {
 public:
  using Error::Error;
};

// A value failed its type invariants. Subclasses identify which invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotHermitian : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotPositive : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class BadTrace : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotUnitary : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Kraus operators do not form a trace-preserving channel.
class BadKraus : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A numeric parameter is outside its documented range.
class BadParam : public Error {
 public:
  using Error::Error;
};

// A file or spec string could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

// An experiment configuration is inconsistent.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A certified bound was violated beyond tolerance.
class BoundViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace ebitflow
