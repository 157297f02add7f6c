#pragma once

#include <stdexcept>
#include <string>

namespace rpr {

// Error categories shared by every module. Callers that need to map failures
// onto exit codes (tools/) switch on the dynamic type.

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tensor shapes that do not line up.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fixed-capacity bound (for example the coverage padding width) exceeded.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Operation invoked in a state that does not allow it.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Record contents disagree with the plan that supposedly produced them.
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input does not follow the expected layout (missing field, wrong width).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file could not be opened, read, or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss or gradient became NaN or infinite.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text that is not valid JSON.
class ParseError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Well-formed JSON whose fields violate the schema.
class SchemaError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Checkpoint written by an incompatible format version.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Truncated or otherwise damaged file.
class CorruptFileError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace rpr
