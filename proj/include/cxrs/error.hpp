#pragma once

#include <stdexcept>
#include <string>

namespace cxrs {

// Error taxonomy shared across the library. The CLI maps these onto process
// exit codes: validation/config/schema/format -> 2, training/aggregation -> 3,
// I/O -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Arguments or data values outside their legal range.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Experiment configuration rejected (unknown keys, inconsistent blocks).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Metadata table does not match the documented schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Broken or unsupported binary/file format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Operation invoked out of sequence (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Filesystem or stream failure.
class IoError : public Error {
 public:
  using Error::Error;
};

// Training diverged (non-finite loss or gradient).
class TrainingError : public Error {
 public:
  using Error::Error;
};

// Statistic undefined for the given inputs (e.g. chance agreement = 1).
class DegenerateAgreementError : public Error {
 public:
  using Error::Error;
};

// Fewer successful trials than an aggregate needs.
class AggregationError : public Error {
 public:
  using Error::Error;
};

// Stored tensors conflict with the declared network (shape clash on a name).
class IncompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace cxrs
