#pragma once

#include <stdexcept>
#include <string>

namespace pdalign {

// Base type for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Zero vector or non-finite entry where a direction is required.
class NormalizationError : public Error {
 public:
  using Error::Error;
};

// Mismatched vector/matrix dimensions.
class DimError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated on-disk data (bad magic, short payload, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration value or unknown configuration key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Text that cannot be encoded (no tokens survive tokenization).
class EncodeError : public Error {
 public:
  using Error::Error;
};

// Referenced item missing from a table, bank, or record set.
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller violated a documented numeric precondition (e.g. non-unit rows).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or parameters during optimization.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace pdalign
