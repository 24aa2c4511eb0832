#pragma once

#include <stdexcept>
#include <string>

namespace mdcompat {

/// Base of every error raised by the library. Each subclass corresponds to
/// one failure category so callers (the CLI, the grid runner) can map them to
/// exit codes or per-cell failure reasons.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class IndexError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class SummaryError : public Error { using Error::Error; };
class CalibrationError : public Error { using Error::Error; };
class SingularDesignError : public Error { using Error::Error; };
class DegenerateOutcomeError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class FitError : public Error { using Error::Error; };
class DecodeError : public Error { using Error::Error; };
class DevelopmentError : public Error { using Error::Error; };
class HandlingError : public Error { using Error::Error; };
class UndefinedMetricError : public Error { using Error::Error; };
class BiasError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

}  // namespace mdcompat
