#pragma once

#include <stdexcept>
#include <string>

namespace framebits {

enum class ErrorKind {
  // media_io
  FileNotFound,
  TruncatedFile,
  InvalidGeometry,
  IndexOutOfRange,
  IoError,
  // complexity
  GridMismatch,
  // gop
  InvalidConfig,
  // dataset
  ParseError,
  SchemaError,
  InvariantViolation,
  MissingFeature,
  Misalignment,
  TooFewSequences,
  // models
  DegenerateInput,
  FeatureMismatch,
  VersionMismatch,
  CorruptFile,
  EmptyValidation,
  // ratecontrol
  NonPositiveBits,
  EmptyGop,
  NonPositivePrediction,
  ReplayMiss,
  // metrics
  ZeroTruth,
  LengthMismatch,
  ZeroVariance,
  NoOverlap,
  DegenerateCurve,
  ZeroTarget,
  // cli / config
  UsageError,
};

const char* error_kind_name(ErrorKind k);

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& msg)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + msg), m_kind(kind) {}

  ErrorKind kind() const { return m_kind; }

  // Process exit code class: 2 usage, 3 malformed/inconsistent input data, 1 anything else.
  int exit_code() const {
    switch (m_kind) {
      case ErrorKind::UsageError:
      case ErrorKind::InvalidConfig:
        return 2;
      case ErrorKind::ParseError:
      case ErrorKind::SchemaError:
      case ErrorKind::InvariantViolation:
      case ErrorKind::MissingFeature:
      case ErrorKind::Misalignment:
        return 3;
      default:
        return 1;
    }
  }

private:
  ErrorKind m_kind;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

}  // namespace framebits
