#include "framebits/errors.hpp"

namespace framebits {

const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::FileNotFound: return "FileNotFound";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
    case ErrorKind::MissingFeature: return "MissingFeature";
    case ErrorKind::Misalignment: return "Misalignment";
    case ErrorKind::TooFewSequences: return "TooFewSequences";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::FeatureMismatch: return "FeatureMismatch";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::EmptyValidation: return "EmptyValidation";
    case ErrorKind::NonPositiveBits: return "NonPositiveBits";
    case ErrorKind::EmptyGop: return "EmptyGop";
    case ErrorKind::NonPositivePrediction: return "NonPositivePrediction";
    case ErrorKind::ReplayMiss: return "ReplayMiss";
    case ErrorKind::ZeroTruth: return "ZeroTruth";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::DegenerateCurve: return "DegenerateCurve";
    case ErrorKind::ZeroTarget: return "ZeroTarget";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace framebits
