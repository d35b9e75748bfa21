#include "infopos/error.hpp"

namespace infopos {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::UnknownBoundary: return "UnknownBoundary";
    case Errc::UnmatchedEvent: return "UnmatchedEvent";
    case Errc::NestingViolation: return "NestingViolation";
    case Errc::MissingFile: return "MissingFile";
    case Errc::DuplicateScenario: return "DuplicateScenario";
    case Errc::EmptyPhase: return "EmptyPhase";
    case Errc::EmptySegment: return "EmptySegment";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::SingularFit: return "SingularFit";
    case Errc::DomainError: return "DomainError";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MixedKey: return "MixedKey";
    case Errc::NonNormalLabel: return "NonNormalLabel";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::DegenerateDataset: return "DegenerateDataset";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::InvalidAxis: return "InvalidAxis";
    case Errc::MissingPassport: return "MissingPassport";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(Errc::ParseError, "line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace infopos
