#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace infopos {

enum class Errc {
  InvalidArgument,
  ParseError,
  ValidationError,
  UnknownBoundary,
  UnmatchedEvent,
  NestingViolation,
  MissingFile,
  DuplicateScenario,
  EmptyPhase,
  EmptySegment,
  TooFewSamples,
  SingularFit,
  DomainError,
  EmptyInput,
  MixedKey,
  NonNormalLabel,
  KeyMismatch,
  SchemaMismatch,
  EmptyDataset,
  DegenerateDataset,
  ClassTooSmall,
  InvalidAxis,
  MissingPassport,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

// All library failures surface as this exception; `code()` identifies the
// failure class so callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace infopos
