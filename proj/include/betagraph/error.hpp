#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace betagraph {

enum class ErrorKind {
  // data / validation
  DiagonalNonzero,
  CountExceedsTrials,
  AsymmetricUndirected,
  EmptyWhitelist,
  NoWindows,
  ParseError,
  SchemaError,
  SelfLoop,
  ShapeMismatch,
  InvalidArgument,
  // numerical
  NonexistentMLE,
  NotConverged,
  BracketFailure,
  SingularFim,
  InvalidSpecialCase,
  DegenerateInput,
  FitFailed,
  TooFewValidSims,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DiagonalNonzero: return "DiagonalNonzero";
    case ErrorKind::CountExceedsTrials: return "CountExceedsTrials";
    case ErrorKind::AsymmetricUndirected: return "AsymmetricUndirected";
    case ErrorKind::EmptyWhitelist: return "EmptyWhitelist";
    case ErrorKind::NoWindows: return "NoWindows";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::SelfLoop: return "SelfLoop";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonexistentMLE: return "NonexistentMLE";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::SingularFim: return "SingularFim";
    case ErrorKind::InvalidSpecialCase: return "InvalidSpecialCase";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::FitFailed: return "FitFailed";
    case ErrorKind::TooFewValidSims: return "TooFewValidSims";
  }
  return "Unknown";
}

/// True for failures of the numerics (as opposed to malformed input).
inline bool is_numerical(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonexistentMLE:
    case ErrorKind::NotConverged:
    case ErrorKind::BracketFailure:
    case ErrorKind::SingularFim:
    case ErrorKind::InvalidSpecialCase:
    case ErrorKind::DegenerateInput:
    case ErrorKind::FitFailed:
    case ErrorKind::TooFewValidSims:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace betagraph
