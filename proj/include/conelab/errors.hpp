#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace conelab {

enum class ErrorKind {
  InvalidDimension,
  UnsupportedDimension,
  ContractViolation,
  Precondition,
  LoopThroughNode,
  DegenerateBand,
  UndefinedHelicity,
  ModeAmbiguity,
  Underflow,
  NotConverged,
  Parse,
  Validation,
  Io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid-dimension";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::ContractViolation: return "contract-violation";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::LoopThroughNode: return "loop-through-node";
    case ErrorKind::DegenerateBand: return "degenerate-band";
    case ErrorKind::UndefinedHelicity: return "undefined-helicity";
    case ErrorKind::ModeAmbiguity: return "mode-ambiguity";
    case ErrorKind::Underflow: return "underflow";
    case ErrorKind::NotConverged: return "not-converged";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` says which contract failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Input problems (files, keys, values) as opposed to numerical failures.
  bool is_input_error() const noexcept {
    return kind_ == ErrorKind::Parse || kind_ == ErrorKind::Validation ||
           kind_ == ErrorKind::Io;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace conelab
