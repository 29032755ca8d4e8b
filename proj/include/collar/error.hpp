#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace collar {

enum class ErrorKind {
  SingularLocus,
  NodeBudgetExceeded,
  SingularAtAxis,
  RegressionIllConditioned,
  NotBoundaryPreserving,
  NotFiberLinear,
  NotBoundaryFlat,
  GraphMismatch,
  SignChange,
  CollarExceeded,
  CalibrationExhausted,
  QuadratureBudget,
  DecayClassUnsupported,
  DerivativeUnavailable,
  ParseError,
  ValidationError,
  UnknownScenario,
  Io,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::SingularLocus: return "SingularLocus";
    case ErrorKind::NodeBudgetExceeded: return "NodeBudgetExceeded";
    case ErrorKind::SingularAtAxis: return "SingularAtAxis";
    case ErrorKind::RegressionIllConditioned: return "RegressionIllConditioned";
    case ErrorKind::NotBoundaryPreserving: return "NotBoundaryPreserving";
    case ErrorKind::NotFiberLinear: return "NotFiberLinear";
    case ErrorKind::NotBoundaryFlat: return "NotBoundaryFlat";
    case ErrorKind::GraphMismatch: return "GraphMismatch";
    case ErrorKind::SignChange: return "SignChange";
    case ErrorKind::CollarExceeded: return "CollarExceeded";
    case ErrorKind::CalibrationExhausted: return "CalibrationExhausted";
    case ErrorKind::QuadratureBudget: return "QuadratureBudget";
    case ErrorKind::DecayClassUnsupported: return "DecayClassUnsupported";
    case ErrorKind::DerivativeUnavailable: return "DerivativeUnavailable";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::UnknownScenario: return "UnknownScenario";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Errors from malformed input or the environment, as opposed to a
  // mathematical check that simply did not hold.
  bool infrastructure() const noexcept {
    return kind_ == ErrorKind::ParseError || kind_ == ErrorKind::ValidationError ||
           kind_ == ErrorKind::UnknownScenario || kind_ == ErrorKind::Io;
  }

 private:
  ErrorKind kind_;
};

}  // namespace collar
