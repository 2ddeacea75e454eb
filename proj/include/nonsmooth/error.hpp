#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nonsmooth {

enum class ErrorCode {
  UnsupportedOrder,
  UnsupportedForm,
  InvalidFunction,
  Construction,
  ToleranceFailure,
  EigenFailure,
  BasisCap,
  InsufficientData,
  SingularTorus,
  NoTorus,
  Projection,
  Tangency,
  SingularPath,
  DivergentSum,
  EnergyMismatch,
  Configuration,
  UnknownSystem,
  OutOfRange,
  ParityRequired,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedOrder: return "unsupported-order";
    case ErrorCode::UnsupportedForm: return "unsupported-form";
    case ErrorCode::InvalidFunction: return "invalid-function";
    case ErrorCode::Construction: return "construction";
    case ErrorCode::ToleranceFailure: return "tolerance-failure";
    case ErrorCode::EigenFailure: return "eigensolver-failure";
    case ErrorCode::BasisCap: return "basis-cap";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::SingularTorus: return "singular-torus";
    case ErrorCode::NoTorus: return "no-torus";
    case ErrorCode::Projection: return "projection";
    case ErrorCode::Tangency: return "tangency";
    case ErrorCode::SingularPath: return "singular-path";
    case ErrorCode::DivergentSum: return "divergent-sum";
    case ErrorCode::EnergyMismatch: return "energy-mismatch";
    case ErrorCode::Configuration: return "configuration";
    case ErrorCode::UnknownSystem: return "unknown-system";
    case ErrorCode::OutOfRange: return "parameter out of range";
    case ErrorCode::ParityRequired: return "parity-required";
  }
  return "unknown";
}

// Usage/config errors map to CLI exit code 2, everything else is numerical (1).
constexpr bool is_usage_error(ErrorCode code) {
  return code == ErrorCode::Configuration || code == ErrorCode::UnknownSystem ||
         code == ErrorCode::OutOfRange || code == ErrorCode::ParityRequired ||
         code == ErrorCode::UnsupportedForm;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nonsmooth
