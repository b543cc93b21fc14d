#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <json.hpp>

namespace fshc {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  InvalidDomain,
  RatioConditionViolated,
  OverlapDetected,
  DepthOverflow,
  ToleranceUnreachable,
  QuadratureNotConverged,
  EvalNotConverged,
  CertificateViolated,
  WrongClassification,
  RegimeMismatch,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidDomain: return "InvalidDomain";
    case ErrorCode::RatioConditionViolated: return "RatioConditionViolated";
    case ErrorCode::OverlapDetected: return "OverlapDetected";
    case ErrorCode::DepthOverflow: return "DepthOverflow";
    case ErrorCode::ToleranceUnreachable: return "ToleranceUnreachable";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::EvalNotConverged: return "EvalNotConverged";
    case ErrorCode::CertificateViolated: return "CertificateViolated";
    case ErrorCode::WrongClassification: return "WrongClassification";
    case ErrorCode::RegimeMismatch: return "RegimeMismatch";
  }
  return "Unknown";
}

/// Numerical failures that still carry a usable (but uncertified) estimate.
inline bool is_convergence_failure(ErrorCode code) {
  return code == ErrorCode::ToleranceUnreachable || code == ErrorCode::QuadratureNotConverged ||
         code == ErrorCode::EvalNotConverged;
}

/// Library exception. `details` holds machine-readable context (achieved
/// bounds, offending words, ...) and is emitted verbatim by the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

  nlohmann::json to_json() const {
    nlohmann::json j = details_;
    j["error"] = to_string(code_);
    j["message"] = what();
    return j;
  }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorCode::InvalidArgument, message);
}

}  // namespace fshc
