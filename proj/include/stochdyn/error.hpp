#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stochdyn {

enum class ErrorCode {
  parse,
  insufficient_data,
  duplicate_time,
  data,
  parameter,
  domain,
  divergence,
  evaluation,
  singularity,
  identifiability,
  extrapolation,
  fit,
  size,
  undefined_index,
  ensemble,
  io,
  usage,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code; the CLI
// maps usage errors to exit status 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse: return "parse_error";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::duplicate_time: return "duplicate_time";
    case ErrorCode::data: return "data_error";
    case ErrorCode::parameter: return "parameter_error";
    case ErrorCode::domain: return "domain_error";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::evaluation: return "evaluation_error";
    case ErrorCode::singularity: return "singularity";
    case ErrorCode::identifiability: return "identifiability";
    case ErrorCode::extrapolation: return "extrapolation";
    case ErrorCode::fit: return "fit_error";
    case ErrorCode::size: return "size_error";
    case ErrorCode::undefined_index: return "undefined_index";
    case ErrorCode::ensemble: return "ensemble_error";
    case ErrorCode::io: return "io_error";
    case ErrorCode::usage: return "usage_error";
  }
  return "unknown";
}

}  // namespace stochdyn
