#include "parkzone/error.hpp"

namespace parkzone {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::invalid_config: return "invalid config";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::invalid_model: return "invalid model";
    case ErrorKind::empty_slice: return "empty slice";
    case ErrorKind::degenerate_variance: return "degenerate variance";
    case ErrorKind::degenerate_weights: return "degenerate weights";
    case ErrorKind::fit_failure: return "fit failure";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

bool Error::is_input_error() const noexcept {
  switch (kind_) {
    case ErrorKind::invalid_input:
    case ErrorKind::parse:
    case ErrorKind::invalid_config:
    case ErrorKind::io:
      return true;
    default:
      return false;
  }
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace parkzone
