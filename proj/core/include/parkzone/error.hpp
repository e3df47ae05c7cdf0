#pragma once

#include <stdexcept>
#include <string>

namespace parkzone {

enum class ErrorKind {
  invalid_input,
  parse,
  invalid_config,
  io,
  invalid_model,
  empty_slice,
  degenerate_variance,
  degenerate_weights,
  fit_failure,
};

const char* to_string(ErrorKind kind) noexcept;

/// Single exception type for the library; `kind()` distinguishes bad input
/// (caller can fix the data) from numerical or computation failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  /// True for kinds caused by malformed or inconsistent input.
  bool is_input_error() const noexcept;

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace parkzone
