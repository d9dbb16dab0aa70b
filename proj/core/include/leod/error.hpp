// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace leod {

/// Machine-readable failure categories. The CLI reports these verbatim in its
/// error JSON, so the spelling returned by `to_string` is part of the interface.
enum class Errc {
  invalid_input,
  invalid_config,
  invalid_thresholds,
  empty_result,
  undefined_metric,
  io_error,
  parse_error,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "invalid-input";
    case Errc::invalid_config: return "invalid-config";
    case Errc::invalid_thresholds: return "invalid-thresholds";
    case Errc::empty_result: return "empty-result";
    case Errc::undefined_metric: return "undefined-metric";
    case Errc::io_error: return "io-error";
    case Errc::parse_error: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace leod
