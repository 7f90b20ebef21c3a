#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bedsim {

enum class ErrorCode {
  Config,        // invalid configuration value
  Validation,    // malformed or inconsistent input document
  NoContact,     // empty support set
  NoBody,        // profile has no body cells
  GateRejected,  // measured weight outside the activation gate
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<double> weight_kgf = std::nullopt)
      : std::runtime_error(message), code_(code), weight_kgf_(weight_kgf) {}

  ErrorCode code() const noexcept { return code_; }
  // Measured weight, set for GateRejected.
  std::optional<double> weight_kgf() const noexcept { return weight_kgf_; }

 private:
  ErrorCode code_;
  std::optional<double> weight_kgf_;
};

}  // namespace bedsim
