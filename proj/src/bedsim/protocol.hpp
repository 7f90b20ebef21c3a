#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "bedsim/morphology.hpp"
#include "bedsim/plant.hpp"

namespace bedsim::protocol {

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;
inline constexpr std::uint16_t kDefaultStreamPort = 7470;
inline constexpr std::uint16_t kDefaultWebSocketPort = 7471;

// Client -> server.
struct Hello {
  int v = kVersion;
  bool operator==(const Hello&) const = default;
};
struct GetStatus {
  bool operator==(const GetStatus&) const = default;
};
struct Activate {
  FirmnessMode mode = FirmnessMode::Standard;
  bool operator==(const Activate&) const = default;
};
struct Deactivate {
  bool operator==(const Deactivate&) const = default;
};
struct SetMode {
  FirmnessMode mode = FirmnessMode::Standard;
  bool operator==(const SetMode&) const = default;
};
struct LoadBody {
  std::variant<std::string, BodyProfile> body;  // built-in name or inline profile
  bool operator==(const LoadBody&) const = default;
};
struct Subscribe {
  double rate_hz = 5.0;
  bool operator==(const Subscribe&) const = default;
};
struct Unsubscribe {
  bool operator==(const Unsubscribe&) const = default;
};

// Server -> client.
struct Status {
  double weight_kgf = 0.0;
  FirmnessMode mode = FirmnessMode::Standard;
  bool active = false;
  bool converged = false;
  std::int64_t tick = 0;
  std::int64_t excluded_count = 0;
  double target_kgf = 0.0;
  bool operator==(const Status&) const = default;
};
struct Snapshot {
  std::int64_t tick = 0;
  Grid<double> pressures;   // kgf
  Grid<double> extensions;  // mm
  BinaryMap support;
  bool operator==(const Snapshot&) const = default;
};
struct Ack {
  std::string request_type;
  bool operator==(const Ack&) const = default;
};
struct ErrorReply {
  std::string code;
  std::string message;
  std::optional<double> weight_kgf;
  bool operator==(const ErrorReply&) const = default;
};

using Message = std::variant<Hello, GetStatus, Activate, Deactivate, SetMode, LoadBody, Subscribe,
                             Unsubscribe, Status, Snapshot, Ack, ErrorReply>;

/// Wire name of the message's "type" field.
std::string_view type_name(const Message& msg);

/// Canonical frame: fixed field order, newline-terminated. Weights, targets and
/// pressures carry 4 decimals, extensions 2, rates 3.
std::string encode(const Message& msg);

/// Rounds floating fields to the encoding's precision.
Message canonicalize(const Message& msg);

/// Decode failure; code is one of bad_frame, unknown_type, bad_version,
/// frame_too_large, bad_request.
class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }
  ErrorReply reply() const { return {code_, what(), std::nullopt}; }

 private:
  std::string code_;
};

/// Accepts a frame with or without its trailing newline. Unknown fields are ignored.
Message decode(std::string_view frame);

}  // namespace bedsim::protocol
