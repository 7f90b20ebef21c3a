#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "bedsim/protocol.hpp"
#include "bedsim/runner.hpp"

namespace bedsim::service {

/// The bedding controller as seen by remote consoles: owns the closed loop and
/// answers protocol requests. Requests must be applied between ticks.
class Simulation {
 public:
  explicit Simulation(const Scenario& scenario);

  /// Applies one client request and returns its single reply (Ack, Status or
  /// ErrorReply). Subscribe/Unsubscribe bookkeeping is the caller's; they are
  /// acknowledged here.
  protocol::Message handle(const protocol::Message& request);

  /// Applies perturbations scheduled for the current tick, then advances one tick.
  TickRecord step();

  protocol::Status status() const;
  protocol::Snapshot snapshot() const;

  const LoopState& loop() const noexcept { return loop_; }
  const ControlConfig& control_config() const noexcept { return scenario_.control; }

 private:
  protocol::Message activate_with(FirmnessMode mode, std::string_view request_type);

  Scenario scenario_;
  LoopState loop_;
};

struct ServeOptions {
  std::string address = "0.0.0.0";
  std::uint16_t port = protocol::kDefaultStreamPort;        // 0 picks a free port
  std::uint16_t ws_port = protocol::kDefaultWebSocketPort;  // 0 picks a free port
  bool fast = false;            // tick unthrottled instead of every tick_dt of wall clock
  bool handle_signals = false;  // stop on SIGINT/SIGTERM
};

/// Newline-delimited frames over a byte stream plus the same frames over
/// WebSocket. One thread runs the tick loop and every session.
class Server {
 public:
  // Binds both listeners; throws Error(Io) when a port is unavailable.
  Server(const Scenario& scenario, ServeOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  std::uint16_t port() const;
  std::uint16_t ws_port() const;

  /// Blocks until stop() or a handled signal; closes every session on exit.
  void run();
  /// Safe to call from any thread.
  void stop();

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace bedsim::service
