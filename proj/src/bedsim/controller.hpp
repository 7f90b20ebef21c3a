#pragma once

#include <cstdint>

#include "bedsim/core_map.hpp"
#include "bedsim/morphology.hpp"
#include "bedsim/plant.hpp"

namespace bedsim {

struct ControlConfig {
  double threshold_kgf = kDefaultThresholdKgf;
  double deadband_kgf = 0.05;
  double gate_min_kgf = 20.0;
  double gate_max_kgf = 180.0;
  double tick_dt_s = 0.05;
  int converge_ticks = 5;
  int limiter_exclude_ticks = 10;
  StructuringElement structuring_element = StructuringElement::square3();

  void validate() const;
  // A single actuator step must move a cell's force by less than the deadband
  // (spring_k * speed * tick_dt < deadband), otherwise the loop can chatter.
  void validate_stability(const PlantConfig& plant) const;
};

struct ControlState {
  bool active = false;
  FirmnessMode mode = FirmnessMode::Standard;
  BinaryMap support_set;  // frozen at activation / mode change
  BinaryMap excluded;     // subset of support_set dropped by the limiter rule
  double weight_kgf = 0.0;
  double target_kgf = 0.0;
  bool converged = false;
  std::int64_t tick_count = 0;  // ticks since activation
  int in_band_streak = 0;
  Grid<int> limiter_streak;

  bool controls(std::size_t i) const { return active && support_set[i] && !excluded[i]; }
  std::size_t controlled_count() const;
};

using CommandGrid = Grid<Direction>;

bool check_gate(double weight_kgf, const ControlConfig& cfg);

/// Three-branch deadband law on deviation = reading - target.
Direction deadband_command(double deviation_kgf, double deadband_kgf);

/// Throws GateRejected (carrying the measured weight) or NoContact.
ControlState activate(const PressureMap& readings, FirmnessMode mode, const ControlConfig& cfg);

CommandGrid compute_commands(const PressureMap& readings, const ControlState& state,
                             const ControlConfig& cfg);

ControlState set_mode(const ControlState& state, FirmnessMode mode, const PressureMap& readings,
                      const ControlConfig& cfg);

ControlState deactivate(ControlState state);

/// Physical mattress plus sensor chain.
struct Plant {
  BodyProfile profile;
  ActuatorBank bank;
  PlantConfig config;
  SensorModel sensor;
  Equilibrium equilibrium;

  // Settles the body on a bank at neutral extension.
  static Plant settle(BodyProfile profile, PlantConfig config, SensorModel sensor,
                      double travel_max_mm = 60.0);
  void resolve() { equilibrium = solve_equilibrium(profile, bank, config); }
};

/// Everything one control-loop owner advances tick by tick.
struct LoopState {
  Plant plant;
  ControlState control;
  std::uint64_t seed = 0;
  std::int64_t tick = 0;  // simulation tick, advances whether or not active

  // Sensor readings of the current equilibrium for the current tick.
  PressureMap readings() const;
};

struct TickRecord {
  std::int64_t tick = 0;
  double max_abs_deviation = 0.0;  // over controlled cells, from the tick's readings
  double total_force = 0.0;        // plant forces after the step
  bool converged = false;
  std::size_t newly_excluded = 0;
};

/// One closed-loop step: read sensors, apply the limiter rule, command,
/// move actuators, re-solve the plant.
LoopState tick(const LoopState& state, const ControlConfig& cfg, TickRecord* record = nullptr);

std::uint64_t tick_seed(std::uint64_t seed, std::int64_t tick) noexcept;

}  // namespace bedsim
