#include "bedsim/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bedsim {

void ControlConfig::validate() const {
  if (!(threshold_kgf > 0.0)) throw Error(ErrorCode::Config, "threshold must be positive");
  if (!(deadband_kgf > 0.0)) throw Error(ErrorCode::Config, "deadband must be positive");
  if (!(gate_min_kgf < gate_max_kgf)) {
    throw Error(ErrorCode::Config, "weight gate min must be below max");
  }
  if (!(tick_dt_s > 0.0)) throw Error(ErrorCode::Config, "tick_dt must be positive");
  if (converge_ticks < 1) throw Error(ErrorCode::Config, "converge_ticks must be >= 1");
  if (limiter_exclude_ticks < 1) throw Error(ErrorCode::Config, "limiter_exclude_ticks must be >= 1");
}

void ControlConfig::validate_stability(const PlantConfig& plant) const {
  const double per_tick = plant.spring_k * ActuatorBank::kSpeedMmPerS * tick_dt_s;
  if (!(per_tick < deadband_kgf)) {
    throw Error(ErrorCode::Config,
                "unstable loop: spring_k * speed * tick_dt = " + std::to_string(per_tick) +
                    " kgf must be below the deadband " + std::to_string(deadband_kgf));
  }
}

std::size_t ControlState::controlled_count() const {
  if (!active) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < support_set.spec().cell_count(); ++i) n += controls(i);
  return n;
}

bool check_gate(double weight_kgf, const ControlConfig& cfg) {
  return weight_kgf >= cfg.gate_min_kgf && weight_kgf <= cfg.gate_max_kgf;
}

Direction deadband_command(double deviation_kgf, double deadband_kgf) {
  if (deviation_kgf >= deadband_kgf) return Direction::Ccw;
  if (deviation_kgf <= -deadband_kgf) return Direction::Cw;
  return Direction::Stop;
}

ControlState activate(const PressureMap& readings, FirmnessMode mode, const ControlConfig& cfg) {
  const double weight = total_weight(readings);
  if (!check_gate(weight, cfg)) {
    throw Error(ErrorCode::GateRejected,
                "measured weight " + std::to_string(weight) + " kgf outside the gate [" +
                    std::to_string(cfg.gate_min_kgf) + ", " + std::to_string(cfg.gate_max_kgf) + "]",
                weight);
  }
  const BinaryMap pressed = binarize(readings, cfg.threshold_kgf);
  ControlState s;
  s.support_set = support_region(pressed, mode, cfg.structuring_element);
  s.excluded = BinaryMap(readings.spec());
  s.limiter_streak = Grid<int>(readings.spec(), 0);
  s.active = true;
  s.mode = mode;
  s.weight_kgf = weight;
  s.target_kgf = uniform_target(weight, s.support_set.count());
  return s;
}

CommandGrid compute_commands(const PressureMap& readings, const ControlState& state,
                             const ControlConfig& cfg) {
  CommandGrid out(readings.spec(), Direction::Stop);
  if (!state.active || state.converged) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (state.controls(i)) out[i] = deadband_command(readings[i] - state.target_kgf, cfg.deadband_kgf);
  }
  return out;
}

ControlState set_mode(const ControlState& state, FirmnessMode mode, const PressureMap& readings,
                      const ControlConfig& cfg) {
  ControlState next = activate(readings, mode, cfg);
  next.tick_count = state.tick_count;
  return next;
}

ControlState deactivate(ControlState state) {
  state.active = false;
  state.converged = false;
  state.in_band_streak = 0;
  return state;
}

Plant Plant::settle(BodyProfile profile, PlantConfig config, SensorModel sensor,
                    double travel_max_mm) {
  profile.validate();
  config.validate(travel_max_mm);
  sensor.validate();
  Plant p{std::move(profile), {}, config, sensor, {}};
  p.bank = ActuatorBank::uniform(p.profile.spec(), config.neutral_extension_mm, travel_max_mm);
  p.resolve();
  return p;
}

std::uint64_t tick_seed(std::uint64_t seed, std::int64_t tick) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(tick) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

PressureMap LoopState::readings() const {
  return read_sensors(plant.equilibrium.forces, plant.sensor, tick_seed(seed, tick));
}

LoopState tick(const LoopState& in, const ControlConfig& cfg, TickRecord* record) {
  LoopState s = in;
  const PressureMap readings = s.readings();
  ControlState& ctl = s.control;
  TickRecord rec;
  rec.tick = s.tick;

  if (ctl.active && !ctl.converged) {
    // Limiter rule: a cell pinned at travel_max with nothing above it is dropped.
    const ActuatorBank& bank = s.plant.bank;
    for (std::size_t i = 0; i < readings.values().size(); ++i) {
      if (!ctl.controls(i)) continue;
      const bool pinned = bank.limiter_hit[i] && bank.extension_mm[i] >= bank.travel_max_mm &&
                          readings[i] < cfg.threshold_kgf;
      ctl.limiter_streak[i] = pinned ? ctl.limiter_streak[i] + 1 : 0;
      if (ctl.limiter_streak[i] >= cfg.limiter_exclude_ticks) {
        ctl.excluded.set_index(i, true);
        ++rec.newly_excluded;
      }
    }
    if (rec.newly_excluded > 0) {
      ctl.in_band_streak = 0;
      const std::size_t remaining = ctl.controlled_count();
      if (remaining == 0) {
        ctl = deactivate(ctl);
      } else {
        ctl.target_kgf = uniform_target(ctl.weight_kgf, remaining);
      }
    }
  }

  if (ctl.active) {
    double max_dev = 0.0;
    for (std::size_t i = 0; i < readings.values().size(); ++i) {
      if (ctl.controls(i)) max_dev = std::max(max_dev, std::abs(readings[i] - ctl.target_kgf));
    }
    rec.max_abs_deviation = max_dev;
    if (!ctl.converged) {
      ctl.in_band_streak = max_dev < cfg.deadband_kgf ? ctl.in_band_streak + 1 : 0;
      if (ctl.in_band_streak >= cfg.converge_ticks) ctl.converged = true;
    }
    ++ctl.tick_count;
  }

  s.plant.bank.direction = compute_commands(readings, ctl, cfg);
  s.plant.bank = step_actuators(s.plant.bank, cfg.tick_dt_s);
  s.plant.resolve();
  ++s.tick;

  rec.converged = ctl.active && ctl.converged;
  rec.total_force = total_weight(s.plant.equilibrium.forces);
  if (record) *record = rec;
  return s;
}

}  // namespace bedsim
