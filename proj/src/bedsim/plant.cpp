#include "bedsim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bedsim {

std::size_t BodyProfile::body_cells() const noexcept {
  return static_cast<std::size_t>(std::count_if(clearance_mm.values().begin(),
                                                clearance_mm.values().end(),
                                                [](const auto& c) { return c.has_value(); }));
}

void BodyProfile::validate() const {
  spec().validate();
  if (!(weight_kgf > 0.0) || !std::isfinite(weight_kgf)) {
    throw Error(ErrorCode::Validation, "profile '" + name + "': weight_kgf must be positive");
  }
  for (std::size_t i = 0; i < clearance_mm.size(); ++i) {
    const auto& c = clearance_mm[i];
    if (c && (!std::isfinite(*c) || *c < 0.0)) {
      const Cell cell = clearance_mm.cell_of(i);
      throw Error(ErrorCode::Validation, "profile '" + name + "': clearance at (" +
                                             std::to_string(cell.row) + "," +
                                             std::to_string(cell.col) +
                                             ") must be finite and >= 0");
    }
  }
  if (body_cells() == 0) {
    throw Error(ErrorCode::NoBody, "profile '" + name + "' has no body cells");
  }
}

std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::Stop: return "STOP";
    case Direction::Cw: return "CW";
    case Direction::Ccw: return "CCW";
  }
  return "STOP";
}

ActuatorBank ActuatorBank::uniform(GridSpec spec, double extension_mm, double travel_max_mm) {
  if (!(travel_max_mm > 0.0)) throw Error(ErrorCode::Config, "travel_max must be positive");
  ActuatorBank bank{Grid<double>(spec, std::clamp(extension_mm, 0.0, travel_max_mm)),
                    Grid<Direction>(spec, Direction::Stop), Grid<std::uint8_t>(spec, 0),
                    travel_max_mm};
  return bank;
}

void PlantConfig::validate(double travel_max_mm) const {
  if (!(spring_k > 0.0)) throw Error(ErrorCode::Config, "spring_k must be positive");
  if (neutral_extension_mm < 0.0 || neutral_extension_mm > travel_max_mm) {
    throw Error(ErrorCode::Config, "neutral_extension must lie within [0, travel_max]");
  }
  if (!(solver_tolerance_mm > 0.0)) {
    throw Error(ErrorCode::Config, "solver_tolerance must be positive");
  }
}

void SensorModel::validate() const {
  if (adc_bits < 8 || adc_bits > 16) throw Error(ErrorCode::Config, "adc_bits must be in [8, 16]");
  if (!(noise_sigma_kgf >= 0.0)) throw Error(ErrorCode::Config, "noise_sigma must be >= 0");
  if (!(g > 0.0)) throw Error(ErrorCode::Config, "g must be positive");
}

double SensorModel::step_kgf() const noexcept {
  return kSaturationN / static_cast<double>((1u << adc_bits) - 1u) / g;
}

Equilibrium solve_equilibrium(const BodyProfile& profile, const ActuatorBank& bank,
                              const PlantConfig& cfg) {
  if (!profile.spec().same_shape(bank.spec())) {
    throw Error(ErrorCode::Config, "profile and actuator bank grids differ");
  }
  if (!(profile.weight_kgf > 0.0)) throw Error(ErrorCode::Config, "body weight must be positive");

  // offset_i = extension - clearance; cell i carries k * max(0, offset_i + d).
  std::vector<std::size_t> cells;
  std::vector<double> offset;
  for (std::size_t i = 0; i < profile.clearance_mm.size(); ++i) {
    if (const auto& c = profile.clearance_mm[i]) {
      cells.push_back(i);
      offset.push_back(bank.extension_mm[i] - *c);
    }
  }
  if (cells.empty()) throw Error(ErrorCode::NoBody, "no body cells to support");

  const double k = cfg.spring_k;
  const double weight = profile.weight_kgf;
  auto total_force = [&](double d) {
    double f = 0.0;
    for (double o : offset) f += k * std::max(0.0, o + d);
    return f;
  };

  double lo = -*std::max_element(offset.begin(), offset.end());  // F(lo) = 0
  double hi = lo + weight / k + 1.0;                              // F(hi) > weight
  while (hi - lo > cfg.solver_tolerance_mm) {
    const double mid = 0.5 * (lo + hi);
    if (total_force(mid) < weight) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  // Polish: solve the linear segment exactly on the contact set found at hi.
  std::vector<bool> contact(offset.size());
  for (std::size_t i = 0; i < offset.size(); ++i) contact[i] = offset[i] + hi > 0.0;
  double sink = hi;
  for (std::size_t iter = 0; iter <= offset.size(); ++iter) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < offset.size(); ++i) {
      if (contact[i]) {
        sum += offset[i];
        ++n;
      }
    }
    if (n == 0) break;
    const double candidate = (weight / k - sum) / static_cast<double>(n);
    bool changed = false;
    for (std::size_t i = 0; i < offset.size(); ++i) {
      if (contact[i] && offset[i] + candidate < 0.0) {
        contact[i] = false;
        changed = true;
      }
    }
    if (!changed) {
      if (candidate >= lo - cfg.solver_tolerance_mm && candidate <= hi + cfg.solver_tolerance_mm) {
        sink = candidate;
      }
      break;
    }
  }

  Equilibrium eq{sink, PressureMap(profile.spec())};
  for (std::size_t j = 0; j < cells.size(); ++j) {
    const Cell c = profile.clearance_mm.cell_of(cells[j]);
    eq.forces.set(c.row, c.col, k * std::max(0.0, offset[j] + sink));
  }
  return eq;
}

namespace {

// Uniform double in (0, 1].
double unit_open(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

PressureMap read_sensors(const PressureMap& forces, const SensorModel& model,
                         std::uint64_t seed) {
  model.validate();
  const double levels = static_cast<double>((1u << model.adc_bits) - 1u);
  std::mt19937_64 rng(seed);
  const double sigma_n = model.noise_sigma_kgf * model.g;
  const double two_pi = 6.283185307179586;

  PressureMap out(forces.spec());
  const int cols = forces.spec().cols;
  for (std::size_t i = 0; i < forces.values().size(); ++i) {
    double newtons = forces[i] * model.g;
    if (sigma_n > 0.0) {
      // Box-Muller keeps the sequence identical across standard libraries.
      const double u1 = unit_open(rng);
      const double u2 = unit_open(rng);
      newtons += sigma_n * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }
    newtons = std::clamp(newtons, 0.0, SensorModel::kSaturationN);
    const double q = std::round(newtons / SensorModel::kSaturationN * levels);
    const double reading = q / levels * SensorModel::kSaturationN / model.g;
    out.set(static_cast<int>(i) / cols, static_cast<int>(i) % cols, reading);
  }
  return out;
}

ActuatorBank step_actuators(const ActuatorBank& bank, double dt_s) {
  if (!(dt_s > 0.0)) throw Error(ErrorCode::Config, "actuator step dt must be positive");
  ActuatorBank next = bank;
  const double travel = ActuatorBank::kSpeedMmPerS * dt_s;
  for (std::size_t i = 0; i < bank.extension_mm.size(); ++i) {
    double target = bank.extension_mm[i];
    switch (bank.direction[i]) {
      case Direction::Cw: target += travel; break;
      case Direction::Ccw: target -= travel; break;
      case Direction::Stop: break;
    }
    const double clamped = std::clamp(target, 0.0, bank.travel_max_mm);
    next.extension_mm[i] = clamped;
    next.limiter_hit[i] = (bank.direction[i] != Direction::Stop && clamped != target) ? 1 : 0;
  }
  return next;
}

}  // namespace bedsim
