#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bedsim/grid.hpp"

namespace bedsim {

inline constexpr double kStandardGravity = 9.80665;  // N per kgf

/// The sleeper: total weight plus the underside clearance above each cell.
/// A missing clearance means no body above that cell.
struct BodyProfile {
  std::string name;
  double weight_kgf = 0.0;
  Grid<std::optional<double>> clearance_mm;

  const GridSpec& spec() const noexcept { return clearance_mm.spec(); }
  std::size_t body_cells() const noexcept;
  // Throws Config/Validation/NoBody naming the offending field or cell.
  void validate() const;
  bool operator==(const BodyProfile&) const = default;
};

enum class Direction : std::uint8_t { Stop, Cw, Ccw };  // Cw raises the shaft

std::string_view to_string(Direction d) noexcept;

struct ActuatorBank {
  static constexpr double kSpeedMmPerS = 10.0;

  Grid<double> extension_mm;
  Grid<Direction> direction;
  Grid<std::uint8_t> limiter_hit;  // set for the tick a commanded cell was clamped
  double travel_max_mm = 60.0;

  static ActuatorBank uniform(GridSpec spec, double extension_mm, double travel_max_mm = 60.0);
  const GridSpec& spec() const noexcept { return extension_mm.spec(); }
  bool operator==(const ActuatorBank&) const = default;
};

struct PlantConfig {
  double spring_k = 0.05;           // kgf per mm per cell
  double neutral_extension_mm = 20.0;
  double solver_tolerance_mm = 1e-6;

  void validate(double travel_max_mm) const;
};

struct SensorModel {
  static constexpr double kSaturationN = 100.0;

  int adc_bits = 10;
  double noise_sigma_kgf = 0.0;
  double g = kStandardGravity;

  void validate() const;
  // One quantization level, in kgf.
  double step_kgf() const noexcept;
};

struct Equilibrium {
  double sink_mm = 0.0;
  PressureMap forces;
};

/// Rigid body on one vertical degree of freedom resting on per-cell linear
/// springs. Solves sum f_ij(d) = weight for the sink depth d.
Equilibrium solve_equilibrium(const BodyProfile& profile, const ActuatorBank& bank,
                              const PlantConfig& cfg);

/// kgf -> N, optional Gaussian noise, clamp to the 100 N span, ADC round trip.
PressureMap read_sensors(const PressureMap& forces, const SensorModel& model,
                         std::uint64_t seed);

ActuatorBank step_actuators(const ActuatorBank& bank, double dt_s);

// Profile documents and the built-in registry.
BodyProfile parse_profile(std::string_view json_text);
BodyProfile load_profile_file(const std::string& path);
std::string profile_to_json(const BodyProfile& profile);

std::vector<std::string> builtin_profile_names();
BodyProfile builtin_profile(std::string_view name);
// A built-in name or a path to a profile document.
BodyProfile resolve_profile(std::string_view name_or_path);

}  // namespace bedsim
