#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bedsim/controller.hpp"

namespace bedsim {

struct Perturbation {
  std::int64_t tick = 0;
  Cell cell;
  double extension_delta_mm = 0.0;
};

struct Scenario {
  std::string name;
  BodyProfile profile;
  FirmnessMode mode = FirmnessMode::Standard;
  ControlConfig control;
  PlantConfig plant;
  SensorModel sensor;
  double travel_max_mm = 60.0;
  std::int64_t max_ticks = 2400;
  std::vector<Perturbation> perturbations;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Moves one actuator (clamped to its travel), re-solves the plant and clears
/// convergence so the loop must settle again.
void apply_perturbation(LoopState& state, const Perturbation& perturbation);

/// Relative profile paths resolve against base_dir.
Scenario parse_scenario(std::string_view json_text, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);

struct TraceRow {
  std::int64_t tick = 0;
  double max_abs_d = 0.0;
  double total_force = 0.0;
  bool operator==(const TraceRow&) const = default;
};

struct RunReport {
  std::string scenario;
  std::string profile;
  FirmnessMode mode = FirmnessMode::Standard;
  std::uint64_t seed = 0;
  bool converged = false;
  std::int64_t ticks_run = 0;
  std::optional<std::int64_t> ticks_to_converge;
  double weight_kgf = 0.0;
  double final_target_kgf = 0.0;
  double final_max_abs_d_kgf = 0.0;
  std::size_t support_size = 0;  // controlled cells at the end of the run
  std::size_t excluded_count = 0;
  std::vector<TraceRow> trace;

  PressureMap pressures;  // final sensor readings
  PressureMap forces;     // final plant forces
  Grid<double> extensions_mm;
  BinaryMap support;      // controlled cells at the end of the run
};

/// Settle at neutral, activate, tick until converged (with no pending
/// perturbations) or max_ticks. Throws GateRejected / NoContact / Config.
RunReport run(const Scenario& scenario);

std::string report_to_json(const RunReport& report);

// CSV grids: row-major, head row first, no header.
std::string grid_to_csv(const Grid<double>& grid, int decimals);
Grid<double> grid_from_csv(std::string_view text);
std::string trace_to_csv(const std::vector<TraceRow>& trace);

/// Writes pressures.csv, extensions.csv, support.csv and trace.csv into dir.
void export_csv(const RunReport& report, const std::string& dir);

/// One line per row, glyph ramp " .:-=+*#" binned over [0, max].
std::string render_heatmap(const Grid<double>& values);

}  // namespace bedsim
