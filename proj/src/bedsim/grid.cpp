#include "bedsim/grid.hpp"

#include <cmath>
#include <string>

namespace bedsim {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Validation: return "validation";
    case ErrorCode::NoContact: return "no_contact";
    case ErrorCode::NoBody: return "no_body";
    case ErrorCode::GateRejected: return "gate_rejected";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorCode::Config, "grid must have at least one row and column, got " +
                                       std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!(cell_pitch_mm > 0.0)) {
    throw Error(ErrorCode::Config, "cell_pitch must be positive");
  }
}

namespace {

void check_reading(int row, int col, double v) {
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorCode::Validation, "pressure at (" + std::to_string(row) + "," +
                                           std::to_string(col) +
                                           ") must be finite and >= 0");
  }
}

}  // namespace

PressureMap::PressureMap(GridSpec spec) : grid_(spec, 0.0) { spec.validate(); }

PressureMap::PressureMap(GridSpec spec, std::vector<double> values) : grid_(spec, 0.0) {
  spec.validate();
  if (values.size() != spec.cell_count()) {
    throw Error(ErrorCode::Validation,
                "pressure map has " + std::to_string(values.size()) + " values, grid needs " +
                    std::to_string(spec.cell_count()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const Cell c = grid_.cell_of(i);
    check_reading(c.row, c.col, values[i]);
    grid_[i] = values[i];
  }
}

void PressureMap::set(int row, int col, double kgf) {
  check_reading(row, col, kgf);
  grid_(row, col) = kgf;
}

std::size_t BinaryMap::count() const noexcept {
  std::size_t n = 0;
  for (auto b : grid_.values()) n += b;
  return n;
}

bool BinaryMap::is_subset_of(const BinaryMap& other) const {
  if (!spec().same_shape(other.spec())) return false;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (grid_[i] && !other.grid_[i]) return false;
  }
  return true;
}

}  // namespace bedsim
