#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bedsim/error.hpp"

namespace bedsim {

/// Sensor/actuator grid geometry. Row 0 is the head end.
struct GridSpec {
  int rows = 18;
  int cols = 9;
  double cell_pitch_mm = 100.0;

  void validate() const;
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  bool contains(int row, int col) const noexcept {
    return row >= 0 && row < rows && col >= 0 && col < cols;
  }
  bool same_shape(const GridSpec& o) const noexcept {
    return rows == o.rows && cols == o.cols;
  }
  bool operator==(const GridSpec&) const = default;
};

struct Cell {
  int row = 0;
  int col = 0;
  bool operator==(const Cell&) const = default;
};

/// Dense row-major grid of values.
template <typename T>
class Grid {
 public:
  Grid() : Grid(GridSpec{}) {}
  explicit Grid(GridSpec spec, T fill = T{})
      : spec_(spec), data_(spec.cell_count(), fill) {}

  const GridSpec& spec() const noexcept { return spec_; }
  int rows() const noexcept { return spec_.rows; }
  int cols() const noexcept { return spec_.cols; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int row, int col) { return data_[index(row, col)]; }
  const T& operator()(int row, int col) const { return data_[index(row, col)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }

  Cell cell_of(std::size_t i) const noexcept {
    return {static_cast<int>(i) / spec_.cols, static_cast<int>(i) % spec_.cols};
  }

  bool operator==(const Grid& o) const {
    return spec_.same_shape(o.spec_) && data_ == o.data_;
  }

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(spec_.cols) +
           static_cast<std::size_t>(col);
  }

  GridSpec spec_;
  std::vector<T> data_;
};

/// Per-cell force readings in kilogram-force. Every value is finite and >= 0.
class PressureMap {
 public:
  PressureMap() = default;
  explicit PressureMap(GridSpec spec);
  // Throws Validation on size mismatch or a negative/non-finite value.
  PressureMap(GridSpec spec, std::vector<double> values);

  const GridSpec& spec() const noexcept { return grid_.spec(); }
  double operator()(int row, int col) const { return grid_(row, col); }
  double operator[](std::size_t i) const { return grid_[i]; }
  void set(int row, int col, double kgf);
  std::span<const double> values() const noexcept { return grid_.values(); }
  const Grid<double>& grid() const noexcept { return grid_; }

  bool operator==(const PressureMap&) const = default;

 private:
  Grid<double> grid_;
};

/// Thresholded support map; also the morphology operand.
class BinaryMap {
 public:
  BinaryMap() = default;
  explicit BinaryMap(GridSpec spec) : grid_(spec, 0) {}

  const GridSpec& spec() const noexcept { return grid_.spec(); }
  bool operator()(int row, int col) const { return grid_(row, col) != 0; }
  bool operator[](std::size_t i) const { return grid_[i] != 0; }
  void set(int row, int col, bool bit = true) { grid_(row, col) = bit ? 1 : 0; }
  void set_index(std::size_t i, bool bit) { grid_[i] = bit ? 1 : 0; }
  std::size_t count() const noexcept;
  bool empty() const noexcept { return count() == 0; }
  bool is_subset_of(const BinaryMap& other) const;

  bool operator==(const BinaryMap&) const = default;

 private:
  Grid<std::uint8_t> grid_;
};

}  // namespace bedsim
