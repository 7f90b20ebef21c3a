#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bedsim/grid.hpp"

namespace bedsim {

struct Offset {
  int drow = 0;
  int dcol = 0;
  bool operator==(const Offset&) const = default;
};

/// Neighbourhood of a binary morphology operator. Always contains the origin.
class StructuringElement {
 public:
  // Throws Config if offsets is empty or lacks (0,0).
  StructuringElement(std::string name, std::vector<Offset> offsets);

  static StructuringElement square3();
  static StructuringElement cross3();
  // Built-in by name ("square3", "cross3").
  static StructuringElement named(std::string_view name);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Offset>& offsets() const noexcept { return offsets_; }
  // Largest |offset| component.
  int radius() const noexcept;
  StructuringElement reflect() const;

 private:
  std::string name_;
  std::vector<Offset> offsets_;
};

enum class FirmnessMode { Standard, Medium, Soft };

std::string_view to_string(FirmnessMode mode) noexcept;
std::optional<FirmnessMode> parse_firmness(std::string_view text) noexcept;

// Cells outside the grid read as 0.
BinaryMap dilate(const BinaryMap& bin, const StructuringElement& se);
BinaryMap erode(const BinaryMap& bin, const StructuringElement& se);

// Set closing evaluated on a canvas padded by se.radius(), then cropped, so the
// result is extensive and idempotent for maps touching the border too.
BinaryMap close(const BinaryMap& bin, const StructuringElement& se);
BinaryMap open(const BinaryMap& bin, const StructuringElement& se);

/// Standard: pressed. Medium: close(pressed). Soft: dilate(close(pressed)).
/// Throws NoContact on an empty input.
BinaryMap support_region(const BinaryMap& pressed, FirmnessMode mode,
                         const StructuringElement& se);

}  // namespace bedsim
