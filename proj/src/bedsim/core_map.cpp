#include "bedsim/core_map.hpp"

#include <cmath>
#include <numeric>

namespace bedsim {

double total_weight(const PressureMap& map) {
  const auto v = map.values();
  return std::accumulate(v.begin(), v.end(), 0.0);
}

BinaryMap binarize(const PressureMap& map, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorCode::Config, "binarization threshold must be positive");
  }
  BinaryMap out(map.spec());
  for (std::size_t i = 0; i < map.values().size(); ++i) {
    out.set_index(i, map[i] >= threshold);
  }
  return out;
}

std::size_t pressed_count(const BinaryMap& bin) { return bin.count(); }

double uniform_target(double total, std::size_t count) {
  if (count == 0) {
    throw Error(ErrorCode::NoContact, "no pressed cells: uniform target undefined");
  }
  return total / static_cast<double>(count);
}

SupportSummary summarize(const PressureMap& map, double threshold) {
  SupportSummary s;
  s.total_weight = total_weight(map);
  s.pressed_count = pressed_count(binarize(map, threshold));
  s.target = uniform_target(s.total_weight, s.pressed_count);
  return s;
}

}  // namespace bedsim
