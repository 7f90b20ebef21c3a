#pragma once

#include <cstddef>

#include "bedsim/grid.hpp"

namespace bedsim {

inline constexpr double kDefaultThresholdKgf = 0.05;

struct SupportSummary {
  double total_weight = 0.0;   // kgf, sum over every cell
  std::size_t pressed_count = 0;
  double target = 0.0;         // uniform support per pressed cell, kgf
};

double total_weight(const PressureMap& map);

/// bit = 1 iff value >= threshold. Throws Config for threshold <= 0.
BinaryMap binarize(const PressureMap& map, double threshold = kDefaultThresholdKgf);

std::size_t pressed_count(const BinaryMap& bin);

/// total / count. Throws NoContact when count is zero.
double uniform_target(double total, std::size_t count);

SupportSummary summarize(const PressureMap& map, double threshold = kDefaultThresholdKgf);

}  // namespace bedsim
