#include "bedsim/morphology.hpp"

#include <algorithm>
#include <cstdlib>

namespace bedsim {

StructuringElement::StructuringElement(std::string name, std::vector<Offset> offsets)
    : name_(std::move(name)), offsets_(std::move(offsets)) {
  if (offsets_.empty()) {
    throw Error(ErrorCode::Config, "structuring element '" + name_ + "' has no offsets");
  }
  if (std::find(offsets_.begin(), offsets_.end(), Offset{0, 0}) == offsets_.end()) {
    throw Error(ErrorCode::Config,
                "structuring element '" + name_ + "' must contain the origin");
  }
}

StructuringElement StructuringElement::square3() {
  std::vector<Offset> o;
  for (int dr = -1; dr <= 1; ++dr)
    for (int dc = -1; dc <= 1; ++dc) o.push_back({dr, dc});
  return {"square3", std::move(o)};
}

StructuringElement StructuringElement::cross3() {
  return {"cross3", {{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
}

StructuringElement StructuringElement::named(std::string_view name) {
  if (name == "square3") return square3();
  if (name == "cross3") return cross3();
  throw Error(ErrorCode::Config, "unknown structuring element '" + std::string(name) + "'");
}

int StructuringElement::radius() const noexcept {
  int r = 0;
  for (const auto& o : offsets_) r = std::max({r, std::abs(o.drow), std::abs(o.dcol)});
  return r;
}

StructuringElement StructuringElement::reflect() const {
  std::vector<Offset> o;
  o.reserve(offsets_.size());
  for (const auto& off : offsets_) o.push_back({-off.drow, -off.dcol});
  return {name_ + "_reflected", std::move(o)};
}

std::string_view to_string(FirmnessMode mode) noexcept {
  switch (mode) {
    case FirmnessMode::Standard: return "standard";
    case FirmnessMode::Medium: return "medium";
    case FirmnessMode::Soft: return "soft";
  }
  return "standard";
}

std::optional<FirmnessMode> parse_firmness(std::string_view text) noexcept {
  if (text == "standard") return FirmnessMode::Standard;
  if (text == "medium") return FirmnessMode::Medium;
  if (text == "soft") return FirmnessMode::Soft;
  return std::nullopt;
}

BinaryMap dilate(const BinaryMap& bin, const StructuringElement& se) {
  const GridSpec& g = bin.spec();
  BinaryMap out(g);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      if (!bin(r, c)) continue;
      for (const auto& o : se.offsets()) {
        if (g.contains(r + o.drow, c + o.dcol)) out.set(r + o.drow, c + o.dcol);
      }
    }
  }
  return out;
}

BinaryMap erode(const BinaryMap& bin, const StructuringElement& se) {
  const GridSpec& g = bin.spec();
  BinaryMap out(g);
  for (int r = 0; r < g.rows; ++r) {
    for (int c = 0; c < g.cols; ++c) {
      const bool all = std::all_of(se.offsets().begin(), se.offsets().end(), [&](const Offset& o) {
        return g.contains(r + o.drow, c + o.dcol) && bin(r + o.drow, c + o.dcol);
      });
      out.set(r, c, all);
    }
  }
  return out;
}

namespace {

BinaryMap pad(const BinaryMap& bin, int margin) {
  GridSpec g = bin.spec();
  g.rows += 2 * margin;
  g.cols += 2 * margin;
  BinaryMap out(g);
  for (int r = 0; r < bin.spec().rows; ++r)
    for (int c = 0; c < bin.spec().cols; ++c) out.set(r + margin, c + margin, bin(r, c));
  return out;
}

BinaryMap crop(const BinaryMap& padded, const GridSpec& g, int margin) {
  BinaryMap out(g);
  for (int r = 0; r < g.rows; ++r)
    for (int c = 0; c < g.cols; ++c) out.set(r, c, padded(r + margin, c + margin));
  return out;
}

}  // namespace

BinaryMap close(const BinaryMap& bin, const StructuringElement& se) {
  const int margin = se.radius();
  return crop(erode(dilate(pad(bin, margin), se), se), bin.spec(), margin);
}

BinaryMap open(const BinaryMap& bin, const StructuringElement& se) {
  return dilate(erode(bin, se), se);
}

BinaryMap support_region(const BinaryMap& pressed, FirmnessMode mode,
                         const StructuringElement& se) {
  if (pressed.empty()) {
    throw Error(ErrorCode::NoContact, "support region requested for an empty pressed set");
  }
  switch (mode) {
    case FirmnessMode::Standard: return pressed;
    case FirmnessMode::Medium: return close(pressed, se);
    case FirmnessMode::Soft: return dilate(close(pressed, se), se);
  }
  return pressed;
}

}  // namespace bedsim
