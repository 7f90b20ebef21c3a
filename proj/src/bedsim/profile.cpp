#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bedsim/profile_json.hpp"

namespace bedsim {

using nlohmann::json;

namespace {

std::string number(double v) { return json(v).dump(); }

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::Validation, where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace

BodyProfile profile_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::Validation, "profile document must be an object");
  BodyProfile p;
  const auto& name = require(doc, "name", "profile");
  if (!name.is_string()) throw Error(ErrorCode::Validation, "profile: 'name' must be a string");
  p.name = name.get<std::string>();
  const std::string where = "profile '" + p.name + "'";

  const auto& weight = require(doc, "weight_kgf", where);
  if (!weight.is_number()) throw Error(ErrorCode::Validation, where + ": 'weight_kgf' must be a number");
  p.weight_kgf = weight.get<double>();

  const auto& grid = require(doc, "grid", where);
  GridSpec spec;
  try {
    spec.rows = grid.at("rows").get<int>();
    spec.cols = grid.at("cols").get<int>();
    if (grid.contains("cell_pitch_mm")) spec.cell_pitch_mm = grid.at("cell_pitch_mm").get<double>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Validation, where + ": 'grid' needs integer rows and cols");
  }
  spec.validate();

  const auto& clearance = require(doc, "clearance_mm", where);
  if (!clearance.is_array()) throw Error(ErrorCode::Validation, where + ": 'clearance_mm' must be an array");
  if (clearance.empty()) throw Error(ErrorCode::NoBody, where + ": 'clearance_mm' is empty, no body cells");
  if (clearance.size() != static_cast<std::size_t>(spec.rows)) {
    throw Error(ErrorCode::Validation, where + ": clearance_mm has " +
                                           std::to_string(clearance.size()) + " rows, grid declares " +
                                           std::to_string(spec.rows));
  }
  p.clearance_mm = Grid<std::optional<double>>(spec);
  for (int r = 0; r < spec.rows; ++r) {
    const auto& row = clearance[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(spec.cols)) {
      throw Error(ErrorCode::Validation, where + ": clearance_mm row " + std::to_string(r) +
                                             " must have " + std::to_string(spec.cols) + " entries");
    }
    for (int c = 0; c < spec.cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (v.is_null()) continue;
      if (!v.is_number()) {
        throw Error(ErrorCode::Validation, where + ": clearance at (" + std::to_string(r) + "," +
                                               std::to_string(c) + ") must be a number or null");
      }
      p.clearance_mm(r, c) = v.get<double>();
    }
  }
  p.validate();
  return p;
}

BodyProfile parse_profile(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Validation, std::string("profile is not valid JSON: ") + e.what());
  }
  return profile_from_json(doc);
}

BodyProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open profile file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

std::string profile_to_json(const BodyProfile& p) {
  std::ostringstream os;
  os << "{\n  \"name\": " << json(p.name).dump() << ",\n  \"weight_kgf\": " << number(p.weight_kgf)
     << ",\n  \"grid\": {\"rows\": " << p.spec().rows << ", \"cols\": " << p.spec().cols;
  if (p.spec().cell_pitch_mm != GridSpec{}.cell_pitch_mm) {
    os << ", \"cell_pitch_mm\": " << number(p.spec().cell_pitch_mm);
  }
  os << "},\n  \"clearance_mm\": [\n";
  for (int r = 0; r < p.spec().rows; ++r) {
    os << "    [";
    for (int c = 0; c < p.spec().cols; ++c) {
      if (c) os << ", ";
      const auto& v = p.clearance_mm(r, c);
      os << (v ? number(*v) : "null");
    }
    os << (r + 1 < p.spec().rows ? "],\n" : "]\n");
  }
  os << "  ]\n}\n";
  return os.str();
}

namespace {

// Supine adult on the 18x9 grid. '#' baseline contact, 'g' lifted gap cell
// (neck, lumbar, knee), '.' no body.
constexpr const char* kSupineLayout[18] = {
    "...###...",  // head
    "...###...",
    "..ggggg..",  // neck
    ".#######.",  // shoulders
    ".#######.",
    "..#####..",
    "..ggggg..",  // lumbar
    "..#####..",  // hips
    "..#####..",
    ".##...##.",  // thighs
    ".##...##.",
    ".gg...gg.",  // knees
    ".##...##.",  // calves
    ".##...##.",
    ".#.....#.",  // heels
    ".........",
    ".........",
    ".........",
};

constexpr double kGapClearanceMm = 45.0;

BodyProfile supine(std::string name, double weight) {
  BodyProfile p;
  p.name = std::move(name);
  p.weight_kgf = weight;
  p.clearance_mm = Grid<std::optional<double>>(GridSpec{});
  for (int r = 0; r < 18; ++r) {
    for (int c = 0; c < 9; ++c) {
      switch (kSupineLayout[r][c]) {
        case '#': p.clearance_mm(r, c) = 0.0; break;
        case 'g': p.clearance_mm(r, c) = kGapClearanceMm; break;
        default: break;
      }
    }
  }
  return p;
}

}  // namespace

std::vector<std::string> builtin_profile_names() {
  return {"adult_supine_80", "adult_supine_180", "toy_10"};
}

BodyProfile builtin_profile(std::string_view name) {
  if (name == "adult_supine_80") return supine("adult_supine_80", 80.0);
  if (name == "adult_supine_180") return supine("adult_supine_180", 180.0);
  if (name == "toy_10") return supine("toy_10", 10.0);
  throw Error(ErrorCode::Validation, "unknown built-in profile '" + std::string(name) + "'");
}

BodyProfile resolve_profile(std::string_view name_or_path) {
  for (const auto& n : builtin_profile_names()) {
    if (n == name_or_path) return builtin_profile(n);
  }
  return load_profile_file(std::string(name_or_path));
}

}  // namespace bedsim
