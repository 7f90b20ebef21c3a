#include "bedsim/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "bedsim/profile_json.hpp"

namespace bedsim {

using nlohmann::json;
namespace fs = std::filesystem;

void Scenario::validate() const {
  profile.validate();
  control.validate();
  plant.validate(travel_max_mm);
  control.validate_stability(plant);
  sensor.validate();
  if (max_ticks < 1) throw Error(ErrorCode::Validation, "scenario '" + name + "': max_ticks must be >= 1");
  for (const auto& p : perturbations) {
    if (!profile.spec().contains(p.cell.row, p.cell.col)) {
      throw Error(ErrorCode::Validation, "scenario '" + name + "': perturbation cell (" +
                                             std::to_string(p.cell.row) + "," +
                                             std::to_string(p.cell.col) + ") is off-grid");
    }
    if (p.tick < 0) throw Error(ErrorCode::Validation, "scenario '" + name + "': perturbation tick < 0");
  }
}

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw Error(ErrorCode::Validation, where + ": unknown field '" + key + "'");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Validation, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, const std::string& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Validation, std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::Validation, "scenario document must be an object");
  reject_unknown(doc, {"name", "profile", "mode", "control", "plant", "sensor", "max_ticks",
                       "perturbations", "seed"},
                 "scenario");
  Scenario s;
  read_field(doc, "name", s.name, "scenario");
  const std::string where = "scenario '" + s.name + "'";

  if (!doc.contains("profile")) throw Error(ErrorCode::Validation, where + ": missing 'profile'");
  const json& prof = doc["profile"];
  if (prof.is_string()) {
    const auto ref = prof.get<std::string>();
    const auto names = builtin_profile_names();
    if (std::find(names.begin(), names.end(), ref) != names.end()) {
      s.profile = builtin_profile(ref);
    } else {
      const fs::path p(ref);
      s.profile = load_profile_file((p.is_absolute() ? p : fs::path(base_dir) / p).string());
    }
  } else {
    s.profile = profile_from_json(prof);
  }

  if (doc.contains("mode")) {
    const auto m = doc["mode"].is_string() ? parse_firmness(doc["mode"].get<std::string>()) : std::nullopt;
    if (!m) throw Error(ErrorCode::Validation, where + ": mode must be standard, medium or soft");
    s.mode = *m;
  }

  if (doc.contains("control")) {
    const json& c = doc["control"];
    const std::string w = where + " control";
    reject_unknown(c, {"threshold_kgf", "deadband_kgf", "gate_min_kgf", "gate_max_kgf", "tick_dt_s",
                       "converge_ticks", "limiter_exclude_ticks", "structuring_element"},
                   w);
    read_field(c, "threshold_kgf", s.control.threshold_kgf, w);
    read_field(c, "deadband_kgf", s.control.deadband_kgf, w);
    read_field(c, "gate_min_kgf", s.control.gate_min_kgf, w);
    read_field(c, "gate_max_kgf", s.control.gate_max_kgf, w);
    read_field(c, "tick_dt_s", s.control.tick_dt_s, w);
    read_field(c, "converge_ticks", s.control.converge_ticks, w);
    read_field(c, "limiter_exclude_ticks", s.control.limiter_exclude_ticks, w);
    std::string se = s.control.structuring_element.name();
    read_field(c, "structuring_element", se, w);
    s.control.structuring_element = StructuringElement::named(se);
  }
  if (doc.contains("plant")) {
    const json& p = doc["plant"];
    const std::string w = where + " plant";
    reject_unknown(p, {"spring_k", "neutral_extension_mm", "solver_tolerance_mm", "travel_max_mm"}, w);
    read_field(p, "spring_k", s.plant.spring_k, w);
    read_field(p, "neutral_extension_mm", s.plant.neutral_extension_mm, w);
    read_field(p, "solver_tolerance_mm", s.plant.solver_tolerance_mm, w);
    read_field(p, "travel_max_mm", s.travel_max_mm, w);
  }
  if (doc.contains("sensor")) {
    const json& p = doc["sensor"];
    const std::string w = where + " sensor";
    reject_unknown(p, {"adc_bits", "noise_sigma_kgf"}, w);
    read_field(p, "adc_bits", s.sensor.adc_bits, w);
    read_field(p, "noise_sigma_kgf", s.sensor.noise_sigma_kgf, w);
  }
  read_field(doc, "max_ticks", s.max_ticks, where);
  read_field(doc, "seed", s.seed, where);

  if (doc.contains("perturbations")) {
    for (const auto& p : doc["perturbations"]) {
      const std::string w = where + " perturbation";
      reject_unknown(p, {"tick", "cell", "extension_delta_mm"}, w);
      Perturbation pert;
      read_field(p, "tick", pert.tick, w);
      read_field(p, "extension_delta_mm", pert.extension_delta_mm, w);
      if (!p.contains("cell") || !p["cell"].is_array() || p["cell"].size() != 2) {
        throw Error(ErrorCode::Validation, w + ": 'cell' must be [row, col]");
      }
      pert.cell = {p["cell"][0].get<int>(), p["cell"][1].get<int>()};
      s.perturbations.push_back(pert);
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), fs::path(path).parent_path().string());
}

void apply_perturbation(LoopState& s, const Perturbation& p) {
  auto& ext = s.plant.bank.extension_mm(p.cell.row, p.cell.col);
  ext = std::clamp(ext + p.extension_delta_mm, 0.0, s.plant.bank.travel_max_mm);
  s.plant.resolve();
  s.control.converged = false;
  s.control.in_band_streak = 0;
}

RunReport run(const Scenario& scenario) {
  scenario.validate();
  LoopState s{Plant::settle(scenario.profile, scenario.plant, scenario.sensor, scenario.travel_max_mm),
              {}, scenario.seed, 0};
  s.control = activate(s.readings(), scenario.mode, scenario.control);

  RunReport r;
  r.scenario = scenario.name;
  r.profile = scenario.profile.name;
  r.mode = scenario.mode;
  r.seed = scenario.seed;
  r.weight_kgf = s.control.weight_kgf;

  std::int64_t last_perturbation = -1;
  for (const auto& p : scenario.perturbations) last_perturbation = std::max(last_perturbation, p.tick);

  for (std::int64_t t = 0; t < scenario.max_ticks; ++t) {
    for (const auto& p : scenario.perturbations) {
      if (p.tick == t) apply_perturbation(s, p);
    }
    TickRecord rec;
    s = tick(s, scenario.control, &rec);
    r.trace.push_back({rec.tick, rec.max_abs_deviation, rec.total_force});
    r.ticks_run = t + 1;
    if (!s.control.active) break;
    if (rec.converged && t >= last_perturbation) {
      r.ticks_to_converge = t + 1;
      break;
    }
  }

  r.converged = s.control.active && s.control.converged;
  r.final_target_kgf = s.control.target_kgf;
  r.final_max_abs_d_kgf = r.trace.empty() ? 0.0 : r.trace.back().max_abs_d;
  r.support_size = s.control.controlled_count();
  r.excluded_count = s.control.excluded.count();
  r.pressures = s.readings();
  r.forces = s.plant.equilibrium.forces;
  r.extensions_mm = s.plant.bank.extension_mm;
  r.support = BinaryMap(s.plant.profile.spec());
  for (std::size_t i = 0; i < r.support.spec().cell_count(); ++i) r.support.set_index(i, s.control.controls(i));
  return r;
}

std::string report_to_json(const RunReport& r) {
  auto num = [](double v) { return json(v).dump(); };
  std::ostringstream os;
  os << "{\n"
     << "  \"scenario\": " << json(r.scenario).dump() << ",\n"
     << "  \"profile\": " << json(r.profile).dump() << ",\n"
     << "  \"mode\": \"" << to_string(r.mode) << "\",\n"
     << "  \"seed\": " << r.seed << ",\n"
     << "  \"converged\": " << (r.converged ? "true" : "false") << ",\n"
     << "  \"ticks_run\": " << r.ticks_run << ",\n"
     << "  \"ticks_to_converge\": "
     << (r.ticks_to_converge ? std::to_string(*r.ticks_to_converge) : std::string("null")) << ",\n"
     << "  \"weight_kgf\": " << num(r.weight_kgf) << ",\n"
     << "  \"final_target_kgf\": " << num(r.final_target_kgf) << ",\n"
     << "  \"final_max_abs_d_kgf\": " << num(r.final_max_abs_d_kgf) << ",\n"
     << "  \"support_size\": " << r.support_size << ",\n"
     << "  \"excluded_count\": " << r.excluded_count << ",\n"
     << "  \"trace\": [";
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    const auto& t = r.trace[i];
    os << (i ? ",\n    " : "\n    ") << "[" << t.tick << ", " << num(t.max_abs_d) << ", "
       << num(t.total_force) << "]";
  }
  os << (r.trace.empty() ? "]\n" : "\n  ]\n") << "}\n";
  return os.str();
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace

std::string grid_to_csv(const Grid<double>& grid, int decimals) {
  std::string out;
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      if (c) out += ',';
      out += fixed(grid(r, c), decimals);
    }
    out += '\n';
  }
  return out;
}

Grid<double> grid_from_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorCode::Validation, "bad CSV number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::Validation, "ragged CSV grid");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Validation, "empty CSV grid");
  GridSpec spec;
  spec.rows = static_cast<int>(rows.size());
  spec.cols = static_cast<int>(rows.front().size());
  Grid<double> g(spec);
  for (int r = 0; r < spec.rows; ++r)
    for (int c = 0; c < spec.cols; ++c) g(r, c) = rows[r][c];
  return g;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
  std::string out = "tick,max_abs_d,total_force\n";
  for (const auto& t : trace) {
    out += std::to_string(t.tick) + ',' + fixed(t.max_abs_d, 6) + ',' + fixed(t.total_force, 6) + '\n';
  }
  return out;
}

void export_csv(const RunReport& report, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create '" + dir + "': " + ec.message());
  const fs::path base(dir);
  write_file(base / "pressures.csv", grid_to_csv(report.pressures.grid(), 4));
  write_file(base / "extensions.csv", grid_to_csv(report.extensions_mm, 2));
  Grid<double> support(report.support.spec());
  for (std::size_t i = 0; i < support.size(); ++i) support[i] = report.support[i] ? 1.0 : 0.0;
  write_file(base / "support.csv", grid_to_csv(support, 0));
  write_file(base / "trace.csv", trace_to_csv(report.trace));
}

std::string render_heatmap(const Grid<double>& values) {
  static constexpr std::string_view kRamp = " .:-=+*#";
  double max = 0.0;
  for (double v : values.values()) max = std::max(max, v);
  std::string out;
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      std::size_t bin = 0;
      if (max > 0.0 && values(r, c) > 0.0) {
        bin = std::min<std::size_t>(kRamp.size() - 1,
                                    static_cast<std::size_t>(values(r, c) / max * kRamp.size()));
      }
      out += kRamp[bin];
    }
    out += '\n';
  }
  return out;
}

}  // namespace bedsim
