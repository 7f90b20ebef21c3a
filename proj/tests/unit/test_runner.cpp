#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bedsim/runner.hpp"

using namespace bedsim;
namespace fs = std::filesystem;

namespace {

Scenario scenario(const std::string& name) {
  return load_scenario_file(std::string(BEDSIM_SCENARIO_DIR) + "/" + name + ".json");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bedsim_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("canonical standard run") {
  const auto t0 = std::chrono::steady_clock::now();
  const RunReport r = run(scenario("canonical_standard"));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(wall < 2.0);
  CHECK(r.converged);
  REQUIRE(r.ticks_to_converge);
  CHECK(*r.ticks_to_converge <= 2400);
  CHECK(r.final_max_abs_d_kgf < 0.05);
  CHECK(r.support_size == 53);
  CHECK(r.excluded_count == 0);
  CHECK(std::abs(r.final_target_kgf - 80.0 / 53.0) < 1e-4);
  CHECK(std::abs(r.final_target_kgf - 1.5094) < 1e-4);
  for (const auto& row : r.trace) CHECK(std::abs(row.total_force - 80.0) <= 1e-4);
  std::size_t near_target = 0;
  for (std::size_t i = 0; i < r.pressures.values().size(); ++i)
    if (r.support[i] && std::abs(r.pressures[i] - 1.5094) < 0.05) ++near_target;
  CHECK(near_target == 53);
}

TEST_CASE("firmness ordering on the canonical profile") {
  const RunReport s = run(scenario("canonical_standard"));
  const RunReport m = run(scenario("canonical_medium"));
  const RunReport f = run(scenario("canonical_soft"));
  REQUIRE(s.converged);
  REQUIRE(m.converged);
  REQUIRE(f.converged);
  CHECK(s.support_size == 53);
  CHECK(s.support_size < m.support_size);
  CHECK(m.support_size < f.support_size);
  CHECK(f.excluded_count > 0);
  CHECK(s.final_target_kgf > m.final_target_kgf);
  CHECK(m.final_target_kgf > f.final_target_kgf);
  for (const auto* r : {&s, &m, &f}) {
    CHECK(r->final_target_kgf == doctest::Approx(r->weight_kgf / r->support_size));
    for (std::size_t i = 0; i < r->pressures.values().size(); ++i)
      if (r->support[i]) CHECK(std::abs(r->pressures[i] - r->final_target_kgf) < 0.05);
  }
}

TEST_CASE("max_ticks of one yields a well-formed unconverged report") {
  Scenario sc = scenario("canonical_standard");
  sc.max_ticks = 1;
  const RunReport r = run(sc);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.ticks_to_converge);
  CHECK(r.ticks_run == 1);
  CHECK(r.trace.size() == 1);
  const auto doc = report_to_json(r);
  CHECK(doc.find("\"converged\": false") != std::string::npos);
  CHECK(doc.find("\"ticks_to_converge\": null") != std::string::npos);
}

TEST_CASE("mid-run perturbation spikes then re-converges") {
  const RunReport r = run(scenario("midrun_perturbation"));
  REQUIRE(r.converged);
  REQUIRE(r.trace.size() > 101);
  CHECK(r.trace[99].max_abs_d < 0.05);
  double spike = 0.0;
  for (std::size_t t = 100; t < 110; ++t) spike = std::max(spike, r.trace[t].max_abs_d);
  CHECK(spike >= 0.05);
  CHECK(r.trace.back().max_abs_d < 0.05);
  CHECK(*r.ticks_to_converge > 100);
}

TEST_CASE("noisy scenario still converges") {
  const RunReport r = run(scenario("noisy_standard"));
  CHECK(r.converged);
  CHECK(r.final_max_abs_d_kgf < 0.05);
}

TEST_CASE("gate-rejected scenario") {
  try {
    run(scenario("toy_gate"));
    FAIL("expected gate rejection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GateRejected);
    REQUIRE(e.weight_kgf());
    // measured through the default 10-bit ADC: each body cell is off by at most half a step
    const Scenario sc = scenario("toy_gate");
    const double slack = 0.5 * sc.sensor.step_kgf() * static_cast<double>(sc.profile.body_cells());
    CHECK(std::abs(*e.weight_kgf() - 10.0) <= slack);
  }
}

TEST_CASE("scenario parsing") {
  const Scenario sc = parse_scenario(R"({"name":"x","profile":"adult_supine_80","mode":"soft",
    "control":{"deadband_kgf":0.04,"structuring_element":"cross3"},"plant":{"travel_max_mm":50},
    "max_ticks":10,"seed":3})");
  CHECK(sc.mode == FirmnessMode::Soft);
  CHECK(sc.control.deadband_kgf == 0.04);
  CHECK(sc.control.structuring_element.name() == "cross3");
  CHECK(sc.travel_max_mm == 50.0);
  CHECK(sc.seed == 3);

  auto rejects = [](const char* doc) {
    try {
      parse_scenario(doc);
      FAIL("accepted " << doc);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Validation);
    }
  };
  rejects(R"({"name":"x","profile":"adult_supine_80","max_ticks":0})");
  rejects(R"({"name":"x","profile":"adult_supine_80","mode":"firm"})");
  rejects(R"({"name":"x","profile":"adult_supine_80","speling":1})");
  rejects(R"({"name":"x","profile":"adult_supine_80","perturbations":[{"tick":0,"cell":[18,0],"extension_delta_mm":1}]})");
  rejects(R"({"name":"x"})");
  rejects("not json");
}

TEST_CASE("csv export") {
  Grid<double> zeros(GridSpec{});
  const std::string csv = grid_to_csv(zeros, 4);
  std::istringstream lines(csv);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    CHECK(line == "0.0000,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000,0.0000");
    ++n;
  }
  CHECK(n == 18);

  const RunReport r = run(scenario("canonical_standard"));
  const Grid<double> back = grid_from_csv(grid_to_csv(r.pressures.grid(), 4));
  REQUIRE(back.spec().same_shape(r.pressures.spec()));
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(std::abs(back[i] - r.pressures[i]) <= 0.5e-4);
  CHECK(grid_to_csv(back, 4) == grid_to_csv(r.pressures.grid(), 4));

  const fs::path dir = scratch_dir("csv");
  export_csv(r, dir.string());
  for (const char* f : {"pressures.csv", "extensions.csv", "support.csv", "trace.csv"})
    CHECK(fs::exists(dir / f));
  CHECK(slurp(dir / "trace.csv").rfind("tick,max_abs_d,total_force\n", 0) == 0);
  const Grid<double> ext = grid_from_csv(slurp(dir / "extensions.csv"));
  for (std::size_t i = 0; i < ext.size(); ++i) CHECK(std::abs(ext[i] - r.extensions_mm[i]) <= 0.005);
  const Grid<double> sup = grid_from_csv(slurp(dir / "support.csv"));
  double ones = 0;
  for (double v : sup.values()) ones += v;
  CHECK(ones == 53);

  CHECK_THROWS_AS(export_csv(r, (dir / "pressures.csv" / "nested").string()), Error);
  CHECK_THROWS_AS(grid_from_csv("1,2\n3\n"), Error);
  CHECK_THROWS_AS(grid_from_csv("1,x\n"), Error);
}

TEST_CASE("heatmap") {
  const std::string blank = render_heatmap(Grid<double>(GridSpec{}));
  CHECK(blank == [] {
    std::string s;
    for (int i = 0; i < 18; ++i) s += "         \n";
    return s;
  }());

  Grid<double> one(GridSpec{});
  one(4, 2) = 3.0;
  const std::string single = render_heatmap(one);
  CHECK(std::count(single.begin(), single.end(), '#') == 1);
  CHECK(single.find_first_not_of(" \n#") == std::string::npos);

  const RunReport r = run(scenario("canonical_standard"));
  CHECK(render_heatmap(r.pressures.grid()) ==
        slurp(fs::path(BEDSIM_TEST_DATA_DIR) / "canonical_standard_heatmap.txt"));
}

TEST_CASE("runs are deterministic") {
  for (const char* name : {"canonical_standard", "noisy_standard", "canonical_soft"}) {
    const RunReport a = run(scenario(name));
    const RunReport b = run(scenario(name));
    CHECK(report_to_json(a) == report_to_json(b));
    const fs::path da = scratch_dir(std::string(name) + "_a");
    const fs::path db = scratch_dir(std::string(name) + "_b");
    export_csv(a, da.string());
    export_csv(b, db.string());
    for (const char* f : {"pressures.csv", "extensions.csv", "support.csv", "trace.csv"})
      CHECK(slurp(da / f) == slurp(db / f));
  }
  Scenario other = scenario("noisy_standard");
  other.seed = 43;
  CHECK(report_to_json(run(other)) != report_to_json(run(scenario("noisy_standard"))));
}

TEST_CASE("apply_perturbation clamps and clears convergence") {
  const Scenario sc = scenario("canonical_standard");
  LoopState s{Plant::settle(sc.profile, sc.plant, sc.sensor, sc.travel_max_mm), {}, 1, 0};
  s.control.converged = true;
  s.control.in_band_streak = 4;
  apply_perturbation(s, Perturbation{0, Cell{3, 1}, 100.0});
  CHECK(s.plant.bank.extension_mm(3, 1) == 60.0);
  CHECK_FALSE(s.control.converged);
  CHECK(s.control.in_band_streak == 0);
  CHECK(s.plant.equilibrium.forces(3, 1) > 80.0 / 53.0);
}
