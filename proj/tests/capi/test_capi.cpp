#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <thread>

#include "bedsim/bedsim.h"

namespace {

std::string scenario_path(const char* name) {
  return std::string(BEDSIM_SCENARIO_DIR) + "/" + name + ".json";
}

std::string take(char* s) {
  std::string out = s ? s : "";
  bedsim_string_free(s);
  return out;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(bedsim_version()) > 0);
  CHECK(std::string(bedsim_status_name(BEDSIM_OK)) == "ok");
  CHECK(std::string(bedsim_status_name(BEDSIM_ERR_GATE_REJECTED)) == "gate_rejected");
  CHECK(std::string(bedsim_status_name(static_cast<bedsim_status>(99))) == "unknown");
}

TEST_CASE("null arguments are rejected") {
  CHECK(bedsim_scenario_load_file(nullptr, nullptr) == BEDSIM_ERR_INVALID_ARGUMENT);
  CHECK(bedsim_run(nullptr, nullptr) == BEDSIM_ERR_INVALID_ARGUMENT);
  CHECK(bedsim_report_converged(nullptr) == 0);
  bedsim_scenario_free(nullptr);
  bedsim_report_free(nullptr);
  bedsim_string_free(nullptr);
}

TEST_CASE("run a scenario through the C API") {
  bedsim_scenario* sc = nullptr;
  REQUIRE(bedsim_scenario_load_file(scenario_path("canonical_standard").c_str(), &sc) == BEDSIM_OK);
  bedsim_report* report = nullptr;
  REQUIRE(bedsim_run(sc, &report) == BEDSIM_OK);
  CHECK(bedsim_report_converged(report) == 1);

  char* text = nullptr;
  REQUIRE(bedsim_report_json(report, &text) == BEDSIM_OK);
  const auto doc = nlohmann::json::parse(take(text));
  CHECK(doc["support_size"] == 53);
  CHECK(std::abs(doc["final_target_kgf"].get<double>() - 1.5094) < 1e-4);

  REQUIRE(bedsim_report_heatmap(report, &text) == BEDSIM_OK);
  CHECK(take(text).find('#') != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "bedsim_capi_csv";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  CHECK(bedsim_report_export_csv(report, dir.string().c_str()) == BEDSIM_OK);
  CHECK(std::filesystem::exists(dir / "pressures.csv"));
  CHECK(bedsim_report_export_csv(report, (dir / "pressures.csv" / "deeper").string().c_str()) == BEDSIM_ERR_IO);

  bedsim_report_free(report);
  bedsim_scenario_free(sc);
}

TEST_CASE("errors carry a message and the gate weight") {
  bedsim_scenario* sc = nullptr;
  CHECK(bedsim_scenario_load_file("/nonexistent/x.json", &sc) == BEDSIM_ERR_IO);
  CHECK(sc == nullptr);
  CHECK(std::strlen(bedsim_last_error()) > 0);

  CHECK(bedsim_scenario_parse("{\"name\":\"x\",\"profile\":\"adult_supine_80\",\"max_ticks\":0}", &sc) ==
        BEDSIM_ERR_VALIDATION);

  REQUIRE(bedsim_scenario_load_file(scenario_path("toy_gate").c_str(), &sc) == BEDSIM_OK);
  bedsim_report* report = nullptr;
  CHECK(bedsim_run(sc, &report) == BEDSIM_ERR_GATE_REJECTED);
  CHECK(report == nullptr);
  CHECK(bedsim_last_error_weight() == doctest::Approx(10.0).epsilon(0.01));
  bedsim_scenario_free(sc);
}

TEST_CASE("seed override changes noisy runs only through the seed") {
  bedsim_scenario* sc = nullptr;
  REQUIRE(bedsim_scenario_load_file(scenario_path("noisy_standard").c_str(), &sc) == BEDSIM_OK);
  auto run_json = [&] {
    bedsim_report* r = nullptr;
    REQUIRE(bedsim_run(sc, &r) == BEDSIM_OK);
    char* text = nullptr;
    REQUIRE(bedsim_report_json(r, &text) == BEDSIM_OK);
    bedsim_report_free(r);
    return take(text);
  };
  const std::string first = run_json();
  CHECK(run_json() == first);
  REQUIRE(bedsim_scenario_set_seed(sc, 7) == BEDSIM_OK);
  const std::string seven = run_json();
  CHECK(seven != first);
  CHECK(nlohmann::json::parse(seven)["seed"] == 7);
  bedsim_scenario_free(sc);
}

TEST_CASE("profiles") {
  char* text = nullptr;
  REQUIRE(bedsim_profile_list(&text) == BEDSIM_OK);
  const auto names = nlohmann::json::parse(take(text));
  CHECK(names.is_array());
  CHECK(std::any_of(names.begin(), names.end(), [](const auto& p) { return p["name"] == "adult_supine_80"; }));

  const auto path = std::filesystem::temp_directory_path() / "bedsim_capi_profile.json";
  {
    std::FILE* f = std::fopen(path.string().c_str(), "w");
    std::fputs(R"({"name":"bad","weight_kgf":3,"grid":{"rows":1,"cols":2},"clearance_mm":[[0,-1]]})", f);
    std::fclose(f);
  }
  CHECK(bedsim_profile_validate_file(path.string().c_str(), &text) == BEDSIM_ERR_VALIDATION);
  CHECK(std::string(bedsim_last_error()).find("(0,1)") != std::string::npos);
}

TEST_CASE("server lifecycle") {
  bedsim_scenario* sc = nullptr;
  REQUIRE(bedsim_scenario_load_file(scenario_path("canonical_standard").c_str(), &sc) == BEDSIM_OK);
  bedsim_serve_options opts;
  bedsim_serve_options_init(&opts);
  CHECK(opts.port == 7470);
  CHECK(opts.ws_port == 7471);
  opts.address = "127.0.0.1";
  opts.port = 0;
  opts.ws_port = 0;
  opts.fast = 1;
  bedsim_server* server = nullptr;
  REQUIRE(bedsim_server_create(sc, &opts, &server) == BEDSIM_OK);
  std::uint16_t port = 0, ws_port = 0;
  CHECK(bedsim_server_ports(server, &port, &ws_port) == BEDSIM_OK);
  CHECK(port != 0);
  CHECK(ws_port != 0);
  CHECK(port != ws_port);

  bedsim_server* clash = nullptr;
  bedsim_serve_options same = opts;
  same.port = port;
  CHECK(bedsim_server_create(sc, &same, &clash) == BEDSIM_ERR_IO);

  std::thread t([&] { CHECK(bedsim_server_run(server) == BEDSIM_OK); });
  bedsim_server_stop(server);
  t.join();
  bedsim_server_free(server);
  bedsim_scenario_free(sc);
}
