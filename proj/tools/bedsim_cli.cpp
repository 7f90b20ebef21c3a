// bedsim command line: headless runs, the protocol service and profile tools.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bedsim/bedsim.h"

namespace {

// Exit codes.
constexpr int kConverged = 0;
constexpr int kFailure = 1;
constexpr int kNotConverged = 2;
constexpr int kGateRejected = 3;
constexpr int kValidation = 4;

int exit_code_for(bedsim_status s) {
  switch (s) {
    case BEDSIM_OK: return kConverged;
    case BEDSIM_ERR_GATE_REJECTED: return kGateRejected;
    case BEDSIM_ERR_CONFIG:
    case BEDSIM_ERR_VALIDATION:
    case BEDSIM_ERR_NO_BODY:
    case BEDSIM_ERR_NO_CONTACT: return kValidation;
    default: return kFailure;
  }
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

// Machine-readable failure line on stdout, human line on stderr.
int report_failure(bedsim_status s) {
  std::cout << "{\"status\":\"" << bedsim_status_name(s) << "\",\"message\":\""
            << json_escape(bedsim_last_error()) << "\"";
  const double w = bedsim_last_error_weight();
  if (s == BEDSIM_ERR_GATE_REJECTED && !std::isnan(w)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", w);
    std::cout << ",\"weight_kgf\":" << buf;
  }
  std::cout << "}\n";
  std::cerr << "bedsim: " << bedsim_last_error() << "\n";
  return exit_code_for(s);
}

// Takes ownership of a C string from the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  bedsim_string_free(s);
  return out;
}

bedsim_status load_scenario(const std::string& path, bedsim_scenario** out) {
  bedsim_status s = bedsim_scenario_load_file(path.c_str(), out);
  if (s != BEDSIM_OK) return s;
  if (const char* env = std::getenv("BEDSIM_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long seed = std::strtoull(env, &end, 10);
    if (*end != '\0') {
      std::cerr << "bedsim: ignoring non-numeric BEDSIM_SEED '" << env << "'\n";
    } else {
      bedsim_scenario_set_seed(*out, static_cast<std::uint64_t>(seed));
    }
  }
  return BEDSIM_OK;
}

int cmd_run(const std::string& scenario_path, const std::string& csv_dir, bool heatmap) {
  bedsim_scenario* scenario = nullptr;
  if (auto s = load_scenario(scenario_path, &scenario); s != BEDSIM_OK) return report_failure(s);
  bedsim_report* report = nullptr;
  bedsim_status s = bedsim_run(scenario, &report);
  bedsim_scenario_free(scenario);
  if (s != BEDSIM_OK) return report_failure(s);

  int code = bedsim_report_converged(report) ? kConverged : kNotConverged;
  char* text = nullptr;
  if ((s = bedsim_report_json(report, &text)) == BEDSIM_OK) std::cout << take(text);
  if (s == BEDSIM_OK && !csv_dir.empty()) s = bedsim_report_export_csv(report, csv_dir.c_str());
  if (s == BEDSIM_OK && heatmap) {
    if ((s = bedsim_report_heatmap(report, &text)) == BEDSIM_OK) std::cerr << take(text);
  }
  bedsim_report_free(report);
  if (s != BEDSIM_OK) return report_failure(s);
  return code;
}

int cmd_serve(const std::string& scenario_path, const std::string& address, int port, int ws_port,
              bool fast) {
  bedsim_scenario* scenario = nullptr;
  if (auto s = load_scenario(scenario_path, &scenario); s != BEDSIM_OK) return report_failure(s);
  bedsim_serve_options opts;
  bedsim_serve_options_init(&opts);
  opts.address = address.c_str();
  opts.port = static_cast<std::uint16_t>(port);
  opts.ws_port = static_cast<std::uint16_t>(ws_port);
  opts.fast = fast ? 1 : 0;
  opts.handle_signals = 1;

  bedsim_server* server = nullptr;
  bedsim_status s = bedsim_server_create(scenario, &opts, &server);
  bedsim_scenario_free(scenario);
  if (s != BEDSIM_OK) return report_failure(s);
  std::uint16_t bound = 0;
  std::uint16_t ws_bound = 0;
  bedsim_server_ports(server, &bound, &ws_bound);
  std::cout << "{\"status\":\"listening\",\"port\":" << bound << ",\"ws_port\":" << ws_bound
            << "}" << std::endl;
  s = bedsim_server_run(server);
  bedsim_server_free(server);
  if (s != BEDSIM_OK) return report_failure(s);
  std::cout << "{\"status\":\"stopped\"}" << std::endl;
  return 0;
}

int cmd_profile_validate(const std::string& path) {
  char* text = nullptr;
  if (auto s = bedsim_profile_validate_file(path.c_str(), &text); s != BEDSIM_OK) {
    return report_failure(s);
  }
  std::cout << take(text);
  return 0;
}

int cmd_profile_list() {
  char* text = nullptr;
  if (auto s = bedsim_profile_list(&text); s != BEDSIM_OK) return report_failure(s);
  std::cout << take(text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bedsim - pressure-sensing mattress simulator and controller"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bedsim_version()));

  std::string scenario;
  std::string csv_dir;
  bool heatmap = false;
  auto* run = app.add_subcommand("run", "Run a scenario headless and print the JSON report");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required();
  run->add_option("--csv", csv_dir, "Directory for pressures/extensions/support/trace CSV files");
  run->add_flag("--heatmap", heatmap, "Print a text heatmap of the final pressures to stderr");

  std::string address = "0.0.0.0";
  int port = 7470;
  int ws_port = 7471;
  bool fast = false;
  auto* serve = app.add_subcommand("serve", "Host the control loop for remote consoles");
  serve->add_option("--scenario", scenario, "Scenario JSON file")->required();
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--port", port, "Stream (newline-delimited) port, 0 for any")
      ->check(CLI::Range(0, 65535));
  serve->add_option("--ws-port", ws_port, "WebSocket port, 0 for any")->check(CLI::Range(0, 65535));
  serve->add_flag("--fast", fast, "Tick as fast as possible instead of in real time");

  auto* profile = app.add_subcommand("profile", "Body profile tools");
  profile->require_subcommand(1);
  std::string profile_path;
  auto* validate = profile->add_subcommand("validate", "Validate a profile document");
  validate->add_option("file", profile_path, "Profile JSON file")->required();
  auto* list = profile->add_subcommand("list", "List built-in profiles");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidation;
  }

  if (*run) return cmd_run(scenario, csv_dir, heatmap);
  if (*serve) return cmd_serve(scenario, address, port, ws_port, fast);
  if (*validate) return cmd_profile_validate(profile_path);
  if (*list) return cmd_profile_list();
  return kFailure;
}
