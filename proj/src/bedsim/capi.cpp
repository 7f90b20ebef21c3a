#include "bedsim/bedsim.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>

#include <json.hpp>

#include "bedsim/runner.hpp"
#include "bedsim/server.hpp"

struct bedsim_scenario {
  bedsim::Scenario value;
};
struct bedsim_report {
  bedsim::RunReport value;
};
struct bedsim_server {
  std::unique_ptr<bedsim::service::Server> value;
};

namespace {

thread_local std::string g_last_error;
thread_local double g_last_weight = std::numeric_limits<double>::quiet_NaN();

bedsim_status fail(bedsim_status status, const std::string& message) {
  g_last_error = message;
  g_last_weight = std::numeric_limits<double>::quiet_NaN();
  return status;
}

bedsim_status from_error(const bedsim::Error& e) {
  using bedsim::ErrorCode;
  bedsim_status status = BEDSIM_ERR_INTERNAL;
  switch (e.code()) {
    case ErrorCode::Config: status = BEDSIM_ERR_CONFIG; break;
    case ErrorCode::Validation: status = BEDSIM_ERR_VALIDATION; break;
    case ErrorCode::NoContact: status = BEDSIM_ERR_NO_CONTACT; break;
    case ErrorCode::NoBody: status = BEDSIM_ERR_NO_BODY; break;
    case ErrorCode::GateRejected: status = BEDSIM_ERR_GATE_REJECTED; break;
    case ErrorCode::Io: status = BEDSIM_ERR_IO; break;
  }
  fail(status, e.what());
  if (e.weight_kgf()) g_last_weight = *e.weight_kgf();
  return status;
}

template <typename F>
bedsim_status guarded(F&& f) {
  try {
    f();
    return BEDSIM_OK;
  } catch (const bedsim::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return fail(BEDSIM_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* bedsim_version(void) { return "0.1.0"; }

const char* bedsim_status_name(bedsim_status status) {
  switch (status) {
    case BEDSIM_OK: return "ok";
    case BEDSIM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case BEDSIM_ERR_CONFIG: return "config";
    case BEDSIM_ERR_VALIDATION: return "validation";
    case BEDSIM_ERR_NO_CONTACT: return "no_contact";
    case BEDSIM_ERR_NO_BODY: return "no_body";
    case BEDSIM_ERR_GATE_REJECTED: return "gate_rejected";
    case BEDSIM_ERR_IO: return "io";
    case BEDSIM_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* bedsim_last_error(void) { return g_last_error.c_str(); }
double bedsim_last_error_weight(void) { return g_last_weight; }
void bedsim_string_free(char* s) { std::free(s); }

bedsim_status bedsim_scenario_load_file(const char* path, bedsim_scenario** out) {
  if (!path || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new bedsim_scenario{bedsim::load_scenario_file(path)}; });
}

bedsim_status bedsim_scenario_parse(const char* json, bedsim_scenario** out) {
  if (!json || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new bedsim_scenario{bedsim::parse_scenario(json)}; });
}

bedsim_status bedsim_scenario_set_seed(bedsim_scenario* scenario, uint64_t seed) {
  if (!scenario) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null scenario");
  scenario->value.seed = seed;
  return BEDSIM_OK;
}

void bedsim_scenario_free(bedsim_scenario* scenario) { delete scenario; }

bedsim_status bedsim_run(const bedsim_scenario* scenario, bedsim_report** out) {
  if (!scenario || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = new bedsim_report{bedsim::run(scenario->value)}; });
}

int bedsim_report_converged(const bedsim_report* report) {
  return report && report->value.converged ? 1 : 0;
}

bedsim_status bedsim_report_json(const bedsim_report* report, char** out) {
  if (!report || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(bedsim::report_to_json(report->value)); });
}

bedsim_status bedsim_report_heatmap(const bedsim_report* report, char** out) {
  if (!report || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup_string(bedsim::render_heatmap(report->value.pressures.grid())); });
}

bedsim_status bedsim_report_export_csv(const bedsim_report* report, const char* dir) {
  if (!report || !dir) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { bedsim::export_csv(report->value, dir); });
}

void bedsim_report_free(bedsim_report* report) { delete report; }

bedsim_status bedsim_profile_list(char** out_json) {
  if (!out_json) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& name : bedsim::builtin_profile_names()) {
      const auto p = bedsim::builtin_profile(name);
      list.push_back({{"name", name},
                      {"weight_kgf", p.weight_kgf},
                      {"rows", p.spec().rows},
                      {"cols", p.spec().cols},
                      {"body_cells", p.body_cells()}});
    }
    *out_json = dup_string(list.dump(2) + "\n");
  });
}

bedsim_status bedsim_profile_validate_file(const char* path, char** out_json) {
  if (!path || !out_json) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const auto p = bedsim::load_profile_file(path);
    std::size_t contact = 0;
    for (const auto& c : p.clearance_mm.values()) contact += c && *c == 0.0;
    nlohmann::ordered_json doc{{"valid", true},
                               {"name", p.name},
                               {"weight_kgf", p.weight_kgf},
                               {"rows", p.spec().rows},
                               {"cols", p.spec().cols},
                               {"body_cells", p.body_cells()},
                               {"baseline_contact_cells", contact}};
    *out_json = dup_string(doc.dump() + "\n");
  });
}

void bedsim_serve_options_init(bedsim_serve_options* options) {
  if (!options) return;
  options->address = nullptr;
  options->port = bedsim::protocol::kDefaultStreamPort;
  options->ws_port = bedsim::protocol::kDefaultWebSocketPort;
  options->fast = 0;
  options->handle_signals = 0;
}

bedsim_status bedsim_server_create(const bedsim_scenario* scenario,
                                   const bedsim_serve_options* options, bedsim_server** out) {
  if (!scenario || !out) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null argument");
  bedsim_serve_options defaults;
  bedsim_serve_options_init(&defaults);
  const bedsim_serve_options& o = options ? *options : defaults;
  return guarded([&] {
    bedsim::service::ServeOptions so;
    if (o.address) so.address = o.address;
    so.port = o.port;
    so.ws_port = o.ws_port;
    so.fast = o.fast != 0;
    so.handle_signals = o.handle_signals != 0;
    *out = new bedsim_server{std::make_unique<bedsim::service::Server>(scenario->value, so)};
  });
}

bedsim_status bedsim_server_ports(const bedsim_server* server, uint16_t* port, uint16_t* ws_port) {
  if (!server) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null server");
  if (port) *port = server->value->port();
  if (ws_port) *ws_port = server->value->ws_port();
  return BEDSIM_OK;
}

bedsim_status bedsim_server_run(bedsim_server* server) {
  if (!server) return fail(BEDSIM_ERR_INVALID_ARGUMENT, "null server");
  return guarded([&] { server->value->run(); });
}

void bedsim_server_stop(bedsim_server* server) {
  if (server) server->value->stop();
}

void bedsim_server_free(bedsim_server* server) { delete server; }

}  // extern "C"
