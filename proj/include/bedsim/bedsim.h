/*
 * bedsim: C interface to the body-contouring mattress simulator.
 *
 * Every call returns a bedsim_status. On failure, bedsim_last_error() holds a
 * message for the calling thread until its next failing call. Strings handed
 * out through char** parameters are owned by the caller and released with
 * bedsim_string_free().
 */
#ifndef BEDSIM_BEDSIM_H
#define BEDSIM_BEDSIM_H

#include <stdint.h>

#if defined(_WIN32)
#  if defined(BEDSIM_BUILDING)
#    define BEDSIM_API __declspec(dllexport)
#  else
#    define BEDSIM_API __declspec(dllimport)
#  endif
#else
#  define BEDSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bedsim_status {
  BEDSIM_OK = 0,
  BEDSIM_ERR_INVALID_ARGUMENT = 1, /* null handle or pointer */
  BEDSIM_ERR_CONFIG = 2,
  BEDSIM_ERR_VALIDATION = 3,
  BEDSIM_ERR_NO_CONTACT = 4,
  BEDSIM_ERR_NO_BODY = 5,
  BEDSIM_ERR_GATE_REJECTED = 6,    /* see bedsim_last_error_weight() */
  BEDSIM_ERR_IO = 7,               /* file or socket failure */
  BEDSIM_ERR_INTERNAL = 8
} bedsim_status;

typedef struct bedsim_scenario bedsim_scenario;
typedef struct bedsim_report bedsim_report;
typedef struct bedsim_server bedsim_server;

BEDSIM_API const char* bedsim_version(void);
/* Stable snake_case name, e.g. "gate_rejected". */
BEDSIM_API const char* bedsim_status_name(bedsim_status status);
BEDSIM_API const char* bedsim_last_error(void);
/* Measured weight of the last gate rejection on this thread, NaN otherwise. */
BEDSIM_API double bedsim_last_error_weight(void);
BEDSIM_API void bedsim_string_free(char* s);

/* Scenarios */
BEDSIM_API bedsim_status bedsim_scenario_load_file(const char* path, bedsim_scenario** out);
BEDSIM_API bedsim_status bedsim_scenario_parse(const char* json, bedsim_scenario** out);
BEDSIM_API bedsim_status bedsim_scenario_set_seed(bedsim_scenario* scenario, uint64_t seed);
BEDSIM_API void bedsim_scenario_free(bedsim_scenario* scenario);

/* Headless runs */
BEDSIM_API bedsim_status bedsim_run(const bedsim_scenario* scenario, bedsim_report** out);
BEDSIM_API int bedsim_report_converged(const bedsim_report* report);
BEDSIM_API bedsim_status bedsim_report_json(const bedsim_report* report, char** out);
/* Text heatmap of the final pressures. */
BEDSIM_API bedsim_status bedsim_report_heatmap(const bedsim_report* report, char** out);
/* pressures.csv, extensions.csv, support.csv, trace.csv */
BEDSIM_API bedsim_status bedsim_report_export_csv(const bedsim_report* report, const char* dir);
BEDSIM_API void bedsim_report_free(bedsim_report* report);

/* Body profiles */
BEDSIM_API bedsim_status bedsim_profile_list(char** out_json);
BEDSIM_API bedsim_status bedsim_profile_validate_file(const char* path, char** out_json);

/* Service */
typedef struct bedsim_serve_options {
  const char* address; /* NULL for all interfaces */
  uint16_t port;       /* 0 picks a free port */
  uint16_t ws_port;
  int fast;            /* nonzero: tick unthrottled */
  int handle_signals;  /* nonzero: SIGINT/SIGTERM stop the server */
} bedsim_serve_options;

BEDSIM_API void bedsim_serve_options_init(bedsim_serve_options* options);
BEDSIM_API bedsim_status bedsim_server_create(const bedsim_scenario* scenario,
                                              const bedsim_serve_options* options,
                                              bedsim_server** out);
BEDSIM_API bedsim_status bedsim_server_ports(const bedsim_server* server, uint16_t* port,
                                             uint16_t* ws_port);
/* Blocks until bedsim_server_stop() or a handled signal. */
BEDSIM_API bedsim_status bedsim_server_run(bedsim_server* server);
/* Thread-safe. */
BEDSIM_API void bedsim_server_stop(bedsim_server* server);
BEDSIM_API void bedsim_server_free(bedsim_server* server);

#ifdef __cplusplus
}
#endif

#endif /* BEDSIM_BEDSIM_H */
