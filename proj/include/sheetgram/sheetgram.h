#ifndef SHEETGRAM_H
#define SHEETGRAM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define SG_API __declspec(dllexport)
#else
#define SG_API __attribute__((visibility("default")))
#endif

typedef enum sg_status {
  SG_OK = 0,
  SG_ERR_INVALID_ARGUMENT = 1,
  SG_ERR_PARSE = 2,
  SG_ERR_CONFLICT = 3,
  SG_ERR_NOT_FOUND = 4,
  SG_ERR_IO = 5,
  SG_ERR_INTERNAL = 6
} sg_status;

typedef struct sg_session sg_session;
typedef struct sg_service sg_service;

/* Strings returned through char** out-parameters are owned by the caller and
 * must be released with sg_string_free. */
SG_API void sg_string_free(char* s);

/* Message for the last failing call on this thread ("" when none). */
SG_API const char* sg_last_error(void);
/* For parse errors: 1-based line (0 for single-line input) and column. */
SG_API void sg_last_error_position(size_t* line, size_t* column);

SG_API const char* sg_version(void);

/* ---- sessions ---------------------------------------------------------- */

SG_API sg_status sg_session_create(sg_session** out);
SG_API void sg_session_destroy(sg_session* s);

SG_API sg_status sg_session_load_facts(sg_session* s, const char* text);
SG_API sg_status sg_session_load_csv(sg_session* s, const char* text, const char* sheet);
/* diagnostics_json (optional) receives a JSON array of {rule, message}. */
SG_API sg_status sg_session_load_grammar(sg_session* s, const char* name, const char* text, char** diagnostics_json);

/* Runs one JSON command such as {"type":"group","cells":["C2:C4"],"name":"Profit"}
 * and returns the JSON reply, which always carries the current listing in "mm". */
SG_API sg_status sg_session_command(sg_session* s, const char* command_json, char** reply_json);

/* Executes one REPL line. Errors are reported inside `output`; *quit is set
 * to 1 by the quit command. */
SG_API sg_status sg_session_repl(sg_session* s, const char* line, char** output, int* quit);

/* format: "mm", "facts" or "json". */
SG_API sg_status sg_session_export(sg_session* s, const char* format, char** out);

/* ---- one-shot discovery ------------------------------------------------ */

typedef struct sg_discover_options {
  const char* facts;   /* fact file text, or NULL */
  const char* csv;     /* CSV grid text, or NULL */
  const char* sheet;   /* sheet for CSV input; NULL means "Sheet1" */
  const char* grammar; /* grammar text */
  const char* rule;    /* NULL: every rule no other rule refers to */
  const char* emit;    /* "mm" (default) or "json" */
} sg_discover_options;

/* warnings (optional) receives newline-separated warnings, possibly empty. */
SG_API sg_status sg_discover(const sg_discover_options* options, char** output, char** warnings);

/* ---- HTTP routing ------------------------------------------------------- */

/* idle_timeout_seconds <= 0 keeps sessions until deleted. */
SG_API sg_status sg_service_create(long idle_timeout_seconds, sg_service** out);
SG_API void sg_service_destroy(sg_service* svc);

/* Routes one request. `query` is the raw query string without '?', or NULL.
 * Thread-safe. */
SG_API sg_status sg_service_handle(sg_service* svc, const char* method, const char* path, const char* query,
                                   const char* body, size_t body_len, int* status, char** response_body,
                                   char** content_type);

#ifdef __cplusplus
}
#endif

#endif
