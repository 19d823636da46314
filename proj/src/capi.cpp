#include "sheetgram/sheetgram.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "sheetgram/error.hpp"
#include "sheetgram/service.hpp"
#include "sheetgram/session.hpp"

struct sg_session {
  sheetgram::session s;
};

struct sg_service {
  explicit sg_service(std::optional<std::chrono::seconds> idle) : svc(idle) {}
  sheetgram::service svc;
};

namespace {

thread_local std::string last_error;
thread_local std::size_t last_line = 0;
thread_local std::size_t last_column = 0;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

sg_status fail(sg_status code, const std::string& msg) {
  last_error = msg;
  return code;
}

template <class F>
sg_status guarded(F&& f) {
  last_error.clear();
  last_line = last_column = 0;
  try {
    f();
    return SG_OK;
  } catch (const sheetgram::parse_error& e) {
    last_line = e.line();
    last_column = e.column();
    return fail(SG_ERR_PARSE, e.what());
  } catch (const sheetgram::error& e) {
    switch (e.code()) {
      case sheetgram::errc::invalid_argument: return fail(SG_ERR_INVALID_ARGUMENT, e.what());
      case sheetgram::errc::parse: return fail(SG_ERR_PARSE, e.what());
      case sheetgram::errc::conflict: return fail(SG_ERR_CONFLICT, e.what());
      case sheetgram::errc::not_found: return fail(SG_ERR_NOT_FOUND, e.what());
      case sheetgram::errc::io: return fail(SG_ERR_IO, e.what());
    }
    return fail(SG_ERR_INTERNAL, e.what());
  } catch (const sheetgram::json::exception& e) {
    return fail(SG_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(SG_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SG_ERR_INTERNAL, "unknown failure");
  }
}

#define SG_REQUIRE(cond, what) \
  if (!(cond)) return fail(SG_ERR_INVALID_ARGUMENT, what)

}  // namespace

extern "C" {

void sg_string_free(char* s) { std::free(s); }

const char* sg_last_error(void) { return last_error.c_str(); }

void sg_last_error_position(size_t* line, size_t* column) {
  if (line) *line = last_line;
  if (column) *column = last_column;
}

const char* sg_version(void) { return "0.1.0"; }

sg_status sg_session_create(sg_session** out) {
  SG_REQUIRE(out, "out must not be null");
  return guarded([&] { *out = new sg_session(); });
}

void sg_session_destroy(sg_session* s) { delete s; }

sg_status sg_session_load_facts(sg_session* s, const char* text) {
  SG_REQUIRE(s && text, "session and text must not be null");
  return guarded([&] { s->s.load_facts(text); });
}

sg_status sg_session_load_csv(sg_session* s, const char* text, const char* sheet) {
  SG_REQUIRE(s && text, "session and text must not be null");
  return guarded([&] { s->s.load_csv(text, sheet ? sheet : "Sheet1"); });
}

sg_status sg_session_load_grammar(sg_session* s, const char* name, const char* text, char** diagnostics_json) {
  SG_REQUIRE(s && name && text, "session, name and text must not be null");
  return guarded([&] {
    auto diags = s->s.load_grammar(name, text);
    if (diagnostics_json) *diagnostics_json = dup(sheetgram::diagnostics_json(diags).dump());
  });
}

sg_status sg_session_command(sg_session* s, const char* command_json, char** reply_json) {
  SG_REQUIRE(s && command_json && reply_json, "session, command and reply must not be null");
  return guarded([&] {
    auto cmd = sheetgram::json::parse(command_json, nullptr, false);
    if (cmd.is_discarded()) throw sheetgram::bad_payload("command is not valid JSON");
    *reply_json = dup(s->s.execute(cmd).dump());
  });
}

sg_status sg_session_repl(sg_session* s, const char* line, char** output, int* quit) {
  SG_REQUIRE(s && line && output, "session, line and output must not be null");
  return guarded([&] {
    bool q = false;
    *output = dup(sheetgram::repl_execute(s->s, line, q));
    if (quit) *quit = q ? 1 : 0;
  });
}

sg_status sg_session_export(sg_session* s, const char* format, char** out) {
  SG_REQUIRE(s && format && out, "session, format and out must not be null");
  return guarded([&] { *out = dup(s->s.export_as(format)); });
}

sg_status sg_discover(const sg_discover_options* options, char** output, char** warnings) {
  SG_REQUIRE(options && output, "options and output must not be null");
  SG_REQUIRE(options->grammar, "a grammar is required");
  return guarded([&] {
    sheetgram::discover_input in;
    if (options->facts) in.facts = options->facts;
    if (options->csv) in.csv = options->csv;
    if (options->sheet) in.sheet = options->sheet;
    in.grammar = options->grammar;
    if (options->rule) in.rule = options->rule;
    if (options->emit) in.emit = options->emit;
    auto result = sheetgram::discover(in);
    std::string joined;
    for (const auto& w : result.warnings) joined += w + "\n";
    *output = dup(result.text);
    if (warnings) *warnings = dup(joined);
  });
}

sg_status sg_service_create(long idle_timeout_seconds, sg_service** out) {
  SG_REQUIRE(out, "out must not be null");
  return guarded([&] {
    std::optional<std::chrono::seconds> idle;
    if (idle_timeout_seconds > 0) idle = std::chrono::seconds(idle_timeout_seconds);
    *out = new sg_service(idle);
  });
}

void sg_service_destroy(sg_service* svc) { delete svc; }

sg_status sg_service_handle(sg_service* svc, const char* method, const char* path, const char* query,
                            const char* body, size_t body_len, int* status, char** response_body,
                            char** content_type) {
  SG_REQUIRE(svc && method && path && status && response_body, "service, method, path and outputs must not be null");
  return guarded([&] {
    sheetgram::http_request req;
    req.method = method;
    req.path = path;
    if (query) req.query = sheetgram::parse_query(query);
    if (body) req.body.assign(body, body_len);
    auto resp = svc->svc.handle(req);
    *status = resp.status;
    *response_body = dup(resp.body);
    if (content_type) *content_type = dup(resp.content_type);
  });
}

}  // extern "C"
