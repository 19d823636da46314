#include "sheetgram/service.hpp"

#include <random>
#include <set>
#include <vector>

#include "sheetgram/error.hpp"

namespace sheetgram {

namespace {

http_response reply(int status, const json& body) { return {status, body.dump() + "\n", "application/json"}; }

http_response error_reply(int status, const std::string& message) { return reply(status, json{{"error", message}}); }

http_response parse_error_reply(const parse_error& e) {
  json body{{"error", e.what()}, {"message", e.message()}, {"column", e.column()}};
  if (e.line()) body["line"] = e.line();
  return reply(422, body);
}

std::vector<std::string> segments(std::string_view path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    std::size_t j = path.find('/', i);
    if (j == std::string_view::npos) j = path.size();
    if (j > i) out.emplace_back(path.substr(i, j - i));
    i = j;
  }
  return out;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw bad_payload("request body is not valid JSON");
  if (!j.is_object()) throw bad_payload("request body must be a JSON object");
  return j;
}

std::string new_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* hex = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 16; ++i) id += hex[rng() & 15];
  return id;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_query(std::string_view raw) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i <= raw.size()) {
    std::size_t amp = raw.find('&', i);
    if (amp == std::string_view::npos) amp = raw.size();
    std::string_view pair = raw.substr(i, amp - i);
    if (!pair.empty()) {
      std::size_t eq = pair.find('=');
      if (eq == std::string_view::npos)
        out[percent_decode(pair)] = "";
      else
        out[percent_decode(pair.substr(0, eq))] = percent_decode(pair.substr(eq + 1));
    }
    i = amp + 1;
  }
  return out;
}

service::service(std::optional<std::chrono::seconds> idle_timeout) : idle_(idle_timeout) {}

std::size_t service::session_count() const {
  std::lock_guard<std::mutex> g(lock_);
  return sessions_.size();
}

void service::expire() {
  if (!idle_) return;
  auto now = clock::now();
  std::lock_guard<std::mutex> g(lock_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    std::unique_lock<std::mutex> busy(it->second->lock, std::try_to_lock);
    if (busy && now - it->second->last_used > *idle_)
      it = sessions_.erase(it);
    else
      ++it;
  }
}

std::shared_ptr<service::entry> service::lookup(const std::string& id) {
  std::lock_guard<std::mutex> g(lock_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::string service::create(session s) {
  auto e = std::make_shared<entry>();
  e->s = std::move(s);
  e->last_used = clock::now();
  std::lock_guard<std::mutex> g(lock_);
  std::string id;
  do id = new_id();
  while (sessions_.count(id));
  sessions_.emplace(id, std::move(e));
  return id;
}

http_response service::handle(const http_request& req) {
  expire();
  auto seg = segments(req.path);
  try {
    if (seg.size() == 1 && seg[0] == "health") {
      if (req.method != "GET") return error_reply(405, "method not allowed");
      return reply(200, json{{"status", "ok"}});
    }
    if (seg.empty() || seg[0] != "sessions") return error_reply(404, "no such endpoint: " + req.path);

    if (seg.size() == 1) {
      if (req.method != "POST") return error_reply(405, "method not allowed");
      json body = parse_body(req.body);
      session s;
      auto opt = [&](const char* key) -> const json* {
        auto it = body.find(key);
        if (it == body.end() || it->is_null()) return nullptr;
        if (!it->is_string()) throw bad_payload(std::string("field '") + key + "' must be a string");
        return &*it;
      };
      const json* facts = opt("facts");
      const json* csv = opt("csv");
      const json* sheet = opt("sheet");
      if (facts && csv) throw bad_payload("give either 'facts' or 'csv', not both");
      if (csv)
        s.load_csv(csv->get<std::string>(), sheet ? sheet->get<std::string>() : "Sheet1");
      else if (facts)
        s.load_facts(facts->get<std::string>());
      json out{{"mm", emit_mm(s.current())}, {"grid", grid_json(s.facts())}};
      out["id"] = create(std::move(s));
      return reply(201, out);
    }

    auto e = lookup(seg[1]);
    if (!e) return error_reply(404, "unknown session '" + seg[1] + "'");
    if (seg.size() == 2 && req.method == "DELETE") {
      std::lock_guard<std::mutex> g(lock_);
      sessions_.erase(seg[1]);
      return {204, "", "application/json"};
    }

    std::lock_guard<std::mutex> busy(e->lock);
    e->last_used = clock::now();
    session& s = e->s;
    const std::string what = seg.size() > 2 ? seg[2] : "";
    if (seg.size() > 3) return error_reply(404, "no such endpoint: " + req.path);

    auto state = [&] {
      return json{{"mm", emit_mm(s.current())},
                  {"model", model_json(s.current())},
                  {"attributes", model_json(s.current())["attributes"]},
                  {"history", s.history()}};
    };

    static const std::set<std::string> endpoints{"", "grid", "export", "grammars", "match", "commands", "undo"};
    if (!endpoints.count(what)) return error_reply(404, "no such endpoint: " + req.path);

    if (what.empty()) {
      if (req.method != "GET") return error_reply(405, "method not allowed");
      json out = state();
      json pending = json::array();
      for (const auto& m : s.pending()) pending.push_back(match_json(m));
      out["pending"] = std::move(pending);
      return reply(200, out);
    }
    if (what == "grid") {
      if (req.method != "GET") return error_reply(405, "method not allowed");
      return reply(200, grid_json(s.facts()));
    }
    if (what == "export") {
      if (req.method != "GET") return error_reply(405, "method not allowed");
      auto it = req.query.find("format");
      std::string format = it == req.query.end() ? "mm" : it->second;
      if (format != "mm" && format != "facts" && format != "json")
        return error_reply(400, "unknown export format '" + format + "'");
      return {200, s.export_as(format), format == "json" ? "application/json" : "text/plain; charset=utf-8"};
    }
    if (req.method != "POST") return error_reply(405, "method not allowed");
    json body = parse_body(req.body);
    if (what == "grammars") {
      json cmd = body;
      cmd["type"] = "grammar";
      json out = s.execute(cmd);
      return reply(200, json{{"diagnostics", out["diagnostics"]}, {"mm", out["mm"]}});
    }
    if (what == "match") {
      json cmd = body;
      cmd["type"] = "match";
      json out = s.execute(cmd);
      return reply(200, json{{"matches", out["matches"]}, {"mm", out["mm"]}});
    }
    if (what == "commands") return reply(200, s.execute(body));
    if (what == "undo") return reply(200, s.execute(json{{"type", "undo"}}));
    return error_reply(404, "no such endpoint: " + req.path);
  } catch (const parse_error& e) {
    return parse_error_reply(e);
  } catch (const bad_payload& e) {
    return error_reply(400, e.what());
  } catch (const error& e) {
    if (e.code() == errc::io) return error_reply(500, e.what());
    return error_reply(409, e.what());
  } catch (const json::exception& e) {
    return error_reply(400, e.what());
  } catch (const std::exception& e) {
    return error_reply(500, e.what());
  }
}

}  // namespace sheetgram
