#include <doctest.h>

#include <atomic>
#include <thread>

#include "sheetgram/service.hpp"
#include "support.hpp"

using namespace sheetgram;

namespace {

http_response request(service& svc, const std::string& method, const std::string& path, const json& body = nullptr,
                   const std::string& query = "") {
  http_request req;
  req.method = method;
  req.path = path;
  req.query = parse_query(query);
  if (!body.is_null()) req.body = body.dump();
  return svc.handle(req);
}

json body_of(const http_response& r) { return json::parse(r.body); }

std::string new_session(service& svc) {
  auto r = request(svc, "POST", "/sessions", {{"facts", sgtest::fixture("income.facts")}});
  REQUIRE(r.status == 201);
  return body_of(r)["id"];
}

}  // namespace

TEST_CASE("create a session") {
  service svc;
  auto r = request(svc, "POST", "/sessions", {{"facts", sgtest::fixture("income.facts")}});
  CHECK(r.status == 201);
  CHECK(r.content_type == "application/json");
  json b = body_of(r);
  CHECK(b["id"].is_string());
  CHECK(b["mm"].get<std::string>().rfind("<A1 A2 A3 A4 B1", 0) == 0);
  CHECK(b["grid"]["cells"].size() == 12);
  CHECK(svc.session_count() == 1);

  auto csv = request(svc, "POST", "/sessions", {{"csv", sgtest::fixture("income.csv")}, {"sheet", "Money"}});
  CHECK(csv.status == 201);
  CHECK(body_of(csv)["grid"]["cells"][0]["sheet"] == "Money");

  CHECK(request(svc, "POST", "/sessions", json::object()).status == 201);
  CHECK(request(svc, "POST", "/sessions", {{"facts", 5}}).status == 400);
  CHECK(request(svc, "POST", "/sessions", {{"facts", "x"}, {"csv", "y"}}).status == 400);
  auto bad = request(svc, "POST", "/sessions", {{"facts", "Sheet1\tA\t1\tnum\t1\nSheet1\tB\t2\tformula\t=1+\n"}});
  CHECK(bad.status == 422);
  CHECK(body_of(bad)["line"] == 2);
  CHECK(body_of(bad).contains("column"));

  http_request raw{"POST", "/sessions", {}, "{not json"};
  CHECK(svc.handle(raw).status == 400);
  raw.body = "[1,2]";
  CHECK(svc.handle(raw).status == 400);
}

TEST_CASE("grid kinds") {
  service svc;
  std::string id = new_session(svc);
  auto r = request(svc, "GET", "/sessions/" + id + "/grid");
  REQUIRE(r.status == 200);
  std::map<std::string, std::string> kinds;
  json grid = body_of(r);
  for (const auto& c : grid["cells"])
    kinds[to_a1(address{c["sheet"].get<std::string>(), c["col"].get<int>(), c["row"].get<int>()})] = c["kind"].get<std::string>() + ":" + c["display"].get<std::string>();
  CHECK(kinds["A1"] == "label:Income");
  CHECK(kinds["A2"] == "num:1200");
  CHECK(kinds["A4"] == "num:990.5");
  CHECK(kinds["C2"] == "formula:=A2-B2");

  auto s = request(svc, "POST", "/sessions", {{"facts", "Sheet1\tA\t1\tstr\tx\nSheet1\tB\t1\tformula\t=A1\n"}});
  json cells = body_of(s)["grid"]["cells"];
  CHECK(cells[0]["kind"] == "str");
}

TEST_CASE("status codes") {
  service svc;
  std::string id = new_session(svc);
  std::string base = "/sessions/" + id;

  CHECK(request(svc, "GET", "/health").status == 200);
  CHECK(request(svc, "GET", "/nowhere").status == 404);
  CHECK(request(svc, "GET", "/sessions/feedbeef").status == 404);
  CHECK(request(svc, "POST", "/sessions/feedbeef/commands", {{"type", "undo"}}).status == 404);
  CHECK(request(svc, "GET", base + "/bogus").status == 404);
  CHECK(request(svc, "PUT", base).status == 405);
  CHECK(request(svc, "GET", "/sessions").status == 405);
  CHECK(request(svc, "GET", base + "/commands").status == 405);
  CHECK(request(svc, "POST", "/health").status == 405);

  auto undo = request(svc, "POST", base + "/commands", {{"type", "undo"}});
  CHECK(undo.status == 409);
  CHECK(body_of(undo)["error"] == "nothing to undo");
  CHECK(request(svc, "POST", base + "/undo").status == 409);

  CHECK(request(svc, "POST", base + "/commands", {{"type", "rename"}}).status == 400);
  CHECK(request(svc, "POST", base + "/commands", {{"type", "warp"}}).status == 400);
  CHECK(request(svc, "POST", base + "/commands", {{"type", "rename"}, {"from", "A1"}, {"to", "A2"}}).status == 409);

  auto g = request(svc, "POST", base + "/grammars", {{"name", "x"}, {"text", "ok --> label\nbroken --> label (DOWN"}});
  CHECK(g.status == 422);
  json gb = body_of(g);
  CHECK(gb["line"] == 2);
  CHECK(gb["column"].get<int>() > 0);
  CHECK(gb["message"].is_string());

  CHECK(request(svc, "GET", base + "/export", nullptr, "format=pdf").status == 400);
  CHECK(request(svc, "DELETE", base).status == 204);
  CHECK(request(svc, "GET", base).status == 404);
}

TEST_CASE("suggestion workflow over the API") {
  service svc;
  std::string id = new_session(svc);
  std::string base = "/sessions/" + id;
  std::string fresh = body_of(request(svc, "GET", base))["mm"];

  auto g = request(svc, "POST", base + "/grammars", {{"name", "cols"}, {"text", sgtest::fixture("columns.g")}});
  REQUIRE(g.status == 200);
  CHECK(body_of(g)["diagnostics"].empty());
  auto bad = request(svc, "POST", base + "/grammars", {{"name", "typo"}, {"text", "c --> labell"}});
  CHECK(bad.status == 200);
  CHECK(body_of(bad)["diagnostics"].size() == 1);

  auto m = request(svc, "POST", base + "/match", {{"grammar", "cols"}, {"rule", "column"}});
  REQUIRE(m.status == 200);
  json matches = body_of(m)["matches"];
  REQUIRE(matches.size() == 3);
  for (const char* key : {"rule", "anchor", "bindings", "cells"}) CHECK(matches[0].contains(key));

  auto acc = request(svc, "POST", base + "/commands", {{"type", "accept"}, {"indices", {0, 1, 2}}});
  REQUIRE(acc.status == 200);
  std::string listing = "<Income[1..3] Outgoings[1..3] Profit[1..3]>\nwhere\nProfit[all t] = Income[t] - Outgoings[t]\n";
  CHECK(body_of(acc)["mm"] == listing);

  json state = body_of(request(svc, "GET", base));
  CHECK(state["attributes"].size() == 3);
  CHECK(state["pending"].size() == 3);
  CHECK(state["history"].size() == 6);

  auto exp = request(svc, "GET", base + "/export", nullptr, "format=mm");
  CHECK(exp.status == 200);
  CHECK(exp.body == listing);
  CHECK(exp.content_type.rfind("text/plain", 0) == 0);
  CHECK(request(svc, "GET", base + "/export", nullptr, "format=facts").body == export_facts(sgtest::income()));
  CHECK(request(svc, "GET", base + "/export").body == listing);
  CHECK(json::parse(request(svc, "GET", base + "/export", nullptr, "format=json").body)["mm"] == listing);

  for (int i = 0; i < 6; ++i) REQUIRE(request(svc, "POST", base + "/undo").status == 200);
  CHECK(body_of(request(svc, "GET", base))["mm"] == fresh);
}

TEST_CASE("parse_query") {
  auto q = parse_query("format=mm&x=a%20b+c&flag&=z");
  CHECK(q["format"] == "mm");
  CHECK(q["x"] == "a b c");
  CHECK(q.count("flag") == 1);
  CHECK(parse_query("").empty());
}

TEST_CASE("concurrent requests") {
  service svc;
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(new_session(svc));
  for (const auto& id : ids)
    REQUIRE(request(svc, "POST", "/sessions/" + id + "/grammars", {{"name", "c"}, {"text", sgtest::fixture("columns.g")}})
                .status == 200);

  std::atomic<int> failures{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < 8; ++t) {
    pool.emplace_back([&, t] {
      const std::string base = "/sessions/" + ids[t % ids.size()];
      for (int k = 0; k < 20; ++k) {
        auto r = request(svc, "POST", base + "/commands",
                      {{"type", "group"}, {"name", "g" + std::to_string(t) + "_" + std::to_string(k)}, {"cells", "A2"}});
        if (r.status != 200 && r.status != 409) ++failures;
        auto u = request(svc, "POST", base + "/undo");
        if (u.status != 200 && u.status != 409) ++failures;
        auto s = request(svc, "GET", base);
        if (s.status != 200 || !json::parse(s.body)["mm"].is_string()) ++failures;
      }
    });
  }
  for (auto& th : pool) th.join();
  CHECK(failures == 0);
  for (const auto& id : ids) {
    json st = body_of(request(svc, "GET", "/sessions/" + id));
    CHECK(st["history"].empty());
  }
}

TEST_CASE("idle sessions expire") {
  service svc(std::chrono::seconds(1));
  std::string id = new_session(svc);
  CHECK(request(svc, "GET", "/sessions/" + id).status == 200);
  std::this_thread::sleep_for(std::chrono::milliseconds(2100));
  CHECK(request(svc, "GET", "/sessions/" + id).status == 404);
  CHECK(svc.session_count() == 0);
}
