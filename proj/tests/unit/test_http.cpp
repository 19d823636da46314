#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "http_server.hpp"

using nlohmann::json;

namespace {

std::string fixture(const std::string& name) {
  std::ifstream in(std::string(SG_FIXTURE_DIR) + "/" + name, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct live_server {
  live_server() {
    REQUIRE(sg_service_create(0, &svc) == SG_OK);
    server = std::make_unique<sheetgram_tools::http_server>(svc);
    port = server->bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    thread = std::thread([this] { server->run(); });
  }
  ~live_server() {
    server->stop();
    thread.join();
    server.reset();
    sg_service_destroy(svc);
  }
  sg_service* svc = nullptr;
  std::unique_ptr<sheetgram_tools::http_server> server;
  int port = 0;
  std::thread thread;
};

}  // namespace

TEST_CASE("browser workflow over a live listener") {
  live_server live;
  httplib::Client cli("127.0.0.1", live.port);
  cli.set_connection_timeout(5);

  auto health = cli.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = cli.Post("/sessions", json{{"facts", fixture("income.facts")}}.dump(), "application/json");
  REQUIRE(created);
  REQUIRE(created->status == 201);
  json body = json::parse(created->body);
  std::string id = body["id"];
  std::string fresh = body["mm"];
  const std::string base = "/sessions/" + id;

  auto grid = cli.Get(base + "/grid");
  REQUIRE(grid);
  CHECK(json::parse(grid->body)["cells"].size() == 12);

  auto loaded = cli.Post(base + "/grammars", json{{"name", "cols"}, {"text", fixture("columns.g")}}.dump(),
                         "application/json");
  REQUIRE(loaded);
  CHECK(loaded->status == 200);

  auto matched = cli.Post(base + "/match", json{{"grammar", "cols"}, {"rule", "column"}}.dump(), "application/json");
  REQUIRE(matched);
  CHECK(json::parse(matched->body)["matches"].size() == 3);

  auto accepted = cli.Post(base + "/commands", json{{"type", "accept"}}.dump(), "application/json");
  REQUIRE(accepted);
  REQUIRE(accepted->status == 200);
  std::string grouped = json::parse(accepted->body)["mm"];
  CHECK(grouped.find("Profit[all t] = Income[t] - Outgoings[t]") != std::string::npos);

  auto exported = cli.Get(base + "/export?format=mm");
  REQUIRE(exported);
  CHECK(exported->body == grouped);

  // Each accepted column pushed a group and a naming frame.
  for (int i = 0; i < 6; ++i) {
    auto undone = cli.Post(base + "/undo", "", "application/json");
    REQUIRE(undone);
    CHECK(undone->status == 200);
  }
  auto state = cli.Get(base);
  REQUIRE(state);
  CHECK(json::parse(state->body)["mm"] == fresh);

  auto bad = cli.Post(base + "/grammars", json{{"name", "bad"}, {"text", "r --> (cell"}}.dump(), "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  CHECK(json::parse(bad->body).contains("column"));

  auto wrong = cli.Put(base + "/grid", "", "application/json");
  REQUIRE(wrong);
  CHECK(wrong->status == 405);

  auto gone = cli.Delete(base);
  REQUIRE(gone);
  CHECK(gone->status == 204);
  auto missing = cli.Get(base);
  REQUIRE(missing);
  CHECK(missing->status == 404);
}
