#include "http_server.hpp"

#include <httplib.h>

namespace sheetgram_tools {

namespace {

void forward(sg_service* svc, const httplib::Request& req, httplib::Response& res) {
  std::string query;
  if (auto q = req.target.find('?'); q != std::string::npos) query = req.target.substr(q + 1);
  int status = 500;
  char* body = nullptr;
  char* type = nullptr;
  if (sg_service_handle(svc, req.method.c_str(), req.path.c_str(), query.c_str(), req.body.data(), req.body.size(),
                        &status, &body, &type) != SG_OK) {
    res.status = 500;
    res.set_content(std::string("{\"error\":\"") + sg_last_error() + "\"}", "application/json");
    return;
  }
  res.status = status;
  res.set_content(body, type);
  sg_string_free(body);
  sg_string_free(type);
}

}  // namespace

http_server::http_server(sg_service* svc, const std::string& static_dir)
    : svc_(svc), server_(std::make_unique<httplib::Server>()) {
  if (!static_dir.empty()) server_->set_mount_point("/", static_dir);
  auto handler = [this](const httplib::Request& req, httplib::Response& res) { forward(svc_, req, res); };
  server_->Get("/health", handler);
  server_->Get(R"(/sessions(/.*)?)", handler);
  server_->Post(R"(/sessions(/.*)?)", handler);
  server_->Delete(R"(/sessions(/.*)?)", handler);
  server_->Put(R"(/(health|sessions(/.*)?))", handler);
  server_->Patch(R"(/(health|sessions(/.*)?))", handler);
}

http_server::~http_server() = default;

int http_server::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool http_server::run() { return server_->listen_after_bind(); }

void http_server::stop() { server_->stop(); }

}  // namespace sheetgram_tools
