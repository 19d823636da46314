#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sheetgram/session.hpp"

namespace sheetgram {

struct http_request {
  std::string method;
  std::string path;
  /// Decoded query parameters.
  std::map<std::string, std::string> query;
  std::string body;
};

struct http_response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Splits and percent-decodes "a=1&b=x%20y".
std::map<std::string, std::string> parse_query(std::string_view raw);

/// Session endpoints, independent of any HTTP transport. Requests for one
/// session run one at a time in arrival order; distinct sessions proceed in
/// parallel.
class service {
 public:
  using clock = std::chrono::steady_clock;

  explicit service(std::optional<std::chrono::seconds> idle_timeout = std::nullopt);

  http_response handle(const http_request& req);

  std::size_t session_count() const;

 private:
  struct entry {
    std::mutex lock;
    session s;
    clock::time_point last_used;
  };

  std::shared_ptr<entry> lookup(const std::string& id);
  std::string create(session s);
  void expire();

  std::optional<std::chrono::seconds> idle_;
  mutable std::mutex lock_;
  std::map<std::string, std::shared_ptr<entry>> sessions_;
};

}  // namespace sheetgram
