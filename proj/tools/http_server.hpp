#pragma once

#include <memory>
#include <string>

#include "sheetgram/sheetgram.h"

namespace httplib {
class Server;
}

namespace sheetgram_tools {

/// Puts an sg_service behind a real HTTP listener, optionally serving static
/// files from a directory at "/".
class http_server {
 public:
  explicit http_server(sg_service* svc, const std::string& static_dir = {});
  ~http_server();

  /// Binds to `port` (0 picks a free one). Returns the bound port or -1.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Returns false if the listener failed.
  bool run();
  void stop();

 private:
  sg_service* svc_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace sheetgram_tools
