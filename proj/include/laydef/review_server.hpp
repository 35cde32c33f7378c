#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "laydef/review.hpp"

namespace httplib {
class Server;
}

namespace laydef {

// Routes:
//   POST /sessions                  create a session
//   GET  /sessions/{id}             session summary
//   GET  /sessions/{id}/next        current item, or {"done": true}
//   POST /sessions/{id}/judgments   judge the current item
//   GET  /sessions/{id}/stats       session statistics
//   GET  /groups/{group}/stats      win rates over a preference group
//   GET  /health
// Errors are {"error": <kind>, "message": ...} with 400 validation,
// 404 not found, 409 conflict, 422 capacity or integrity.
void register_review_routes(httplib::Server& server, ReviewService& service);

struct ReviewServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;  // mounted at /
};

/// Blocks until the server stops.
void serve_review(ReviewService& service, const ReviewServerOptions& options);

}  // namespace laydef
