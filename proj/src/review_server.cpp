#include "laydef/review_server.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "laydef/error.hpp"

namespace laydef {

using nlohmann::ordered_json;

namespace {

void reply(httplib::Response& res, int status, const ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view kind, std::string_view message) {
  reply(res, status, {{"error", kind}, {"message", message}});
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ValidationError& e) {
      reply_error(res, 400, "validation", e.what());
    } catch (const NotFoundError& e) {
      reply_error(res, 404, "not_found", e.what());
    } catch (const ConflictError& e) {
      reply_error(res, 409, "conflict", e.what());
    } catch (const CapacityError& e) {
      reply_error(res, 422, "capacity", e.what());
    } catch (const IntegrityError& e) {
      reply_error(res, 422, "integrity", e.what());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      reply_error(res, 500, "internal", e.what());
    }
  };
}

nlohmann::json body_json(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

void register_review_routes(httplib::Server& server, ReviewService& service) {
  server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
               reply(res, 200, {{"status", "ok"}});
             }));

  server.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const auto s = service.create_session(session_request_from_json(body_json(req)));
                reply(res, 201, to_json(s));
              }));

  server.Get(R"(/sessions/([^/]+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, to_json(service.session(req.matches[1])));
             }));

  server.Get(R"(/sessions/([^/]+)/next)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               auto item = service.next_item(req.matches[1]);
               reply(res, 200, item ? *item : ordered_json{{"session_id", req.matches[1]}, {"done", true}});
             }));

  server.Post(R"(/sessions/([^/]+)/judgments)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                reply(res, 201, service.submit_judgment(req.matches[1], judgment_input_from_json(body_json(req))));
              }));

  server.Get(R"(/sessions/([^/]+)/stats)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, service.session_stats(req.matches[1]));
             }));

  server.Get(R"(/groups/([^/]+)/stats)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, service.group_stats(req.matches[1]));
             }));
}

void serve_review(ReviewService& service, const ReviewServerOptions& options) {
  httplib::Server server;
  register_review_routes(server, service);
  if (options.static_dir && !server.set_mount_point("/", options.static_dir->string()))
    throw NotFoundError("static directory " + options.static_dir->string() + " does not exist");
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    spdlog::info("{} {} -> {}", req.method, req.path, res.status);
  });
  spdlog::info("review service listening on {}:{}", options.host, options.port);
  if (!server.listen(options.host, options.port))
    throw Error("cannot listen on " + options.host + ":" + std::to_string(options.port));
}

}  // namespace laydef
