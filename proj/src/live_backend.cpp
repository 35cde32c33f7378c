#include "laydef/live_backend.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "laydef/error.hpp"

namespace laydef {
namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base_path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint must start with http:// or https://: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  return e;
}

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

RunLog::RunLog(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void RunLog::append(const std::string& json_line) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << json_line << '\n';
}

LiveChatBackend::LiveChatBackend(LiveBackendConfig config)
    : config_(std::move(config)),
      in_flight_(static_cast<std::ptrdiff_t>(config_.max_in_flight == 0 ? 1 : config_.max_in_flight)) {
  split_endpoint(config_.endpoint);
  if (config_.model.empty()) throw ValidationError("live backend needs a model name");
  if (config_.run_log) log_ = std::make_unique<RunLog>(*config_.run_log);
}

LiveChatBackend::~LiveChatBackend() = default;

std::string LiveChatBackend::request_body(const ChatPrompt& prompt, const GenerationConfig& cfg,
                                          const std::string& model) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array();
  if (prompt.system) body["messages"].push_back({{"role", "system"}, {"content", *prompt.system}});
  for (const auto& t : prompt.turns)
    body["messages"].push_back({{"role", t.role == Role::user ? "user" : "assistant"}, {"content", t.content}});
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  return body.dump();
}

void LiveChatBackend::pace() {
  if (config_.min_request_interval.count() <= 0) return;
  std::chrono::steady_clock::time_point start;
  {
    std::lock_guard lock(pace_mutex_);
    const auto now = std::chrono::steady_clock::now();
    start = next_start_ > now ? next_start_ : now;
    next_start_ = start + config_.min_request_interval;
  }
  std::this_thread::sleep_until(start);
}

std::string LiveChatBackend::complete(const ChatPrompt& prompt, const GenerationConfig& cfg) {
  const Endpoint ep = split_endpoint(config_.endpoint);
  const std::string path = ep.base_path + "/chat/completions";
  const std::string body = request_body(prompt, cfg, config_.model);

  auto backoff = config_.initial_backoff;
  std::string last_error;
  const int attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    pace();
    in_flight_.acquire();
    const auto started = std::chrono::steady_clock::now();
    httplib::Result res{nullptr, httplib::Error::Unknown};
    {
      httplib::Client client(ep.origin);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      httplib::Headers headers;
      if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);
      res = client.Post(path, headers, body, "application/json");
    }
    in_flight_.release();
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();

    nlohmann::ordered_json entry;
    entry["ts"] = now_iso8601();
    entry["model"] = config_.model;
    entry["attempt"] = attempt;
    entry["latency_ms"] = latency;

    bool retry = false;
    if (!res) {
      last_error = "connection failed: " + httplib::to_string(res.error());
      entry["status"] = nullptr;
      entry["error"] = last_error;
      retry = true;
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      entry["status"] = res->status;
      entry["error"] = last_error;
      retry = retryable_status(res->status);
    } else {
      entry["status"] = 200;
      try {
        auto j = nlohmann::json::parse(res->body);
        std::string text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
          entry["prompt_tokens"] = j["usage"].value("prompt_tokens", 0);
          entry["completion_tokens"] = j["usage"].value("completion_tokens", 0);
        }
        if (log_) log_->append(entry.dump());
        return text;
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed response: ") + e.what();
        entry["error"] = last_error;
        retry = false;
      }
    }
    if (log_) log_->append(entry.dump());
    if (!retry || attempt == attempts) break;
    spdlog::warn("live backend attempt {}/{} failed ({}); retrying in {} ms", attempt, attempts, last_error,
                 backoff.count());
    std::this_thread::sleep_for(backoff);
    backoff = std::min(config_.max_backoff,
                       std::chrono::milliseconds(static_cast<long>(backoff.count() * config_.backoff_multiplier)));
  }
  throw TransportError("live backend " + config_.endpoint + " failed: " + last_error);
}

}  // namespace laydef
