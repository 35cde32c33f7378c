#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "laydef/providers.hpp"

namespace laydef {

struct LiveBackendConfig {
  // Base URL up to the API version, e.g. "https://api.openai.com/v1".
  std::string endpoint;
  std::string model;
  std::string api_key;
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};
  std::chrono::seconds timeout{60};
  std::size_t max_in_flight = 4;
  // Minimum spacing between request starts; zero disables.
  std::chrono::milliseconds min_request_interval{0};
  std::optional<std::filesystem::path> run_log;
};

// Appends one JSON object per request to a file.
class RunLog {
 public:
  explicit RunLog(const std::filesystem::path& path);
  void append(const std::string& json_line);

 private:
  std::mutex mutex_;
  std::filesystem::path path_;
};

// Chat-completions client over HTTP(S). Retries connection failures, 429 and
// 5xx with exponential backoff; other 4xx fail immediately.
class LiveChatBackend final : public GenerationBackend {
 public:
  explicit LiveChatBackend(LiveBackendConfig config);
  ~LiveChatBackend() override;

  std::string complete(const ChatPrompt& prompt, const GenerationConfig& cfg) override;
  std::string identity() const override { return "live:" + config_.model; }

  // Request body as sent on the wire.
  static std::string request_body(const ChatPrompt& prompt, const GenerationConfig& cfg, const std::string& model);

 private:
  void pace();

  LiveBackendConfig config_;
  std::unique_ptr<RunLog> log_;
  std::counting_semaphore<> in_flight_;
  std::mutex pace_mutex_;
  std::chrono::steady_clock::time_point next_start_{};
};

}  // namespace laydef
