#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "laydef/corpus.hpp"
#include "laydef/harness.hpp"

namespace laydef {

enum class ReviewMode { quality, preference };

std::string_view to_string(ReviewMode m);
std::optional<ReviewMode> parse_review_mode(std::string_view s);

// What a review service may serve: named datasets for quality review, named
// generation runs plus reference datasets for preference review.
struct ReviewCatalog {
  std::map<std::string, Dataset> datasets;
  std::map<std::string, RunRecord> runs;
};

struct SessionRequest {
  ReviewMode mode = ReviewMode::quality;
  std::string evaluator_id;
  std::size_t sample_size = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> sources;  // quality: dataset names, sampled as one pool
  std::vector<std::string> systems;  // preference: exactly two run names
  std::string refs;                  // preference: dataset holding the expert definitions
  std::string group;                 // preference: defaults to "<system1>-vs-<system2>"
};

SessionRequest session_request_from_json(const nlohmann::json& j);

struct ReviewItem {
  std::string item_id;
  std::string source;  // quality: dataset name
  DataPoint point;     // quality: the reviewed point; preference: the reference point
  // preference only
  std::string left_system;
  std::string right_system;
  std::string left_text;
  std::string right_text;
};

struct ReviewSession {
  std::string id;
  ReviewMode mode = ReviewMode::quality;
  std::string evaluator_id;
  std::string group;
  std::uint64_t seed = 0;
  std::string created_at;
  std::vector<ReviewItem> items;
  std::size_t cursor = 0;

  bool done() const { return cursor >= items.size(); }
};

struct JudgmentInput {
  std::string item_id;
  std::string evaluator_id;  // optional; must match the session when given
  // quality
  std::optional<bool> hard;
  std::optional<bool> soft;
  std::optional<std::string> corrected_lay;
  // preference
  std::optional<Side> choice;
};

JudgmentInput judgment_input_from_json(const nlohmann::json& j);

struct ReviewJudgment {
  std::string session_id;
  std::string item_id;
  std::string evaluator_id;
  std::string timestamp;
  ReviewMode mode = ReviewMode::quality;
  bool hard = false;
  bool soft = false;
  std::optional<std::string> corrected_lay;
  std::string left_system;
  std::string right_system;
  Side choice = Side::left;
};

/// Review state backed by an append-only JSON-lines log. Every accepted
/// session and judgment is flushed and fsynced before the call returns; the
/// constructor replays an existing log. All methods are thread-safe.
class ReviewService {
 public:
  ReviewService(ReviewCatalog catalog, std::filesystem::path log_path);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  /// CapacityError when the sample exceeds the available items;
  /// IntegrityError for an unknown dataset or run.
  ReviewSession create_session(const SessionRequest& request);

  /// Payload of the current item, or nullopt once every item is judged.
  /// Preference payloads carry candidates "A" and "B" only. Never advances.
  std::optional<nlohmann::ordered_json> next_item(const std::string& session_id) const;

  /// Only the current item may be judged: anything else is a ConflictError.
  /// hard without soft is a ValidationError. Returns the acknowledgement.
  nlohmann::ordered_json submit_judgment(const std::string& session_id, const JudgmentInput& judgment);

  nlohmann::ordered_json session_stats(const std::string& session_id) const;
  /// Win rates over every preference session of the group.
  nlohmann::ordered_json group_stats(const std::string& group) const;

  ReviewSession session(const std::string& session_id) const;
  std::vector<ReviewJudgment> judgments() const;

  /// Quality judgments with a corrected lay definition, applied to copies of
  /// the reviewed points. Inputs are never modified.
  Dataset export_corrections() const;

 private:
  void append(const nlohmann::ordered_json& event);
  void apply(const nlohmann::ordered_json& event, std::size_t line);
  const ReviewSession& find(const std::string& session_id) const;

  ReviewCatalog catalog_;
  std::filesystem::path log_path_;
  std::FILE* log_ = nullptr;
  mutable std::mutex mutex_;
  std::map<std::string, ReviewSession> sessions_;
  std::vector<ReviewJudgment> judgments_;
  std::size_t next_session_ = 1;
};

nlohmann::ordered_json to_json(const ReviewSession& s);

}  // namespace laydef
