#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "laydef/corpus.hpp"
#include "laydef/lexicon.hpp"
#include "laydef/metrics.hpp"
#include "laydef/prompts.hpp"
#include "laydef/providers.hpp"

namespace laydef {

struct GeneratedOutput {
  std::string point_id;
  std::string text;

  bool operator==(const GeneratedOutput&) const = default;
};

struct SkippedPoint {
  std::string point_id;
  std::string reason;

  bool operator==(const SkippedPoint&) const = default;
};

struct RunRecord {
  std::string run_id;
  TaskSetting setting;
  GenerationConfig cfg;
  std::string backend;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // empty while running
  std::vector<GeneratedOutput> outputs;  // input order
  std::vector<SkippedPoint> skipped;
};

enum class SkipPolicy {
  fail,  // any point missing a required field aborts before generation
  skip,  // such points are listed in RunRecord::skipped
};

struct RunOptions {
  std::string run_id;  // defaults to the setting label
  SkipPolicy skip_policy = SkipPolicy::fail;
  std::size_t concurrency = 1;
  PromptOptions prompt;
  // When set: run.json is written before any generation, then prompts.jsonl
  // and outputs.jsonl. Completed outputs go to checkpoint.json on failure and
  // are reused by the next run in the same directory.
  std::optional<std::filesystem::path> dir;
};

RunRecord run_generation(const Dataset& d, const TaskSetting& setting, GenerationBackend& backend,
                         const GenerationConfig& cfg, const RunOptions& options = {});

nlohmann::ordered_json run_metadata(const RunRecord& run);
RunRecord load_run(const std::filesystem::path& dir);

/// Throws IntegrityError naming the first output id missing from refs.
MetricReport evaluate_run(const RunRecord& run, const Dataset& refs, const ConceptLexicon& lex);

struct ReadabilityRow {
  int target = 0;
  std::optional<double> mean_fkgl;  // empty when no run covers the target
  std::size_t outputs = 0;
};

struct ReadabilityReport {
  std::vector<ReadabilityRow> rows;  // targets 1..12
  std::vector<int> missing_targets;
  // Mean over present rows of |mean FKGL - target|.
  std::optional<double> mean_abs_deviation;
};

/// One run per target. Throws ValidationError for a run that is not a
/// readability run, or two runs for one target.
ReadabilityReport readability_report(const std::vector<RunRecord>& runs);

/// "[X]" column of targets, one column per system, four decimals; absent
/// rows print "missing". A final "MAD" row carries the deviation summary.
std::string format_readability_table(const std::vector<std::pair<std::string, ReadabilityReport>>& systems);

nlohmann::ordered_json to_json(const ReadabilityReport& r);

enum class Side { left, right };

std::string_view to_string(Side s);
std::optional<Side> parse_side(std::string_view s);

struct PreferenceJudgment {
  std::string group;  // comparison id, e.g. "ours-vs-gpt4"
  std::string evaluator_id;
  std::string item_id;
  std::string left_system;
  std::string right_system;
  Side choice = Side::left;

  const std::string& chosen_system() const { return choice == Side::left ? left_system : right_system; }
};

struct WinRate {
  std::size_t total = 0;
  std::map<std::string, std::size_t> wins;  // every system seen in the group
  std::map<std::string, double> rates;
};

/// Every judgment counts once; nothing is merged per item or per evaluator.
/// Throws UndefinedInputError when the group has no judgments.
WinRate win_rate(const std::vector<PreferenceJudgment>& judgments, std::string_view group);

nlohmann::ordered_json to_json(const WinRate& w);

}  // namespace laydef
