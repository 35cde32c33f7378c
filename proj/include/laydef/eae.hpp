#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "laydef/corpus.hpp"
#include "laydef/providers.hpp"

namespace laydef {

struct ExaminerVerdict {
  Verdict label = Verdict::quarantined;
  std::string raw_response;
  // Offset of the yes/no token in raw_response; empty when quarantined.
  std::optional<std::size_t> parsed_from;
};

/// First case-insensitive "answer" followed by optional ':'/whitespace and
/// then yes or no; failing that, a yes/no at the very start; otherwise
/// quarantined.
ExaminerVerdict parse_examiner_response(std::string_view response);

// The fixed instruction and seven worked examples sent ahead of every item.
const std::string& examiner_preamble();

ChatPrompt examiner_prompt(std::string_view jargon, std::string_view general_definition,
                           std::string_view lay_definition);
ChatPrompt augmenter_prompt(std::string_view jargon);

/// Removes a leading "general definition :" label, any spacing around the colon.
std::string strip_general_definition_label(std::string_view completion);

/// Throws PreconditionError when dp has no general definition.
ExaminerVerdict examine(const DataPoint& dp, GenerationBackend& backend, const GenerationConfig& cfg);

/// Copy of dp with a synthesized general definition, synthetic provenance and
/// no verdict.
DataPoint augment(const DataPoint& dp, GenerationBackend& backend, const GenerationConfig& cfg);

struct EaeOptions {
  std::size_t concurrency = 1;
  // Call the model once per unique (jargon, lay, general) triple and copy the
  // answer to every member.
  bool dedup = true;
  // Per-item results are persisted here and reused on the next run.
  std::optional<std::filesystem::path> checkpoint;
};

struct ExamineResult {
  Dataset good;
  Dataset bad;
  Dataset quarantine;
  std::size_t calls = 0;
  std::size_t unique_items = 0;
};

struct YieldStats {
  std::size_t input_points = 0;
  std::size_t input_triples = 0;
  std::size_t exp_good = 0;
  std::size_t exp_bad = 0;
  std::size_t quarantine = 0;
  std::size_t syn = 0;
  std::size_t syn_triples = 0;
  std::size_t syn_good = 0;
  std::size_t syn_bad = 0;
  std::size_t syn_quarantine = 0;
  std::size_t examiner_calls = 0;
  std::size_t augmenter_calls = 0;

  double exp_good_ratio() const;
  double syn_good_ratio() const;
};

nlohmann::ordered_json to_json(const YieldStats& s);

struct EaeResult {
  Dataset exp_good;
  Dataset exp_bad;
  Dataset quarantine;  // unparseable verdicts on the expert pass
  Dataset syn;
  Dataset syn_good;
  Dataset syn_bad;
  Dataset syn_quarantine;  // unparseable verdicts on the synthetic pass
  YieldStats stats;
};

// Points without a general definition are routed to bad without a call.
ExamineResult examine_dataset(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                              const EaeOptions& options = {}, std::string_view stage = "examine");
Dataset augment_dataset(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                        const EaeOptions& options = {}, std::string_view stage = "augment");

/// Examine, augment the rejects, examine the synthetic versions.
EaeResult run_eae(const Dataset& input, GenerationBackend& examiner, GenerationBackend& augmenter,
                  const GenerationConfig& cfg, const EaeOptions& options = {});
EaeResult run_eae(const Dataset& input, GenerationBackend& backend, const GenerationConfig& cfg,
                  const EaeOptions& options = {});

/// Writes <dir>/<bucket>.jsonl for every bucket plus <dir>/stats.json.
void write_eae_result(const EaeResult& r, const std::filesystem::path& dir);

}  // namespace laydef
