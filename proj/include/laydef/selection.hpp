#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "laydef/corpus.hpp"
#include "laydef/embedding.hpp"
#include "laydef/prompts.hpp"
#include "laydef/providers.hpp"

namespace laydef {

enum class Strategy { random, syntax, semantic, model };
enum class Direction { top, bottom };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<Direction> parse_direction(std::string_view s);

struct SelectionScore {
  std::string point_id;
  Strategy strategy = Strategy::random;
  double score = 0.0;
  std::size_t rank = 0;  // 1-based

  bool operator==(const SelectionScore&) const = default;
};

struct ExcludedPoint {
  std::string point_id;
  std::string reason;
};

struct ScoringResult {
  std::vector<SelectionScore> scores;  // ordered by rank
  std::vector<ExcludedPoint> excluded;
};

/// Seeded shuffle of the ids in sorted order, so the result does not depend
/// on dataset order. The point at shuffle position p (0-based) gets
/// score N - p and rank p + 1.
ScoringResult score_random(const Dataset& d, std::uint64_t seed);

/// ROUGE-L F1 of general definition against lay definition.
ScoringResult score_syntax(const Dataset& d);

/// Cosine of the two definitions' embeddings.
ScoringResult score_semantic(const Dataset& d, const Embedder& embedder);

/// ROUGE-L F1 of a generated lay definition against the reference one.
ScoringResult score_model(const Dataset& d, GenerationBackend& backend,
                          const TaskSetting& setting = {TaskKind::J_G2L, std::nullopt},
                          const GenerationConfig& cfg = {}, std::size_t concurrency = 1);

/// Sorts by descending score, ties by point id, and assigns ranks 1..N.
std::vector<SelectionScore> rank_scores(std::vector<SelectionScore> scores);

/// Ids at ranks 1..n (top) or N-n+1..N (bottom), in rank order. Throws
/// CapacityError when n exceeds the number of scores.
std::vector<std::string> select(const std::vector<SelectionScore>& scores, std::size_t n, Direction direction);

/// Keeps the points whose ids are listed, in list order.
Dataset subset(const Dataset& d, const std::vector<std::string>& ids);

nlohmann::ordered_json to_json(const SelectionScore& s);
SelectionScore selection_score_from_json(const nlohmann::json& j);
void save_scores(const std::vector<SelectionScore>& scores, const std::filesystem::path& path);
std::vector<SelectionScore> load_scores(const std::filesystem::path& path);

}  // namespace laydef
