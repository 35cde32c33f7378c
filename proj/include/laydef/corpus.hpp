#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace laydef {

enum class Provenance { expert, synthetic };
enum class Verdict { good, bad, quarantined };

std::string_view to_string(Provenance p);
std::string_view to_string(Verdict v);
std::optional<Provenance> parse_provenance(std::string_view s);
std::optional<Verdict> parse_verdict(std::string_view s);

// One (jargon, context, lay definition, general definition) record.
struct DataPoint {
  std::string id;
  std::string jargon;
  std::optional<std::string> context;
  std::string lay_definition;
  std::optional<std::string> general_definition;
  Provenance provenance = Provenance::expert;
  std::optional<Verdict> verdict;
  // Fields this library does not know about, kept for round trips.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  bool operator==(const DataPoint&) const = default;
};

struct Dataset {
  std::string name;
  std::vector<DataPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const DataPoint* find(std::string_view id) const;
};

// Throws ValidationError when a point breaks a DataPoint invariant.
void validate(const DataPoint& dp);
// validate() on every point plus id uniqueness (DuplicateIdError).
void validate(const Dataset& d);

nlohmann::ordered_json to_json(const DataPoint& dp);
// line is only used for diagnostics.
DataPoint data_point_from_json(const nlohmann::ordered_json& j, const std::string& file = {},
                               std::size_t line = 0);

/// Reads one JSON object per line. Blank lines are skipped. Records without
/// an id get "<name>-<ordinal>" where ordinal is the 1-based record number.
Dataset load_dataset(const std::filesystem::path& path, std::string name);
Dataset parse_dataset(std::string_view text, std::string name, const std::string& file = {});

void save_dataset(const Dataset& d, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& d);

// Points sharing (jargon, lay definition, general definition) after
// whitespace normalization.
struct UniqueTriple {
  std::string jargon;
  std::string lay_definition;
  std::optional<std::string> general_definition;
  std::optional<Verdict> verdict;
  std::vector<std::string> member_ids;
};

// Stable string key of a point's normalized triple.
std::string triple_key(const DataPoint& dp);
std::string triple_key(const UniqueTriple& t);

std::vector<UniqueTriple> dedup_unique_triples(const Dataset& d);

/// Copies triple-level fields (verdict, changed general definition) onto every
/// member point. Output keeps the original order and covers only members of
/// some triple. Throws IntegrityError for dangling member ids.
Dataset join_triples(const std::vector<UniqueTriple>& triples, const Dataset& original);

/// join_triples() followed by exact-duplicate removal. Output keeps the
/// original order, covers only members of some triple, and drops exact
/// duplicates (every field but the id equal after normalization).
Dataset rejoin_contexts(const std::vector<UniqueTriple>& triples, const Dataset& original);

/// Drops points equal to an earlier point on every field but the id.
Dataset remove_exact_duplicates(const Dataset& d);

struct SplitSpec {
  std::size_t holdout_term_count = 1000;
  std::pair<unsigned, unsigned> eval_test_ratio{1, 1};
  std::uint64_t seed = 0;
};

struct Split {
  Dataset train;
  Dataset eval;
  Dataset test;
  std::vector<std::string> eval_terms;
  std::vector<std::string> test_terms;
};

/// Jargon-disjoint train/eval/test split. Terms are compared after
/// whitespace normalization, case preserved.
Split split_by_jargon(const Dataset& expert, const Dataset& synthetic, const SplitSpec& spec);

struct MixResult {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// expert followed by synthetic_subset. Colliding synthetic ids get a
/// "~syn" suffix; provenance is set from the side each point came from.
MixResult mix_datasets(const Dataset& expert, const Dataset& synthetic_subset);

}  // namespace laydef
