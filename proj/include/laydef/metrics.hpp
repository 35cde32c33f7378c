#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "laydef/lexicon.hpp"

namespace laydef {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static PRF from(double precision, double recall);
};

/// Clipped n-gram overlap over tokenize() output. n must be >= 1.
PRF rouge_n(std::string_view candidate, std::string_view reference, int n);
PRF rouge_l(std::string_view candidate, std::string_view reference);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct MeteorAlignment {
  // (candidate index, reference index) pairs, sorted by candidate index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t chunks = 0;
};

struct MeteorScore {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f_mean = 0.0;
  double penalty = 0.0;
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Exact stage, then Porter-stem stage over what is left. Each stage keeps
/// the maximum number of matches and, among those, the fewest chunks.
MeteorAlignment meteor_align(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);
MeteorScore meteor_detail(std::string_view candidate, std::string_view reference);
double meteor(std::string_view candidate, std::string_view reference);

/// Concept-set overlap between generated and reference text.
PRF umls_f1(std::string_view candidate, std::string_view reference, const ConceptLexicon& lex);
PRF concept_prf(const ConceptSet& generated, const ConceptSet& reference);

struct ScoredPair {
  std::string id;
  std::string candidate;
  std::string reference;
};

struct ItemMetrics {
  std::string id;
  PRF rouge1;
  PRF rouge2;
  PRF rougeL;
  double meteor = 0.0;
  PRF umls;
  double fkgl = 0.0;
};

struct MetricReport {
  std::vector<ItemMetrics> per_item;
  ItemMetrics aggregate;  // id is "aggregate"; every field is the item mean
};

MetricReport evaluate_pairs(const std::vector<ScoredPair>& pairs, const ConceptLexicon& lex);
ItemMetrics aggregate_items(const std::vector<ItemMetrics>& items);

nlohmann::ordered_json to_json(const PRF& prf);
nlohmann::ordered_json to_json(const ItemMetrics& m);
nlohmann::ordered_json to_json(const MetricReport& r);

/// Rows are labelled reports; columns ROUGE1/ROUGE2/ROUGEL/METEOR/UMLS-F1
/// as F1 x 100 with two decimals, then mean FKGL.
std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows,
                                std::string_view corner = "");

}  // namespace laydef
