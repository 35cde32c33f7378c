#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "laydef/corpus.hpp"
#include "laydef/embedding.hpp"

namespace laydef {

struct ConceptEntry {
  std::string term;  // normalized tokens joined by single spaces
  std::string concept_id;
  std::vector<std::string> definitions;
};

using ConceptSet = std::set<std::string>;

// Local stand-in for a biomedical concept dictionary, keyed by the token
// sequence of each term. Immutable once loaded.
class ConceptLexicon {
 public:
  /// Duplicate terms with the same concept id merge their definitions;
  /// a different concept id throws ConflictError.
  void add(std::string_view term, std::string concept_id, std::vector<std::string> definitions);

  const ConceptEntry* find(const std::vector<std::string>& tokens) const;
  std::size_t max_term_tokens() const { return max_term_tokens_; }
  std::size_t size() const { return entries_.size(); }
  ConceptSet all_concept_ids() const;
  const std::map<std::vector<std::string>, ConceptEntry>& entries() const { return entries_; }

 private:
  std::map<std::vector<std::string>, ConceptEntry> entries_;
  std::size_t max_term_tokens_ = 0;
};

ConceptLexicon load_lexicon(const std::filesystem::path& path);
ConceptLexicon parse_lexicon(std::string_view text, const std::string& file = {});

// One piece of a greedy longest-match segmentation: tokens [begin, end) and
// the entry they matched, or nullptr for a single unmatched token.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  const ConceptEntry* entry = nullptr;
};

std::vector<Segment> segment(const std::vector<std::string>& tokens, const ConceptLexicon& lex);

ConceptSet extract_concepts(std::string_view text, const ConceptLexicon& lex);

/// Candidate with the highest cosine to reference (first wins ties), or the
/// first candidate when there is no reference.
const std::string& disambiguate(const std::vector<std::string>& candidates,
                                const std::optional<std::string>& reference, const Embedder& embedder);

/// Comma-joined definitions of each matched span, with unmatched words copied
/// through verbatim. Empty when nothing in the jargon matched.
std::optional<std::string> retrieve_general_definition(std::string_view jargon, const ConceptLexicon& lex,
                                                       const std::optional<std::string>& reference,
                                                       const Embedder& embedder);

// Document frequencies over every lexicon definition plus extra texts.
DocumentFrequency lexicon_document_frequency(const ConceptLexicon& lex, const std::vector<std::string>& extra = {});

struct RetrievalSummary {
  Dataset dataset;
  std::size_t filled = 0;
  std::size_t unmatched = 0;
  std::size_t kept = 0;  // already had a general definition
};

/// Fills general_definition on each point from the lexicon, disambiguating
/// against the point's lay definition. Points that already carry one are
/// left alone unless overwrite is set.
RetrievalSummary retrieve_for_dataset(const Dataset& d, const ConceptLexicon& lex, const Embedder& embedder,
                                      bool overwrite = false);

}  // namespace laydef
