#include "laydef/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "laydef/error.hpp"
#include "laydef/text.hpp"

namespace laydef {

void ConceptLexicon::add(std::string_view term, std::string concept_id, std::vector<std::string> definitions) {
  auto tokens = tokenize(term);
  if (tokens.empty()) throw ValidationError("lexicon: term '" + std::string(term) + "' has no tokens");
  if (definitions.empty()) throw ValidationError("lexicon: term '" + std::string(term) + "' has no definitions");
  for (const auto& d : definitions)
    if (trim(d).empty()) throw ValidationError("lexicon: term '" + std::string(term) + "' has an empty definition");

  auto it = entries_.find(tokens);
  if (it != entries_.end()) {
    if (it->second.concept_id != concept_id)
      throw ConflictError("lexicon: term '" + it->second.term + "' maps to both " + it->second.concept_id +
                          " and " + concept_id);
    auto& defs = it->second.definitions;
    for (auto& d : definitions)
      if (std::find(defs.begin(), defs.end(), d) == defs.end()) defs.push_back(std::move(d));
    return;
  }
  max_term_tokens_ = std::max(max_term_tokens_, tokens.size());
  ConceptEntry e{join(tokens, " "), std::move(concept_id), std::move(definitions)};
  entries_.emplace(std::move(tokens), std::move(e));
}

const ConceptEntry* ConceptLexicon::find(const std::vector<std::string>& tokens) const {
  auto it = entries_.find(tokens);
  return it == entries_.end() ? nullptr : &it->second;
}

ConceptSet ConceptLexicon::all_concept_ids() const {
  ConceptSet ids;
  for (const auto& [_, e] : entries_) ids.insert(e.concept_id);
  return ids;
}

ConceptLexicon parse_lexicon(std::string_view text, const std::string& file) {
  ConceptLexicon lex;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(file, line_no, "record is not a JSON object");
    if (!j.contains("term") || !j["term"].is_string()) throw ParseError(file, line_no, "missing string field 'term'");
    if (!j.contains("concept_id") || !j["concept_id"].is_string())
      throw ParseError(file, line_no, "missing string field 'concept_id'");
    if (!j.contains("definitions") || !j["definitions"].is_array())
      throw ParseError(file, line_no, "missing array field 'definitions'");
    std::vector<std::string> defs;
    for (const auto& d : j["definitions"]) {
      if (!d.is_string()) throw ParseError(file, line_no, "definitions must be strings");
      defs.push_back(d.get<std::string>());
    }
    try {
      lex.add(j["term"].get<std::string>(), j["concept_id"].get<std::string>(), std::move(defs));
    } catch (const ConflictError& e) {
      throw ConflictError((file.empty() ? std::string("<input>") : file) + ":" + std::to_string(line_no) + ": " +
                          e.what());
    } catch (const ValidationError& e) {
      throw ParseError(file, line_no, e.what());
    }
  }
  return lex;
}

ConceptLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open lexicon file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_lexicon(buf.str(), path.string());
}

std::vector<Segment> segment(const std::vector<std::string>& tokens, const ConceptLexicon& lex) {
  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(lex.max_term_tokens(), tokens.size() - i);
    const ConceptEntry* hit = nullptr;
    std::size_t len = 0;
    for (std::size_t k = longest; k >= 1 && !hit; --k) {
      std::vector<std::string> span(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                    tokens.begin() + static_cast<std::ptrdiff_t>(i + k));
      if (const auto* e = lex.find(span)) {
        hit = e;
        len = k;
      }
    }
    if (hit) {
      out.push_back({i, i + len, hit});
      i += len;
    } else {
      out.push_back({i, i + 1, nullptr});
      ++i;
    }
  }
  return out;
}

ConceptSet extract_concepts(std::string_view text, const ConceptLexicon& lex) {
  ConceptSet ids;
  for (const auto& s : segment(tokenize(text), lex))
    if (s.entry) ids.insert(s.entry->concept_id);
  return ids;
}

const std::string& disambiguate(const std::vector<std::string>& candidates,
                                const std::optional<std::string>& reference, const Embedder& embedder) {
  if (candidates.empty()) throw PreconditionError("disambiguate: no candidate definitions");
  if (!reference || candidates.size() == 1) return candidates.front();
  const auto ref = embedder.embed(*reference);
  std::size_t best = 0;
  double best_score = cosine(embedder.embed(candidates[0]), ref);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = cosine(embedder.embed(candidates[i]), ref);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return candidates[best];
}

std::optional<std::string> retrieve_general_definition(std::string_view jargon, const ConceptLexicon& lex,
                                                       const std::optional<std::string>& reference,
                                                       const Embedder& embedder) {
  const auto spans = tokenize_spans(jargon);
  std::vector<std::string> tokens;
  tokens.reserve(spans.size());
  for (const auto& s : spans) tokens.push_back(s.token);

  std::vector<std::string> pieces;
  bool matched = false;
  for (const auto& seg : segment(tokens, lex)) {
    if (seg.entry) {
      matched = true;
      pieces.push_back(disambiguate(seg.entry->definitions, reference, embedder));
    } else {
      const auto& s = spans[seg.begin];
      pieces.emplace_back(jargon.substr(s.begin, s.end - s.begin));
    }
  }
  if (!matched) return std::nullopt;
  return join(pieces, ", ");
}

DocumentFrequency lexicon_document_frequency(const ConceptLexicon& lex, const std::vector<std::string>& extra) {
  std::vector<std::string> texts;
  for (const auto& [_, e] : lex.entries()) texts.insert(texts.end(), e.definitions.begin(), e.definitions.end());
  texts.insert(texts.end(), extra.begin(), extra.end());
  return DocumentFrequency::build(texts);
}

RetrievalSummary retrieve_for_dataset(const Dataset& d, const ConceptLexicon& lex, const Embedder& embedder,
                                      bool overwrite) {
  RetrievalSummary r;
  r.dataset = d;
  for (auto& p : r.dataset.points) {
    if (p.general_definition && !overwrite) {
      ++r.kept;
      continue;
    }
    auto g = retrieve_general_definition(p.jargon, lex, p.lay_definition, embedder);
    if (g) {
      p.general_definition = std::move(g);
      ++r.filled;
    } else {
      p.general_definition.reset();
      ++r.unmatched;
    }
  }
  return r;
}

}  // namespace laydef
