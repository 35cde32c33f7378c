#include "laydef/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "laydef/error.hpp"
#include "laydef/random.hpp"
#include "laydef/text.hpp"

namespace laydef {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Provenance p) {
  return p == Provenance::expert ? "expert" : "synthetic";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::good: return "good";
    case Verdict::bad: return "bad";
    case Verdict::quarantined: return "quarantined";
  }
  return "";
}

std::optional<Provenance> parse_provenance(std::string_view s) {
  if (s == "expert") return Provenance::expert;
  if (s == "synthetic") return Provenance::synthetic;
  return std::nullopt;
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  if (s == "good") return Verdict::good;
  if (s == "bad") return Verdict::bad;
  if (s == "quarantined") return Verdict::quarantined;
  return std::nullopt;
}

const DataPoint* Dataset::find(std::string_view id) const {
  for (const auto& p : points)
    if (p.id == id) return &p;
  return nullptr;
}

void validate(const DataPoint& dp) {
  if (trim(dp.jargon).empty()) throw ValidationError("point '" + dp.id + "': jargon is empty");
  if (dp.provenance == Provenance::synthetic && !dp.general_definition)
    throw ValidationError("point '" + dp.id + "': synthetic point without general_definition");
}

void validate(const Dataset& d) {
  std::unordered_set<std::string> seen;
  for (const auto& p : d.points) {
    validate(p);
    if (!seen.insert(p.id).second)
      throw DuplicateIdError("dataset '" + d.name + "': duplicate id '" + p.id + "'");
  }
}

ojson to_json(const DataPoint& dp) {
  ojson j = ojson::object();
  j["id"] = dp.id;
  j["jargon"] = dp.jargon;
  j["context"] = dp.context ? ojson(*dp.context) : ojson(nullptr);
  j["lay_definition"] = dp.lay_definition;
  j["general_definition"] = dp.general_definition ? ojson(*dp.general_definition) : ojson(nullptr);
  j["provenance"] = std::string(to_string(dp.provenance));
  j["verdict"] = dp.verdict ? ojson(std::string(to_string(*dp.verdict))) : ojson(nullptr);
  for (const auto& [k, v] : dp.extra.items()) j[k] = v;
  return j;
}

namespace {

std::optional<std::string> optional_string(const ojson& j, const char* key, const std::string& file,
                                           std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ParseError(file, line, std::string("field '") + key + "' must be a string or null");
  return it->get<std::string>();
}

const std::set<std::string>& known_fields() {
  static const std::set<std::string> fields{"id", "jargon", "context", "lay_definition",
                                            "general_definition", "provenance", "verdict"};
  return fields;
}

}  // namespace

DataPoint data_point_from_json(const ojson& j, const std::string& file, std::size_t line) {
  if (!j.is_object()) throw ParseError(file, line, "record is not a JSON object");
  DataPoint dp;
  if (auto id = optional_string(j, "id", file, line)) dp.id = *id;

  auto jargon = optional_string(j, "jargon", file, line);
  if (!jargon) throw ParseError(file, line, "missing required field 'jargon'");
  if (trim(*jargon).empty()) throw ParseError(file, line, "field 'jargon' is empty");
  dp.jargon = *jargon;

  auto lay = optional_string(j, "lay_definition", file, line);
  if (!lay) throw ParseError(file, line, "missing required field 'lay_definition'");
  dp.lay_definition = *lay;

  dp.context = optional_string(j, "context", file, line);
  dp.general_definition = optional_string(j, "general_definition", file, line);

  if (auto p = optional_string(j, "provenance", file, line)) {
    auto parsed = parse_provenance(*p);
    if (!parsed) throw ParseError(file, line, "unknown provenance '" + *p + "'");
    dp.provenance = *parsed;
  }
  if (auto v = optional_string(j, "verdict", file, line)) {
    auto parsed = parse_verdict(*v);
    if (!parsed) throw ParseError(file, line, "unknown verdict '" + *v + "'");
    dp.verdict = *parsed;
  }
  if (dp.provenance == Provenance::synthetic && !dp.general_definition)
    throw ParseError(file, line, "synthetic record without general_definition");

  for (const auto& [k, v] : j.items())
    if (!known_fields().count(k)) dp.extra[k] = v;
  return dp;
}

Dataset parse_dataset(std::string_view text, std::string name, const std::string& file) {
  Dataset d;
  d.name = std::move(name);
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t ordinal = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    ++ordinal;

    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file, line_no, std::string("invalid JSON: ") + e.what());
    }
    DataPoint dp = data_point_from_json(j, file, line_no);
    if (dp.id.empty()) dp.id = d.name + "-" + std::to_string(ordinal);
    if (!ids.insert(dp.id).second)
      throw DuplicateIdError((file.empty() ? d.name : file) + ":" + std::to_string(line_no) +
                             ": duplicate id '" + dp.id + "'");
    d.points.push_back(std::move(dp));
  }
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open dataset file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), std::move(name), path.string());
}

std::string serialize_dataset(const Dataset& d) {
  std::string out;
  for (const auto& p : d.points) {
    out += to_json(p).dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset file " + path.string());
  out << serialize_dataset(d);
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Dedup and rejoin

namespace {

constexpr char kSep = '\x1f';

std::string key_of(std::string_view jargon, std::string_view lay, const std::optional<std::string>& general) {
  std::string k = normalize_whitespace(jargon);
  k += kSep;
  k += normalize_whitespace(lay);
  k += kSep;
  if (general) {
    k += 'G';
    k += normalize_whitespace(*general);
  } else {
    k += 'N';
  }
  return k;
}

std::optional<std::string> normalized(const std::optional<std::string>& s) {
  if (!s) return std::nullopt;
  return normalize_whitespace(*s);
}

bool same_content(const DataPoint& a, const DataPoint& b) {
  return normalize_whitespace(a.jargon) == normalize_whitespace(b.jargon) &&
         normalized(a.context) == normalized(b.context) &&
         normalize_whitespace(a.lay_definition) == normalize_whitespace(b.lay_definition) &&
         normalized(a.general_definition) == normalized(b.general_definition) &&
         a.provenance == b.provenance && a.verdict == b.verdict && a.extra == b.extra;
}

std::string content_key(const DataPoint& p) {
  std::string k = triple_key(p);
  k += kSep;
  k += p.context ? "C" + normalize_whitespace(*p.context) : std::string("N");
  k += kSep;
  k += to_string(p.provenance);
  k += kSep;
  k += p.verdict ? std::string(to_string(*p.verdict)) : std::string("-");
  k += kSep;
  k += p.extra.dump();
  return k;
}

}  // namespace

std::string triple_key(const DataPoint& dp) {
  return key_of(dp.jargon, dp.lay_definition, dp.general_definition);
}

std::string triple_key(const UniqueTriple& t) {
  return key_of(t.jargon, t.lay_definition, t.general_definition);
}

std::vector<UniqueTriple> dedup_unique_triples(const Dataset& d) {
  std::vector<UniqueTriple> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& p : d.points) {
    auto key = triple_key(p);
    auto [it, inserted] = index.emplace(std::move(key), out.size());
    if (inserted) {
      UniqueTriple t;
      t.jargon = normalize_whitespace(p.jargon);
      t.lay_definition = normalize_whitespace(p.lay_definition);
      t.general_definition = normalized(p.general_definition);
      out.push_back(std::move(t));
    }
    out[it->second].member_ids.push_back(p.id);
  }
  return out;
}

Dataset remove_exact_duplicates(const Dataset& d) {
  Dataset out;
  out.name = d.name;
  std::unordered_map<std::string, std::vector<std::size_t>> buckets;
  for (const auto& p : d.points) {
    auto& bucket = buckets[content_key(p)];
    bool dup = false;
    for (auto idx : bucket)
      if (same_content(out.points[idx], p)) dup = true;
    if (dup) continue;
    bucket.push_back(out.points.size());
    out.points.push_back(p);
  }
  return out;
}

Dataset join_triples(const std::vector<UniqueTriple>& triples, const Dataset& original) {
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < original.points.size(); ++i) position.emplace(original.points[i].id, i);

  std::vector<const UniqueTriple*> owner(original.points.size(), nullptr);
  for (const auto& t : triples) {
    for (const auto& id : t.member_ids) {
      auto it = position.find(id);
      if (it == position.end())
        throw IntegrityError("rejoin: triple member '" + id + "' not found in dataset '" + original.name + "'");
      owner[it->second] = &t;
    }
  }

  Dataset joined;
  joined.name = original.name;
  for (std::size_t i = 0; i < original.points.size(); ++i) {
    if (!owner[i]) continue;
    DataPoint p = original.points[i];
    const UniqueTriple& t = *owner[i];
    // Keep the member's own spelling unless the triple actually changed it.
    if (normalized(p.general_definition) != t.general_definition) p.general_definition = t.general_definition;
    if (t.verdict) p.verdict = t.verdict;
    joined.points.push_back(std::move(p));
  }
  return joined;
}

Dataset rejoin_contexts(const std::vector<UniqueTriple>& triples, const Dataset& original) {
  return remove_exact_duplicates(join_triples(triples, original));
}

// ---------------------------------------------------------------------------
// Splitting and mixing

namespace {

std::vector<std::string> distinct_terms(const Dataset& d) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : d.points) {
    auto t = normalize_whitespace(p.jargon);
    if (seen.insert(t).second) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

Split split_by_jargon(const Dataset& expert, const Dataset& synthetic, const SplitSpec& spec) {
  const auto [eval_part, test_part] = spec.eval_test_ratio;
  if (eval_part + test_part == 0) throw PreconditionError("split: eval:test ratio must not be 0:0");

  {
    std::unordered_set<std::string> ids;
    for (const auto* d : {&expert, &synthetic})
      for (const auto& p : d->points)
        if (!ids.insert(p.id).second) throw DuplicateIdError("split: id '" + p.id + "' appears in both inputs");
  }

  const auto expert_terms = distinct_terms(expert);
  std::vector<std::string> synthetic_only;
  {
    std::unordered_set<std::string> in_expert(expert_terms.begin(), expert_terms.end());
    for (auto& t : distinct_terms(synthetic))
      if (!in_expert.count(t)) synthetic_only.push_back(std::move(t));
  }
  const std::size_t available = expert_terms.size() + synthetic_only.size();
  const std::size_t holdout = spec.holdout_term_count;
  if (holdout > available)
    throw CapacityError("split: holdout of " + std::to_string(holdout) + " terms but only " +
                        std::to_string(available) + " distinct terms available");

  // Expert gets the extra term on odd counts; a short side hands its
  // shortfall to the other.
  std::size_t from_expert = std::min((holdout + 1) / 2, expert_terms.size());
  std::size_t from_synthetic = std::min(holdout - from_expert, synthetic_only.size());
  from_expert = holdout - from_synthetic;

  SeededRng rng(spec.seed);
  auto held = rng.sample(expert_terms, from_expert);
  for (auto& t : rng.sample(synthetic_only, from_synthetic)) held.push_back(std::move(t));

  Split out;
  std::unordered_set<std::string> eval_set;
  std::unordered_set<std::string> test_set;
  const unsigned total = eval_part + test_part;
  for (std::size_t i = 0; i < held.size(); ++i) {
    // Term i goes to eval when floor((i+1)*e/total) steps past floor(i*e/total).
    const bool to_eval = ((i + 1) * eval_part) / total > (i * eval_part) / total;
    if (to_eval) {
      eval_set.insert(held[i]);
      out.eval_terms.push_back(held[i]);
    } else {
      test_set.insert(held[i]);
      out.test_terms.push_back(held[i]);
    }
  }

  out.train.name = "train";
  out.eval.name = "eval";
  out.test.name = "test";
  for (const auto* d : {&expert, &synthetic}) {
    for (const auto& p : d->points) {
      const auto term = normalize_whitespace(p.jargon);
      if (eval_set.count(term))
        out.eval.points.push_back(p);
      else if (test_set.count(term))
        out.test.points.push_back(p);
      else
        out.train.points.push_back(p);
    }
  }
  return out;
}

MixResult mix_datasets(const Dataset& expert, const Dataset& synthetic_subset) {
  MixResult r;
  r.dataset.name = expert.name.empty() ? synthetic_subset.name : expert.name + "+" + synthetic_subset.name;
  std::unordered_set<std::string> ids;
  for (const auto& p : expert.points) {
    DataPoint q = p;
    q.provenance = Provenance::expert;
    ids.insert(q.id);
    r.dataset.points.push_back(std::move(q));
  }
  if (!expert.empty() && synthetic_subset.size() < expert.size()) {
    r.warnings.push_back("mix: synthetic subset has " + std::to_string(synthetic_subset.size()) +
                         " points for " + std::to_string(expert.size()) + " expert points; ratio is not 1:1");
  }
  for (const auto& p : synthetic_subset.points) {
    DataPoint q = p;
    if (q.general_definition) {
      q.provenance = Provenance::synthetic;
    } else {
      r.warnings.push_back("mix: point '" + q.id + "' has no general_definition; provenance left as " +
                           std::string(to_string(q.provenance)));
    }
    while (ids.count(q.id)) q.id += "~syn";
    ids.insert(q.id);
    r.dataset.points.push_back(std::move(q));
  }
  return r;
}

}  // namespace laydef
