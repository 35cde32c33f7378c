#include "laydef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "laydef/error.hpp"
#include "laydef/stemmer.hpp"
#include "laydef/text.hpp"

namespace laydef {

PRF PRF::from(double precision, double recall) {
  PRF r{precision, recall, 0.0};
  if (precision + recall > 0.0) r.f1 = 2.0 * precision * recall / (precision + recall);
  return r;
}

namespace {

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
  std::map<std::vector<std::string>, int> counts;
  const auto un = static_cast<std::size_t>(n);
  if (tokens.size() < un) return counts;
  for (std::size_t i = 0; i + un <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + un))];
  return counts;
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

PRF rouge_n(std::string_view candidate, std::string_view reference, int n) {
  if (n < 1) throw PreconditionError("rouge_n: n must be >= 1");
  const auto cand = ngram_counts(tokenize(candidate), n);
  const auto ref = ngram_counts(tokenize(reference), n);
  int cand_total = 0;
  int ref_total = 0;
  int overlap = 0;
  for (const auto& [g, c] : cand) {
    cand_total += c;
    auto it = ref.find(g);
    if (it != ref.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : ref) ref_total += c;
  if (cand_total == 0 || ref_total == 0) return {};
  return PRF::from(ratio(overlap, cand_total), ratio(overlap, ref_total));
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PRF rouge_l(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() || ref.empty()) return {};
  const auto l = static_cast<double>(lcs_length(cand, ref));
  return PRF::from(l / static_cast<double>(cand.size()), l / static_cast<double>(ref.size()));
}

// ---------------------------------------------------------------------------
// METEOR alignment

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr long kNodeBudget = 200000;

// Branch-and-bound search for one matching stage. Candidate positions are
// decided left to right; each either takes a free reference position with the
// same key or is skipped when its key has surplus candidates.
class StageSearch {
 public:
  StageSearch(const std::vector<std::string>& cand_keys, const std::vector<std::string>& ref_keys,
              std::vector<std::size_t> fixed)
      : cand_keys_(cand_keys), ref_keys_(ref_keys), assign_(std::move(fixed)) {
    ref_used_.assign(ref_keys_.size(), false);
    for (std::size_t i = 0; i < assign_.size(); ++i) {
      if (assign_[i] != kNone) {
        ref_used_[assign_[i]] = true;
        fixed_.insert(i);
      }
    }

    std::map<std::string, std::size_t> cand_count;
    std::map<std::string, std::size_t> ref_count;
    for (std::size_t i = 0; i < cand_keys_.size(); ++i)
      if (assign_[i] == kNone) ++cand_count[cand_keys_[i]];
    for (std::size_t j = 0; j < ref_keys_.size(); ++j)
      if (!ref_used_[j]) ++ref_count[ref_keys_[j]];
    for (const auto& [k, c] : cand_count) {
      auto it = ref_count.find(k);
      if (it == ref_count.end()) continue;
      skips_allowed_[k] = c > it->second ? c - it->second : 0;
    }
    for (std::size_t i = 0; i < cand_keys_.size(); ++i)
      if (assign_[i] == kNone && skips_allowed_.count(cand_keys_[i])) order_.push_back(i);
    position_in_order_.assign(cand_keys_.size(), kNone);
    for (std::size_t s = 0; s < order_.size(); ++s) position_in_order_[order_[s]] = s;

    // A link joins candidate positions c and c+1. Those with an undecided
    // endpoint can still become adjacencies; bound_[s] counts the ones
    // decided at step >= s.
    bound_.assign(order_.size() + 1, 0);
    for (std::size_t c = 0; c + 1 < cand_keys_.size(); ++c) {
      const bool a_live = assign_[c] != kNone || position_in_order_[c] != kNone;
      const bool b_live = assign_[c + 1] != kNone || position_in_order_[c + 1] != kNone;
      if (!a_live || !b_live) continue;
      std::size_t decided_at = 0;
      bool undecided = false;
      for (auto p : {c, c + 1}) {
        if (position_in_order_[p] != kNone) {
          decided_at = std::max(decided_at, position_in_order_[p]);
          undecided = true;
        }
      }
      if (undecided) ++bound_[decided_at];
    }
    for (std::size_t s = order_.size(); s-- > 0;) bound_[s] += bound_[s + 1];
  }

  std::vector<std::size_t> run() {
    best_ = assign_;
    best_adj_ = -1;
    dfs(0, 0);
    return best_;
  }

 private:
  int gain(std::size_t i, std::size_t j) const {
    int g = 0;
    if (i > 0 && j > 0 && assign_[i - 1] == j - 1) ++g;
    if (i + 1 < assign_.size() && fixed_.count(i + 1) && assign_[i + 1] == j + 1) ++g;
    return g;
  }

  void dfs(std::size_t step, int adj) {
    if (++nodes_ > kNodeBudget && best_adj_ >= 0) return;
    if (adj + static_cast<int>(bound_[step]) <= best_adj_) return;
    if (step == order_.size()) {
      best_adj_ = adj;
      best_ = assign_;
      return;
    }
    const std::size_t i = order_[step];
    const std::string& key = cand_keys_[i];

    // Preferred first: the reference slot right after the previous match.
    std::vector<std::size_t> options;
    if (i > 0 && assign_[i - 1] != kNone) {
      const std::size_t j = assign_[i - 1] + 1;
      if (j < ref_keys_.size() && !ref_used_[j] && ref_keys_[j] == key) options.push_back(j);
    }
    for (std::size_t j = 0; j < ref_keys_.size(); ++j)
      if (!ref_used_[j] && ref_keys_[j] == key && (options.empty() || options.front() != j)) options.push_back(j);

    for (auto j : options) {
      assign_[i] = j;
      ref_used_[j] = true;
      dfs(step + 1, adj + gain(i, j));
      ref_used_[j] = false;
      assign_[i] = kNone;
    }
    auto& skips = skips_used_[key];
    if (skips < skips_allowed_.at(key) || options.empty()) {
      ++skips;
      dfs(step + 1, adj);
      --skips;
    }
  }

  const std::vector<std::string>& cand_keys_;
  const std::vector<std::string>& ref_keys_;
  std::vector<std::size_t> assign_;
  std::vector<bool> ref_used_;
  std::unordered_set<std::size_t> fixed_;
  std::map<std::string, std::size_t> skips_allowed_;
  std::map<std::string, std::size_t> skips_used_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_in_order_;
  std::vector<std::size_t> bound_;
  std::vector<std::size_t> best_;
  int best_adj_ = -1;
  long nodes_ = 0;
};

std::size_t count_chunks(const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  if (pairs.empty()) return 0;
  std::size_t chunks = 1;
  for (std::size_t k = 1; k < pairs.size(); ++k)
    if (!(pairs[k].first == pairs[k - 1].first + 1 && pairs[k].second == pairs[k - 1].second + 1)) ++chunks;
  return chunks;
}

}  // namespace

MeteorAlignment meteor_align(const std::vector<std::string>& candidate, const std::vector<std::string>& reference) {
  std::vector<std::size_t> assign(candidate.size(), kNone);
  assign = StageSearch(candidate, reference, assign).run();

  std::vector<std::string> cand_stems;
  std::vector<std::string> ref_stems;
  for (const auto& t : candidate) cand_stems.push_back(porter_stem(t));
  for (const auto& t : reference) ref_stems.push_back(porter_stem(t));
  assign = StageSearch(cand_stems, ref_stems, assign).run();

  MeteorAlignment out;
  for (std::size_t i = 0; i < assign.size(); ++i)
    if (assign[i] != kNone) out.pairs.emplace_back(i, assign[i]);
  out.chunks = count_chunks(out.pairs);
  return out;
}

MeteorScore meteor_detail(std::string_view candidate, std::string_view reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  MeteorScore s;
  if (cand.empty() || ref.empty()) return s;
  const auto alignment = meteor_align(cand, ref);
  s.matches = alignment.pairs.size();
  s.chunks = alignment.chunks;
  if (s.matches == 0) return s;
  const double m = static_cast<double>(s.matches);
  s.precision = m / static_cast<double>(cand.size());
  s.recall = m / static_cast<double>(ref.size());
  s.f_mean = 10.0 * s.precision * s.recall / (s.recall + 9.0 * s.precision);
  s.penalty = 0.5 * std::pow(static_cast<double>(s.chunks) / m, 3.0);
  s.score = s.f_mean * (1.0 - s.penalty);
  return s;
}

double meteor(std::string_view candidate, std::string_view reference) {
  return meteor_detail(candidate, reference).score;
}

// ---------------------------------------------------------------------------

PRF concept_prf(const ConceptSet& generated, const ConceptSet& reference) {
  std::size_t common = 0;
  for (const auto& c : generated)
    if (reference.count(c)) ++common;
  const double n = static_cast<double>(common);
  return PRF::from(ratio(n, static_cast<double>(generated.size())), ratio(n, static_cast<double>(reference.size())));
}

PRF umls_f1(std::string_view candidate, std::string_view reference, const ConceptLexicon& lex) {
  return concept_prf(extract_concepts(candidate, lex), extract_concepts(reference, lex));
}

namespace {

double fkgl_or_nan(std::string_view text) {
  if (tokenize(text).empty()) return std::numeric_limits<double>::quiet_NaN();
  return fkgl(text);
}

}  // namespace

ItemMetrics aggregate_items(const std::vector<ItemMetrics>& items) {
  if (items.empty()) throw UndefinedInputError("aggregate: no items");
  ItemMetrics a;
  a.id = "aggregate";
  const double n = static_cast<double>(items.size());
  auto add = [n](PRF& acc, const PRF& x) {
    acc.precision += x.precision / n;
    acc.recall += x.recall / n;
    acc.f1 += x.f1 / n;
  };
  double fk_sum = 0.0;
  std::size_t fk_n = 0;
  for (const auto& m : items) {
    add(a.rouge1, m.rouge1);
    add(a.rouge2, m.rouge2);
    add(a.rougeL, m.rougeL);
    add(a.umls, m.umls);
    a.meteor += m.meteor / n;
    if (!std::isnan(m.fkgl)) {
      fk_sum += m.fkgl;
      ++fk_n;
    }
  }
  a.fkgl = fk_n ? fk_sum / static_cast<double>(fk_n) : std::numeric_limits<double>::quiet_NaN();
  return a;
}

MetricReport evaluate_pairs(const std::vector<ScoredPair>& pairs, const ConceptLexicon& lex) {
  if (pairs.empty()) throw UndefinedInputError("evaluate: no pairs to aggregate");
  std::unordered_set<std::string> ids;
  for (const auto& p : pairs)
    if (!ids.insert(p.id).second) throw DuplicateIdError("evaluate: duplicate item id '" + p.id + "'");

  MetricReport r;
  r.per_item.reserve(pairs.size());
  for (const auto& p : pairs) {
    ItemMetrics m;
    m.id = p.id;
    m.rouge1 = rouge_n(p.candidate, p.reference, 1);
    m.rouge2 = rouge_n(p.candidate, p.reference, 2);
    m.rougeL = rouge_l(p.candidate, p.reference);
    m.meteor = meteor(p.candidate, p.reference);
    m.umls = umls_f1(p.candidate, p.reference, lex);
    m.fkgl = fkgl_or_nan(p.candidate);
    r.per_item.push_back(std::move(m));
  }
  r.aggregate = aggregate_items(r.per_item);
  return r;
}

nlohmann::ordered_json to_json(const PRF& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

nlohmann::ordered_json to_json(const ItemMetrics& m) {
  nlohmann::ordered_json j;
  j["id"] = m.id;
  j["rouge1"] = to_json(m.rouge1);
  j["rouge2"] = to_json(m.rouge2);
  j["rougeL"] = to_json(m.rougeL);
  j["meteor"] = m.meteor;
  j["umls"] = to_json(m.umls);
  j["fkgl"] = std::isnan(m.fkgl) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(m.fkgl);
  return j;
}

nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["per_item"] = nlohmann::ordered_json::array();
  for (const auto& m : r.per_item) j["per_item"].push_back(to_json(m));
  auto agg = to_json(r.aggregate);
  agg.erase("id");
  agg["items"] = r.per_item.size();
  j["aggregate"] = agg;
  return j;
}

std::string format_metric_table(const std::vector<std::pair<std::string, MetricReport>>& rows,
                                std::string_view corner) {
  const std::vector<std::string> headers{"ROUGE1", "ROUGE2", "ROUGEL", "METEOR", "UMLS-F1", "FKGL"};
  std::vector<std::vector<std::string>> cells;
  auto fixed2 = [](double v) {
    if (std::isnan(v)) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
  };
  for (const auto& [label, report] : rows) {
    const auto& a = report.aggregate;
    cells.push_back({label, fixed2(a.rouge1.f1 * 100), fixed2(a.rouge2.f1 * 100), fixed2(a.rougeL.f1 * 100),
                     fixed2(a.meteor * 100), fixed2(a.umls.f1 * 100), fixed2(a.fkgl)});
  }

  std::vector<std::size_t> width(headers.size() + 1, 0);
  width[0] = corner.size();
  for (std::size_t c = 0; c < headers.size(); ++c) width[c + 1] = headers[c].size();
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& row) {
    os << std::left << std::setw(static_cast<int>(width[0])) << row[0];
    for (std::size_t c = 1; c < row.size(); ++c)
      os << " | " << std::right << std::setw(static_cast<int>(width[c])) << row[c];
    os << '\n';
  };
  std::vector<std::string> header_row{std::string(corner)};
  header_row.insert(header_row.end(), headers.begin(), headers.end());
  emit(header_row);
  std::size_t total = width[0];
  for (std::size_t c = 1; c < width.size(); ++c) total += 3 + width[c];
  os << std::string(total, '-') << '\n';
  for (const auto& row : cells) emit(row);
  return os.str();
}

}  // namespace laydef
