#include "laydef/eae.hpp"

#include <fstream>
#include <mutex>
#include <regex>

#include <spdlog/spdlog.h>

#include "laydef/error.hpp"
#include "laydef/parallel.hpp"
#include "laydef/text.hpp"

namespace laydef {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

ExaminerVerdict parse_examiner_response(std::string_view response) {
  static const std::regex labelled(R"(answer[\s:]*(yes|no)\b)", std::regex::icase);
  static const std::regex leading(R"(^\s*(yes|no)\b)", std::regex::icase);

  ExaminerVerdict v;
  v.raw_response = std::string(response);
  std::smatch m;
  const std::string& s = v.raw_response;
  if (std::regex_search(s, m, labelled) || std::regex_search(s, m, leading, std::regex_constants::match_continuous)) {
    const char c = m.str(1)[0];
    v.label = (c == 'y' || c == 'Y') ? Verdict::good : Verdict::bad;
    v.parsed_from = static_cast<std::size_t>(m.position(1));
  }
  return v;
}

const std::string& examiner_preamble() {
  static const std::string text =
      "Decide whether the general definition is correct.\n"
      "\n"
      "If we can generate the lay definition from the general definition then answer is yes.\n"
      "\n"
      "term : mg\n"
      "general definition : this is short for milligram which is 1/1000 of a gram usually considered a small "
      "amount.\n"
      "lay definition : A tiny amount of something, usually a drug.\n"
      "answer : yes\n"
      "\n"
      "term : vitamin c\n"
      "general definition : ['A nutrient that the body needs in small amounts to function and stay healthy. "
      "Vitamin C helps fight infections, heal wounds, and keep tissues healthy. It is an antioxidant that helps "
      "prevent cell damage caused by free radicals (highly reactive chemicals). Vitamin C is found in all fruits "
      "and vegetables, especially citrus fruits, strawberries, cantaloupe, green peppers, tomatoes, broccoli, "
      "leafy greens, and potatoes. It is water-soluble (can dissolve in water) and must be taken in every day. "
      "Vitamin C is being studied in the prevention and treatment of some types of cancer.']\n"
      "lay definition : A nutrient needed by the body to form and maintain bones, blood vessels, and skin.\n"
      "answer : yes\n"
      "\n"
      "term : nodule\n"
      "general definition : ['A small lump, swelling or collection of tissue.']\n"
      "lay definition : A growth or lump that may be cancerous or not.\n"
      "answer : yes\n"
      "\n"
      "term : qd\n"
      "general definition : ['Occurring or done each day.']\n"
      "lay definition : Every day.\n"
      "answer : yes\n"
      "\n"
      "If the general definition contains many words from the term then answer is no.\n"
      "\n"
      "term : prochlorperzine\n"
      "general definition : ['prochlorperzine', ' ']\n"
      "lay definition : A drug used to prevent or reduce nausea and vomiting.\n"
      "answer : no\n"
      "\n"
      "term : mg\n"
      "general definition : ['mg']\n"
      "lay definition : A tiny amount of something, usually a drug.\n"
      "answer : no\n"
      "\n"
      "If the lay definition can not be generated by the general definition then answer is no.\n"
      "\n"
      "term : Virt - Vite\n"
      "general definition : ['Virt', ' - ', 'The determination of the amount of Vitamin E present in a sample.']\n"
      "lay definition : A mix of vitamins. It provides vitamin B-6, vitamin B-12 and folic acid to people who do "
      "not have enough of these for good health.\n"
      "answer : no";
  return text;
}

ChatPrompt examiner_prompt(std::string_view jargon, std::string_view general_definition,
                           std::string_view lay_definition) {
  std::string content = examiner_preamble();
  content += "\n\nterm : ";
  content += normalize_whitespace(jargon);
  content += "\ngeneral definition : ";
  content += general_definition;
  content += "\nlay definition : ";
  content += lay_definition;
  content += "\nanswer :";
  ChatPrompt p;
  p.turns.push_back({Role::user, std::move(content)});
  return p;
}

ChatPrompt augmenter_prompt(std::string_view jargon) {
  ChatPrompt p;
  p.system = "your job is to generate a general definition of the term.";
  p.turns = {
      {Role::user, ""},
      {Role::user, "term : incisional."},
      {Role::assistant,
       "general definition : An intentional cut made to an individual's body with the intent of performing a "
       "diagnostic or therapeutic intervention."},
      {Role::user, "term : PO"},
      {Role::assistant, "general definition : Of, or relating to, or affecting, or for use in the mouth.."},
      {Role::user, "term : " + normalize_whitespace(jargon)},
  };
  return p;
}

std::string strip_general_definition_label(std::string_view completion) {
  static const std::regex label(R"(^\s*general\s+definition\s*:\s*)", std::regex::icase);
  std::string s(completion);
  std::smatch m;
  if (std::regex_search(s, m, label, std::regex_constants::match_continuous)) s.erase(0, m.length(0));
  return std::string(trim(s));
}

ExaminerVerdict examine(const DataPoint& dp, GenerationBackend& backend, const GenerationConfig& cfg) {
  if (!dp.general_definition)
    throw PreconditionError("examine: point '" + dp.id + "' has no general_definition");
  const auto prompt = examiner_prompt(trim(dp.jargon), *dp.general_definition, dp.lay_definition);
  return parse_examiner_response(generate(prompt, cfg, backend));
}

DataPoint augment(const DataPoint& dp, GenerationBackend& backend, const GenerationConfig& cfg) {
  const auto raw = generate(augmenter_prompt(trim(dp.jargon)), cfg, backend);
  auto definition = strip_general_definition_label(raw);
  if (definition.empty()) throw EmptyOutputError("augment: empty general definition for point '" + dp.id + "'");
  DataPoint out = dp;
  out.general_definition = std::move(definition);
  out.provenance = Provenance::synthetic;
  out.verdict.reset();
  return out;
}

double YieldStats::exp_good_ratio() const {
  const auto n = exp_good + exp_bad + quarantine;
  return n == 0 ? 0.0 : static_cast<double>(exp_good) / static_cast<double>(n);
}

double YieldStats::syn_good_ratio() const {
  const auto n = syn_good + syn_bad + syn_quarantine;
  return n == 0 ? 0.0 : static_cast<double>(syn_good) / static_cast<double>(n);
}

ordered_json to_json(const YieldStats& s) {
  return ordered_json{
      {"input_points", s.input_points},
      {"input_triples", s.input_triples},
      {"exp_good", s.exp_good},
      {"exp_bad", s.exp_bad},
      {"quarantine", s.quarantine},
      {"syn", s.syn},
      {"syn_triples", s.syn_triples},
      {"syn_good", s.syn_good},
      {"syn_bad", s.syn_bad},
      {"syn_quarantine", s.syn_quarantine},
      {"examiner_calls", s.examiner_calls},
      {"augmenter_calls", s.augmenter_calls},
      {"exp_good_ratio", s.exp_good_ratio()},
      {"syn_good_ratio", s.syn_good_ratio()},
  };
}

namespace {

// Stage results keyed by item, written through after every completed call.
class Checkpoint {
 public:
  explicit Checkpoint(std::optional<fs::path> path) : path_(std::move(path)) {
    if (!path_ || !fs::exists(*path_)) return;
    std::ifstream in(*path_);
    try {
      data_ = ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path_->string(), 0, std::string("bad checkpoint: ") + e.what());
    }
    if (!data_.is_object()) throw ParseError(path_->string(), 0, "bad checkpoint: not an object");
    spdlog::info("resuming from checkpoint {}", path_->string());
  }

  std::optional<ordered_json> get(std::string_view stage, const std::string& key) {
    std::lock_guard lock(mutex_);
    auto s = data_.find(std::string(stage));
    if (s == data_.end()) return std::nullopt;
    auto it = s->find(key);
    if (it == s->end()) return std::nullopt;
    return *it;
  }

  void put(std::string_view stage, const std::string& key, ordered_json value) {
    std::lock_guard lock(mutex_);
    data_[std::string(stage)][key] = std::move(value);
    if (!path_) return;
    const fs::path tmp = path_->string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      out << data_.dump() << '\n';
      if (!out) throw Error("cannot write checkpoint " + tmp.string());
    }
    fs::rename(tmp, *path_);
  }

 private:
  std::optional<fs::path> path_;
  ordered_json data_ = ordered_json::object();
  std::mutex mutex_;
};

std::vector<UniqueTriple> group(const Dataset& d, bool dedup) {
  if (dedup) return dedup_unique_triples(d);
  std::vector<UniqueTriple> out;
  out.reserve(d.points.size());
  for (const auto& p : d.points) {
    UniqueTriple t;
    t.jargon = normalize_whitespace(p.jargon);
    t.lay_definition = normalize_whitespace(p.lay_definition);
    if (p.general_definition) t.general_definition = normalize_whitespace(*p.general_definition);
    t.member_ids = {p.id};
    out.push_back(std::move(t));
  }
  return out;
}

std::string item_key(const UniqueTriple& t, bool dedup) {
  return dedup ? triple_key(t) : "id:" + t.member_ids.front();
}

const DataPoint& representative(const Dataset& d, const UniqueTriple& t) {
  const auto* p = d.find(t.member_ids.front());
  if (!p) throw IntegrityError("triple member '" + t.member_ids.front() + "' not found");
  return *p;
}

bool has_definition(const std::optional<std::string>& g) { return g && !trim(*g).empty(); }

ExamineResult examine_with(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                           const EaeOptions& options, std::string_view stage, Checkpoint& checkpoint) {
  auto triples = group(d, options.dedup);
  std::vector<std::optional<ExaminerVerdict>> verdicts(triples.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (!has_definition(triples[i].general_definition)) {
      verdicts[i] = ExaminerVerdict{Verdict::bad, "", std::nullopt};
      continue;
    }
    if (auto saved = checkpoint.get(stage, item_key(triples[i], options.dedup))) {
      ExaminerVerdict v;
      v.label = parse_verdict(saved->at("verdict").get<std::string>()).value_or(Verdict::quarantined);
      v.raw_response = saved->value("raw", "");
      verdicts[i] = std::move(v);
      continue;
    }
    pending.push_back(i);
  }

  parallel_for(pending.size(), options.concurrency, [&](std::size_t k) {
    const std::size_t i = pending[k];
    auto v = examine(representative(d, triples[i]), backend, cfg);
    checkpoint.put(stage, item_key(triples[i], options.dedup),
                   ordered_json{{"verdict", to_string(v.label)}, {"raw", v.raw_response}});
    verdicts[i] = std::move(v);
  });

  std::unordered_map<std::string, const ExaminerVerdict*> by_member;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    triples[i].verdict = verdicts[i]->label;
    for (const auto& id : triples[i].member_ids) by_member[id] = &*verdicts[i];
  }

  ExamineResult r;
  r.good.name = d.name + ".good";
  r.bad.name = d.name + ".bad";
  r.quarantine.name = d.name + ".quarantine";
  r.calls = pending.size();
  r.unique_items = triples.size();
  for (auto& p : join_triples(triples, d).points) {
    switch (*p.verdict) {
      case Verdict::good: r.good.points.push_back(std::move(p)); break;
      case Verdict::bad: r.bad.points.push_back(std::move(p)); break;
      case Verdict::quarantined:
        p.extra["examiner_response"] = by_member.at(p.id)->raw_response;
        r.quarantine.points.push_back(std::move(p));
        break;
    }
  }
  return r;
}

Dataset augment_with(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                     const EaeOptions& options, std::string_view stage, Checkpoint& checkpoint,
                     std::size_t* calls) {
  auto triples = group(d, options.dedup);
  std::vector<std::optional<std::string>> definitions(triples.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    if (auto saved = checkpoint.get(stage, item_key(triples[i], options.dedup)))
      definitions[i] = saved->at("general_definition").get<std::string>();
    else
      pending.push_back(i);
  }

  parallel_for(pending.size(), options.concurrency, [&](std::size_t k) {
    const std::size_t i = pending[k];
    auto g = *augment(representative(d, triples[i]), backend, cfg).general_definition;
    checkpoint.put(stage, item_key(triples[i], options.dedup), ordered_json{{"general_definition", g}});
    definitions[i] = std::move(g);
  });
  if (calls) *calls += pending.size();

  // Members are looked up directly: every member gets the synthesized text
  // verbatim, whatever spelling its old definition had.
  std::unordered_map<std::string, const std::string*> by_member;
  for (std::size_t i = 0; i < triples.size(); ++i)
    for (const auto& id : triples[i].member_ids) by_member[id] = &*definitions[i];

  Dataset out;
  out.name = d.name + ".syn";
  out.points.reserve(d.points.size());
  for (const auto& p : d.points) {
    DataPoint s = p;
    s.general_definition = *by_member.at(p.id);
    s.provenance = Provenance::synthetic;
    s.verdict.reset();
    out.points.push_back(std::move(s));
  }
  return out;
}

}  // namespace

ExamineResult examine_dataset(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                              const EaeOptions& options, std::string_view stage) {
  Checkpoint checkpoint(options.checkpoint);
  return examine_with(d, backend, cfg, options, stage, checkpoint);
}

Dataset augment_dataset(const Dataset& d, GenerationBackend& backend, const GenerationConfig& cfg,
                        const EaeOptions& options, std::string_view stage) {
  Checkpoint checkpoint(options.checkpoint);
  return augment_with(d, backend, cfg, options, stage, checkpoint, nullptr);
}

EaeResult run_eae(const Dataset& input, GenerationBackend& examiner, GenerationBackend& augmenter,
                  const GenerationConfig& cfg, const EaeOptions& options) {
  validate(input);
  Checkpoint checkpoint(options.checkpoint);
  EaeResult r;
  r.stats.input_points = input.size();
  r.stats.input_triples = dedup_unique_triples(input).size();

  auto pass1 = examine_with(input, examiner, cfg, options, "examine-expert", checkpoint);
  r.stats.examiner_calls += pass1.calls;
  r.exp_good = std::move(pass1.good);
  r.exp_bad = std::move(pass1.bad);
  r.quarantine = std::move(pass1.quarantine);
  spdlog::info("examiner pass 1: {} good, {} bad, {} quarantined", r.exp_good.size(), r.exp_bad.size(),
               r.quarantine.size());

  r.syn = augment_with(r.exp_bad, augmenter, cfg, options, "augment", checkpoint, &r.stats.augmenter_calls);
  r.stats.syn_triples = dedup_unique_triples(r.syn).size();

  auto pass3 = examine_with(r.syn, examiner, cfg, options, "examine-synthetic", checkpoint);
  r.stats.examiner_calls += pass3.calls;
  r.syn_good = std::move(pass3.good);
  r.syn_bad = std::move(pass3.bad);
  r.syn_quarantine = std::move(pass3.quarantine);
  spdlog::info("examiner pass 2: {} good, {} bad, {} quarantined", r.syn_good.size(), r.syn_bad.size(),
               r.syn_quarantine.size());

  r.exp_good.name = "exp_good";
  r.exp_bad.name = "exp_bad";
  r.quarantine.name = "quarantine";
  r.syn.name = "syn";
  r.syn_good.name = "syn_good";
  r.syn_bad.name = "syn_bad";
  r.syn_quarantine.name = "syn_quarantine";

  r.stats.exp_good = r.exp_good.size();
  r.stats.exp_bad = r.exp_bad.size();
  r.stats.quarantine = r.quarantine.size();
  r.stats.syn = r.syn.size();
  r.stats.syn_good = r.syn_good.size();
  r.stats.syn_bad = r.syn_bad.size();
  r.stats.syn_quarantine = r.syn_quarantine.size();
  return r;
}

EaeResult run_eae(const Dataset& input, GenerationBackend& backend, const GenerationConfig& cfg,
                  const EaeOptions& options) {
  return run_eae(input, backend, backend, cfg, options);
}

void write_eae_result(const EaeResult& r, const fs::path& dir) {
  fs::create_directories(dir);
  for (const Dataset* d : {&r.exp_good, &r.exp_bad, &r.quarantine, &r.syn, &r.syn_good, &r.syn_bad,
                           &r.syn_quarantine})
    save_dataset(*d, dir / (d->name + ".jsonl"));
  std::ofstream out(dir / "stats.json", std::ios::trunc);
  out << to_json(r.stats).dump(2) << '\n';
  if (!out) throw Error("cannot write " + (dir / "stats.json").string());
}

}  // namespace laydef
