// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "laydef/corpus.hpp"
#include "laydef/eae.hpp"
#include "laydef/embedding.hpp"
#include "laydef/error.hpp"
#include "laydef/harness.hpp"
#include "laydef/io.hpp"
#include "laydef/lexicon.hpp"
#include "laydef/live_backend.hpp"
#include "laydef/metrics.hpp"
#include "laydef/prompts.hpp"
#include "laydef/random.hpp"
#include "laydef/review.hpp"
#include "laydef/selection.hpp"
#include "laydef/text.hpp"

using namespace laydef;
namespace fs = std::filesystem;

namespace {

// A failed check; the message is printed on the FAIL line.
struct Failure {
  std::string message;
};

void check(bool ok, const std::string& message) {
  if (!ok) throw Failure{message};
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

fs::path source(const std::string& rel) { return fs::path(LAYDEF_SOURCE_DIR) / rel; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("laydef-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::vector<std::string> ids_of(const Dataset& d) {
  std::vector<std::string> out;
  for (const auto& p : d.points) out.push_back(p.id);
  return out;
}

std::string words(SeededRng& rng, const std::vector<std::string>& vocab, std::size_t lo, std::size_t hi) {
  const std::size_t n = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[rng.below(vocab.size())];
  }
  return s;
}

// ---------------------------------------------------------------------------

void fkgl_fidelity(std::string& note) {
  const std::string readme_lay =
      "A procedure that looks at the food pipe, stomach, and the first part of the small bowel.";
  const std::string umls_def =
      "An endoscopic procedure that visualizes the upper part of the gastrointestinal tract up to the duodenum.";
  const double a = fkgl(readme_lay);
  const double b = fkgl(umls_def);
  note = "lay " + num(a) + " (5.6 +/- 1.0), dictionary " + num(b) + " (13.5 +/- 1.5)";
  check(std::abs(a - 5.6) <= 1.0, "lay definition FKGL out of tolerance: " + note);
  check(std::abs(b - 13.5) <= 1.5, "dictionary definition FKGL out of tolerance: " + note);
}

// Longest common subsequence by trying every subsequence of a.
std::size_t exhaustive_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  const std::size_t n = a.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const auto len = static_cast<std::size_t>(__builtin_popcount(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else ++j;
    }
    if (ok) best = len;
  }
  return best;
}

void rouge_l_oracle(std::string& note) {
  SeededRng rng(2024);
  const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
  const int pairs = 400;
  for (int k = 0; k < pairs; ++k) {
    const auto cand = words(rng, vocab, 1, 12);
    const auto ref = words(rng, vocab, 1, 12);
    const auto ct = tokenize(cand);
    const auto rt = tokenize(ref);
    const auto l = static_cast<double>(exhaustive_lcs(ct, rt));
    const double p = l / static_cast<double>(ct.size());
    const double r = l / static_cast<double>(rt.size());
    const double f1 = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    const auto got = rouge_l(cand, ref);
    check(got.f1 == f1 && got.precision == p && got.recall == r,
          "mismatch on '" + cand + "' vs '" + ref + "': " + num(got.f1) + " != " + num(f1));
  }
  note = std::to_string(pairs) + " pairs";
}

// Brute-force concept extraction straight from the lexicon file: greedy
// longest match over space-joined lowercase alphanumeric tokens.
struct BruteLexicon {
  std::map<std::string, std::string> term_to_concept;
  std::size_t max_len = 0;
};

std::vector<std::string> simple_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

BruteLexicon brute_lexicon(const fs::path& path) {
  BruteLexicon lex;
  std::istringstream in(slurp(path));
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line);
    const auto toks = simple_tokens(j.at("term").get<std::string>());
    std::string key;
    for (const auto& t : toks) key += (key.empty() ? "" : " ") + t;
    lex.term_to_concept[key] = j.at("concept_id").get<std::string>();
    lex.max_len = std::max(lex.max_len, toks.size());
  }
  return lex;
}

std::set<std::string> brute_concepts(const std::string& text, const BruteLexicon& lex) {
  const auto toks = simple_tokens(text);
  std::set<std::string> out;
  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t step = 1;
    for (std::size_t len = std::min(lex.max_len, toks.size() - i); len >= 1; --len) {
      std::string key;
      for (std::size_t k = i; k < i + len; ++k) key += (k == i ? "" : " ") + toks[k];
      auto it = lex.term_to_concept.find(key);
      if (it != lex.term_to_concept.end()) {
        out.insert(it->second);
        step = len;
        break;
      }
    }
    i += step;
  }
  return out;
}

void umls_oracle(std::string& note) {
  const auto path = source("fixtures/lexicon.jsonl");
  const auto lex = load_lexicon(path);
  const auto brute = brute_lexicon(path);
  std::vector<std::string> pieces;
  for (const auto& [term, _] : brute.term_to_concept) pieces.push_back(term);
  for (const auto* filler : {"the", "patient", "had", "a", "with", "and", "no", "of", "signs", "Mild", "(", ",", "."})
    pieces.emplace_back(filler);
  SeededRng rng(77);
  const int texts = 200;
  for (int k = 0; k < texts; ++k) {
    std::string gen;
    std::string ref;
    for (auto* s : {&gen, &ref}) {
      const std::size_t n = 1 + rng.below(10);
      for (std::size_t i = 0; i < n; ++i) {
        std::string piece = pieces[rng.below(pieces.size())];
        if (rng.coin()) std::transform(piece.begin(), piece.end(), piece.begin(), ::toupper);
        *s += piece + " ";
      }
    }
    const auto cg = brute_concepts(gen, brute);
    const auto cr = brute_concepts(ref, brute);
    std::vector<std::string> common;
    std::set_intersection(cg.begin(), cg.end(), cr.begin(), cr.end(), std::back_inserter(common));
    const double c = static_cast<double>(common.size());
    const double p = cg.empty() ? 0.0 : c / static_cast<double>(cg.size());
    const double r = cr.empty() ? 0.0 : c / static_cast<double>(cr.size());
    const double f1 = p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
    const auto got = umls_f1(gen, ref, lex);
    check(got.precision == p && got.recall == r && got.f1 == f1,
          "mismatch on '" + gen + "' vs '" + ref + "': " + num(got.f1) + " != " + num(f1));
  }
  note = std::to_string(texts) + " text pairs over " + std::to_string(brute.term_to_concept.size()) + " terms";
}

// Answers yes, no or something unparseable, chosen by a hash of the prompt.
class ScatterExaminer final : public GenerationBackend {
 public:
  std::string complete(const ChatPrompt& p, const GenerationConfig&) override {
    const auto h = std::hash<std::string>{}(p.final_user_content());
    switch (h % 5) {
      case 0: return "unsure";
      case 1:
      case 2: return "answer : no";
      default: return "answer : yes";
    }
  }
  std::string identity() const override { return "scatter"; }
};

void eae_routing(std::string& note) {
  const auto input = load_dataset(source("fixtures/eae-20.jsonl"), "eae-20");
  const auto expected = read_json_file(source("tests/acceptance/eae-20-expected.json"));
  RuleExaminerBackend examiner;
  TemplateBackend augmenter;
  const auto r = run_eae(input, examiner, augmenter, {});
  const std::vector<std::pair<std::string, const Dataset*>> buckets{
      {"exp_good", &r.exp_good}, {"exp_bad", &r.exp_bad},   {"quarantine", &r.quarantine},
      {"syn_good", &r.syn_good}, {"syn_bad", &r.syn_bad}, {"syn_quarantine", &r.syn_quarantine}};
  for (const auto& [name, d] : buckets)
    check(ids_of(*d) == expected.at(name).get<std::vector<std::string>>(), "bucket " + name + " differs");
  check(r.stats.examiner_calls == expected.at("examiner_calls").get<std::size_t>(), "examiner call count differs");
  check(r.stats.augmenter_calls == expected.at("augmenter_calls").get<std::size_t>(), "augmenter call count differs");

  const std::vector<std::string> terms{"mg", "heart failure", "qd", "stent", "edema", "EGD"};
  const std::vector<std::string> lays{"a small amount", "weak heart", "every day", "a scope test"};
  const std::vector<std::string> gens{"mg", "heart failure", "a tube that holds a vessel open", "each day", "",
                                      "heart muscle weakness", "stent", "an endoscopic procedure"};
  SeededRng rng(4242);
  ScatterExaminer scatter;
  const int corpora = 1000;
  for (int k = 0; k < corpora; ++k) {
    Dataset d{"rand", {}};
    const std::size_t n = 1 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) {
      DataPoint p;
      p.id = "p" + std::to_string(i);
      p.jargon = terms[rng.below(terms.size())];
      p.lay_definition = lays[rng.below(lays.size())];
      if (rng.below(5) != 0) p.general_definition = gens[rng.below(gens.size())];
      d.points.push_back(std::move(p));
    }
    GenerationBackend& ex = k % 2 ? static_cast<GenerationBackend&>(scatter) : examiner;
    const auto res = run_eae(d, ex, augmenter, {});

    std::multiset<std::string> pass1;
    for (const auto* b : {&res.exp_good, &res.exp_bad, &res.quarantine})
      for (const auto& p : b->points) pass1.insert(p.id);
    const auto all = ids_of(d);
    check(pass1 == std::multiset<std::string>(all.begin(), all.end()), "first pass is not a partition");
    check(ids_of(res.syn) == ids_of(res.exp_bad), "synthetic set differs from the rejected set");
    std::multiset<std::string> pass2;
    for (const auto* b : {&res.syn_good, &res.syn_bad, &res.syn_quarantine})
      for (const auto& p : b->points) pass2.insert(p.id);
    const auto syn = ids_of(res.syn);
    check(pass2 == std::multiset<std::string>(syn.begin(), syn.end()), "second pass is not a partition");
    for (const auto& p : res.exp_good.points)
      check(p.verdict == Verdict::good && p.provenance == Provenance::expert && p.general_definition,
            "bad exp_good point " + p.id);
    for (const auto& p : res.syn.points)
      check(p.provenance == Provenance::synthetic && p.general_definition, "bad synthetic point " + p.id);
    for (const auto& p : res.syn_good.points) check(p.verdict == Verdict::good, "bad syn_good point " + p.id);
    for (const auto& p : res.syn_bad.points) check(p.verdict == Verdict::bad, "bad syn_bad point " + p.id);
  }
  note = "fixture buckets exact; " + std::to_string(corpora) + " random corpora";
}

std::string norm_term(const std::string& s) { return normalize_whitespace(s); }

void split_soundness(std::string& note) {
  SeededRng rng(9001);
  const int fixtures = 1000;
  for (int k = 0; k < fixtures; ++k) {
    Dataset expert{"e", {}};
    Dataset synth{"s", {}};
    const std::size_t vocab = 2 + rng.below(20);
    auto fill = [&](Dataset& d, const std::string& prefix, std::size_t n) {
      for (std::size_t i = 0; i < n; ++i) {
        DataPoint p;
        p.id = prefix + std::to_string(i);
        p.jargon = "t" + std::to_string(rng.below(vocab));
        if (rng.coin()) p.jargon = " " + p.jargon + "  ";
        p.lay_definition = "lay";
        p.general_definition = "gen";
        if (prefix == "s") p.provenance = Provenance::synthetic;
        d.points.push_back(std::move(p));
      }
    };
    fill(expert, "e", rng.below(25));
    fill(synth, "s", rng.below(25));
    std::set<std::string> terms;
    for (const auto* d : {&expert, &synth})
      for (const auto& p : d->points) terms.insert(norm_term(p.jargon));
    SplitSpec spec;
    spec.holdout_term_count = terms.empty() ? 0 : rng.below(terms.size() + 1);
    spec.eval_test_ratio = {1 + static_cast<unsigned>(rng.below(3)), 1 + static_cast<unsigned>(rng.below(3))};
    spec.seed = rng.next();

    const auto s = split_by_jargon(expert, synth, spec);
    std::set<std::string> tr, ev, te;
    for (const auto& p : s.train.points) tr.insert(norm_term(p.jargon));
    for (const auto& p : s.eval.points) ev.insert(norm_term(p.jargon));
    for (const auto& p : s.test.points) te.insert(norm_term(p.jargon));
    for (const auto& t : ev) check(!tr.count(t) && !te.count(t), "term leaks from eval: " + t);
    for (const auto& t : te) check(!tr.count(t), "term leaks from test: " + t);
    check(s.eval_terms.size() + s.test_terms.size() == spec.holdout_term_count, "held-out term count differs");

    std::multiset<std::string> in_ids;
    std::multiset<std::string> out_ids;
    for (const auto* d : {&expert, &synth})
      for (const auto& p : d->points) in_ids.insert(p.id);
    for (const auto* d : {&s.train, &s.eval, &s.test})
      for (const auto& p : d->points) out_ids.insert(p.id);
    check(in_ids == out_ids, "split does not cover the input exactly");

    const auto again = split_by_jargon(expert, synth, spec);
    check(serialize_dataset(again.train) == serialize_dataset(s.train) &&
              serialize_dataset(again.eval) == serialize_dataset(s.eval) &&
              serialize_dataset(again.test) == serialize_dataset(s.test) && again.eval_terms == s.eval_terms &&
              again.test_terms == s.test_terms,
          "same seed gave a different split");
  }
  note = std::to_string(fixtures) + " random fixtures";
}

void selection_ordering(std::string& note) {
  // Hand LCS: p1 0.75, p2 4/11, p3 0.4.
  Dataset fix{"syntax", {}};
  const std::vector<std::array<std::string, 3>> rows{
      {"p1", "a b c d", "a c b d"},
      {"p2", "the heart pumps blood", "blood moves through the heart and body"},
      {"p3", "kidney stone", "a kidney problem"}};
  for (const auto& [id, g, l] : rows) {
    DataPoint p;
    p.id = id;
    p.jargon = id;
    p.general_definition = g;
    p.lay_definition = l;
    fix.points.push_back(p);
  }
  const auto sx = score_syntax(fix);
  check(sx.scores.size() == 3 && sx.scores[0].point_id == "p1" && sx.scores[1].point_id == "p3" &&
            sx.scores[2].point_id == "p2",
        "syntax fixture ordering differs");
  check(sx.scores[0].score == 0.75 && std::abs(sx.scores[1].score - 0.4) < 1e-15 &&
            std::abs(sx.scores[2].score - 4.0 / 11) < 1e-15,
        "syntax fixture scores differ");

  SeededRng rng(31337);
  const std::vector<std::string> vocab{"blood", "heart", "small", "tube", "kidney", "pain", "day", "lump", "drug",
                                       "vessel", "scope", "stomach"};
  Dataset d{"hundred", {}};
  std::vector<std::string> texts;
  for (int i = 0; i < 100; ++i) {
    DataPoint p;
    p.id = "q" + std::to_string(1000 + i);
    p.jargon = "term" + std::to_string(i);
    p.general_definition = words(rng, vocab, 3, 10);
    p.lay_definition = words(rng, vocab, 3, 10);
    texts.push_back(*p.general_definition);
    texts.push_back(p.lay_definition);
    d.points.push_back(std::move(p));
  }
  const BagOfWordsEmbedder embedder{DocumentFrequency::build(texts)};
  TemplateBackend stub;
  const std::vector<std::pair<std::string, ScoringResult>> results{
      {"random", score_random(d, 5)},
      {"syntax", score_syntax(d)},
      {"semantic", score_semantic(d, embedder)},
      {"model", score_model(d, stub)}};
  for (const auto& [name, r] : results) {
    check(r.scores.size() == 100, name + ": expected 100 scores");
    const auto top = select(r.scores, 10, Direction::top);
    const auto bottom = select(r.scores, 10, Direction::bottom);
    std::map<std::string, double> by_id;
    for (const auto& s : r.scores) by_id[s.point_id] = s.score;
    double mt = 0, mb = 0;
    for (const auto& id : top) mt += by_id.at(id) / 10;
    for (const auto& id : bottom) mb += by_id.at(id) / 10;
    check(mt >= mb, name + ": mean(top) " + num(mt) + " < mean(bottom) " + num(mb));
    std::set<std::string> t(top.begin(), top.end());
    for (const auto& id : bottom) check(!t.count(id), name + ": top and bottom share " + id);
  }
  note = "4 strategies x 100 items; syntax fixture exact";
}

void prompt_fidelity(std::string& note) {
  DataPoint egd;
  egd.id = "egd";
  egd.jargon = "EGD";
  egd.context =
      "[ * * 11 - 22 * * ] EGD Grade I varices - ablated [ * * 11 - 22 * * ] sigmoidoscopy friability , reythema , "
      "congest and abnormal vasularity in a small 5 mm area of distal rectum .";
  egd.general_definition =
      "An endoscopic procedure that visualizes the upper part of the gastrointestinal tract up to the duodenum.";
  egd.lay_definition = "unused";
  const auto golden = [](const std::string& f) { return slurp(source("tests/golden/" + f)); };
  const std::vector<std::pair<std::string, TaskKind>> kinds{
      {"j2l.txt", TaskKind::J2L}, {"j_c2l.txt", TaskKind::J_C2L}, {"j_g2l.txt", TaskKind::J_G2L},
      {"j_c_g2l.txt", TaskKind::J_C_G2L}};
  for (const auto& [file, kind] : kinds)
    check(build_prompt({kind, std::nullopt}, egd).final_user_content() == golden(file), file + " differs");
  check(render_one_shot_prompt({"[TERM]", "[DEFINITION]"}, "[TERM]") == golden("one_shot.txt"),
        "one_shot.txt differs");
  check(render_readability_prompt("[X]", "EGD", *egd.general_definition) == golden("readability.txt"),
        "readability.txt differs");
  check(examiner_prompt("nodule", "A small lump, swelling or collection of tissue.",
                        "A growth or lump that may be cancerous or not.")
                .final_user_content() == golden("examiner.txt"),
        "examiner.txt differs");
  const auto body = nlohmann::json::parse(LiveChatBackend::request_body(augmenter_prompt("EGD"), {}, "m"));
  check(body.at("messages") == nlohmann::json::parse(golden("augmenter.json")), "augmenter.json differs");
  note = "8 golden files";
}

void readability_report_check(std::string& note) {
  // target -> (sentence, words, syllables), counted by hand; one sentence each.
  const std::map<int, std::tuple<std::string, int, int>> planted{
      {1, {"The cat sat on the mat.", 6, 6}},
      {2, {"We took the dog to the park.", 7, 7}},
      {3, {"The nurse gave her some medicine.", 6, 8}},
      {4, {"Medicine helps the body heal.", 5, 8}},
      {5, {"The hospital gave him medicine for his pain.", 8, 12}},
      {6, {"The doctor read the hospital report.", 6, 10}},
      {7, {"Your operation went well.", 4, 7}},
      {8, {"The examination took one hour.", 5, 9}},
      {9, {"An operation on the hospital ward.", 6, 11}},
      {10, {"Your examination is done.", 4, 8}},
      {11, {"Hospital medicine is important.", 4, 10}},
      {12, {"Operation and examination.", 3, 10}}};
  TemplateBackend::Options opts;
  for (const auto& [t, row] : planted) opts.readability_sentences[t] = std::get<0>(row);
  TemplateBackend stub(opts);

  Dataset d{"rd", {}};
  for (int i = 0; i < 5; ++i) {
    DataPoint p;
    p.id = "r" + std::to_string(i);
    p.jargon = "term" + std::to_string(i);
    p.lay_definition = "x";
    p.general_definition = "general text";
    d.points.push_back(p);
  }
  std::vector<RunRecord> runs;
  for (int t = 1; t <= 12; ++t) runs.push_back(run_generation(d, TaskSetting::readability(t), stub, {}));
  const auto report = readability_report(runs);
  check(report.rows.size() == 12, "expected 12 rows");
  double mad = 0;
  for (int t = 1; t <= 12; ++t) {
    const auto& row = report.rows[static_cast<std::size_t>(t - 1)];
    const auto& [sentence, w, s] = planted.at(t);
    const double hand = 0.39 * w + 11.8 * static_cast<double>(s) / w - 15.59;
    check(row.target == t && row.mean_fkgl.has_value(), "row " + std::to_string(t) + " missing");
    check(std::abs(*row.mean_fkgl - hand) <= 0.01,
          "target " + std::to_string(t) + ": " + num(*row.mean_fkgl) + " vs hand " + num(hand));
    mad += std::abs(hand - t) / 12;
  }
  check(std::abs(*report.mean_abs_deviation - mad) <= 0.01, "deviation summary differs");
  const auto table = format_readability_table({{"stub", report}});
  std::istringstream lines(table);
  std::vector<std::string> first_cells;
  for (std::string line; std::getline(lines, line);) first_cells.push_back(line.substr(0, line.find(' ')));
  std::vector<std::string> want{"[X]"};
  for (int t = 1; t <= 12; ++t) want.push_back(std::to_string(t));
  want.push_back("MAD");
  check(first_cells == want, "table rows are not [X], 1..12, MAD");
  note = "12 targets within 0.01 of hand values";
}

void win_rate_check(std::string& note) {
  std::vector<PreferenceJudgment> js;
  for (int e = 1; e <= 5; ++e)
    for (int i = 0; i < 50; ++i) {
      PreferenceJudgment j{"ours-vs-base", "ev" + std::to_string(e), "item" + std::to_string(i), "ours", "base",
                           Side::left};
      if (i % 3 == 0) std::swap(j.left_system, j.right_system);
      const std::string wanted = e <= 3 ? "ours" : "base";
      j.choice = j.left_system == wanted ? Side::left : Side::right;
      js.push_back(j);
    }
  const auto w = win_rate(js, "ours-vs-base");
  check(w.total == 250 && w.wins.at("ours") == 150 && w.wins.at("base") == 100, "library counts differ");
  check(w.rates.at("ours") == 0.6 && w.rates.at("base") == 0.4, "library rates differ");

  // Same plant through the review service: five evaluators, one session each.
  TempDir dir;
  ReviewCatalog catalog;
  Dataset refs{"refs", {}};
  RunRecord ours;
  RunRecord base;
  for (int i = 0; i < 50; ++i) {
    DataPoint p;
    p.id = "item" + std::to_string(i);
    p.jargon = "t" + std::to_string(i);
    p.lay_definition = "reference";
    refs.points.push_back(p);
    ours.outputs.push_back({p.id, "ours text " + std::to_string(i)});
    base.outputs.push_back({p.id, "base text " + std::to_string(i)});
  }
  catalog.datasets.emplace("refs", refs);
  catalog.runs.emplace("ours", ours);
  catalog.runs.emplace("base", base);
  ReviewService svc(catalog, dir.path() / "log.jsonl");
  for (int e = 1; e <= 5; ++e) {
    SessionRequest r;
    r.mode = ReviewMode::preference;
    r.evaluator_id = "ev" + std::to_string(e);
    r.sample_size = 50;
    r.seed = static_cast<std::uint64_t>(e);
    r.systems = {"ours", "base"};
    r.refs = "refs";
    const auto s = svc.create_session(r);
    const std::string wanted = e <= 3 ? "ours" : "base";
    while (auto item = svc.next_item(s.id)) {
      const bool a_is_wanted = (*item)["candidates"]["A"].get<std::string>().rfind(wanted, 0) == 0;
      JudgmentInput in;
      in.item_id = (*item)["item_id"].get<std::string>();
      in.choice = a_is_wanted ? Side::left : Side::right;
      svc.submit_judgment(s.id, in);
    }
  }
  const auto g = svc.group_stats("ours-vs-base");
  check(g.at("total") == 250, "service total differs");
  check(g.at("rates").at("ours").get<double>() == 0.6 && g.at("rates").at("base").get<double>() == 0.4,
        "service rates differ: " + g.at("rates").dump());
  note = "ours 60%, base 40% over 250 judgments";
}

struct CliOutcome {
  int code = -1;
  std::string output;
};

CliOutcome run_cli(const std::string& args) {
  const std::string cmd = std::string(LAYDEF_CLI) + " --log-level warn " + args + " 2>&1";
  CliOutcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return o;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

void end_to_end(std::string& note) {
  TempDir tmp;
  const fs::path w = tmp.path();
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  const std::string lexicon = q(source("fixtures/lexicon.jsonl"));
  auto step = [&](const std::string& name, const std::string& args) {
    const auto r = run_cli(args);
    check(r.code == 0, name + " exited " + std::to_string(r.code) + ": " + r.output);
  };
  auto expect_files = [&](const fs::path& dir, const std::vector<std::string>& files) {
    for (const auto& f : files) check(fs::exists(dir / f), "missing " + (dir / f).string());
  };

  step("retrieve", "retrieve --input " + q(source("fixtures/readme-exp.jsonl")) + " --lexicon " + lexicon +
                       " --output " + q(w / "retrieved.jsonl"));
  expect_files(w, {"retrieved.jsonl"});

  step("eae", "eae --input " + q(w / "retrieved.jsonl") + " --backend stub --out " + q(w / "eae"));
  expect_files(w / "eae", {"exp_good.jsonl", "exp_bad.jsonl", "quarantine.jsonl", "syn.jsonl", "syn_good.jsonl",
                           "syn_bad.jsonl", "syn_quarantine.jsonl", "stats.json"});
  const auto syn_good = load_dataset(w / "eae" / "syn_good.jsonl", "syn_good");
  check(!syn_good.empty(), "no synthetic point survived");

  const std::size_t n = (syn_good.size() + 1) / 2;
  step("select", "select --input " + q(w / "eae" / "syn_good.jsonl") + " --strategy syntax --n " +
                     std::to_string(n) + " --direction top --out " + q(w / "scores.jsonl") + " --subset-out " +
                     q(w / "selected.jsonl"));
  expect_files(w, {"scores.jsonl", "selected.jsonl"});

  step("split", "split --expert " + q(w / "eae" / "exp_good.jsonl") + " --synthetic " + q(w / "selected.jsonl") +
                    " --holdout 4 --seed 11 --out " + q(w / "split"));
  expect_files(w / "split", {"train.jsonl", "eval.jsonl", "test.jsonl", "eval_terms.txt", "test_terms.txt"});

  step("generate", "generate --input " + q(w / "split" / "test.jsonl") + " --setting J_G2L --backend stub --out " +
                       q(w / "run"));
  expect_files(w / "run", {"run.json", "prompts.jsonl", "outputs.jsonl"});

  step("evaluate", "evaluate --run " + q(w / "run") + " --refs " + q(w / "split" / "test.jsonl") + " --lexicon " +
                       lexicon + " --out " + q(w / "eval"));
  expect_files(w / "eval", {"metrics.json", "metrics.txt"});
  const auto metrics = read_json_file(w / "eval" / "metrics.json");
  check(metrics.at("aggregate").at("items").get<std::size_t>() ==
            load_dataset(w / "split" / "test.jsonl", "t").size(),
        "metrics do not cover the test split");
  note = "retrieve, eae, select, split, generate, evaluate";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  struct Criterion {
    std::string name;
    double budget_s;
    std::function<void(std::string&)> run;
  };
  const std::vector<Criterion> criteria{
      {"fkgl-fidelity", 1, fkgl_fidelity},
      {"rouge-l-oracle", 10, rouge_l_oracle},
      {"umls-f1-oracle", 5, umls_oracle},
      {"eae-routing", 30, eae_routing},
      {"split-soundness", 30, split_soundness},
      {"selection-ordering", 10, selection_ordering},
      {"prompt-fidelity", 10, prompt_fidelity},
      {"readability-report", 10, readability_report_check},
      {"win-rate", 10, win_rate_check},
      {"end-to-end-offline", 60, end_to_end},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    std::string note;
    std::string error;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(note);
    } catch (const Failure& f) {
      error = f.message;
    } catch (const std::exception& e) {
      error = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (error.empty() && secs > c.budget_s)
      error = "took " + num(secs) + " s, budget " + num(c.budget_s) + " s";
    std::ostringstream line;
    line.precision(2);
    line << std::fixed;
    if (error.empty())
      line << "PASS " << c.name << " (" << secs << " s) " << note;
    else
      line << "FAIL " << c.name << " (" << secs << " s) " << error;
    std::cout << line.str() << std::endl;
    failed += !error.empty();
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
