// Command-line front end. Data goes to files, diagnostics to stderr.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "laydef/corpus.hpp"
#include "laydef/eae.hpp"
#include "laydef/error.hpp"
#include "laydef/harness.hpp"
#include "laydef/io.hpp"
#include "laydef/lexicon.hpp"
#include "laydef/live_backend.hpp"
#include "laydef/prompts.hpp"
#include "laydef/providers.hpp"
#include "laydef/review.hpp"
#include "laydef/review_server.hpp"
#include "laydef/selection.hpp"
#include "laydef/text.hpp"

namespace fs = std::filesystem;
using namespace laydef;

namespace {

constexpr int kExitOperational = 1;
constexpr int kExitUsage = 2;

struct BackendFlags {
  std::string kind = "stub";
  std::string stub_kind;  // empty: the role's default stub
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t concurrency = 1;
  int retries = 3;
  std::string run_log;
  std::string augment_template = TemplateBackend::Options{}.augment_template;
  std::size_t generation_tokens = 8;
  std::string readability_sentences;  // JSON object {"1": "...", ...}
  GenerationConfig cfg;
};

void add_backend_flags(CLI::App* cmd, BackendFlags& f) {
  cmd->add_option("--backend", f.kind, "stub or live")->check(CLI::IsMember({"stub", "live"}));
  cmd->add_option("--stub-kind", f.stub_kind, "template, echo or rule-examiner")
      ->check(CLI::IsMember({"template", "echo", "rule-examiner"}));
  cmd->add_option("--endpoint", f.endpoint, "chat API base URL");
  cmd->add_option("--model", f.model);
  cmd->add_option("--api-key-env", f.api_key_env, "environment variable holding the API key");
  cmd->add_option("--concurrency", f.concurrency)->check(CLI::PositiveNumber);
  cmd->add_option("--retries", f.retries)->check(CLI::NonNegativeNumber);
  cmd->add_option("--run-log", f.run_log, "append one JSON line per live request");
  cmd->add_option("--augment-template", f.augment_template, "template stub: synthesized definition, {term} slot");
  cmd->add_option("--generation-tokens", f.generation_tokens, "template stub: tokens copied into generations");
  cmd->add_option("--readability-sentences", f.readability_sentences,
                  "template stub: JSON file mapping target grade to output sentence");
  cmd->add_option("--beam-size", f.cfg.beam_size);
  cmd->add_option("--no-repeat-ngram", f.cfg.no_repeat_ngram);
  cmd->add_option("--min-tokens", f.cfg.min_tokens);
  cmd->add_option("--max-tokens", f.cfg.max_tokens);
  cmd->add_option("--temperature", f.cfg.temperature);
}

enum class BackendRole { generator, examiner };

std::unique_ptr<GenerationBackend> make_backend(const BackendFlags& f, BackendRole role) {
  if (f.kind == "live") {
    const char* key = std::getenv(f.api_key_env.c_str());
    if (!key || !*key) throw ValidationError("live backend: environment variable " + f.api_key_env + " is not set");
    LiveBackendConfig c;
    c.endpoint = f.endpoint;
    c.model = f.model;
    c.api_key = key;
    c.max_retries = f.retries;
    c.max_in_flight = f.concurrency;
    if (!f.run_log.empty()) c.run_log = f.run_log;
    return std::make_unique<LiveChatBackend>(std::move(c));
  }
  std::string kind = f.stub_kind;
  if (kind.empty()) kind = role == BackendRole::examiner ? "rule-examiner" : "template";
  if (kind == "echo") return std::make_unique<EchoBackend>();
  if (kind == "rule-examiner") return std::make_unique<RuleExaminerBackend>();
  TemplateBackend::Options o;
  o.augment_template = f.augment_template;
  o.generation_tokens = f.generation_tokens;
  if (!f.readability_sentences.empty()) {
    const auto j = read_json_file(f.readability_sentences);
    for (const auto& [k, v] : j.items()) o.readability_sentences[std::stoi(k)] = v.get<std::string>();
  }
  return std::make_unique<TemplateBackend>(std::move(o));
}

Dataset load(const std::string& path) { return load_dataset(path, fs::path(path).stem().string()); }

void save_as(Dataset d, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_dataset(d, path);
  spdlog::info("wrote {} points to {}", d.size(), path.string());
}

TaskSetting parse_setting(const std::string& name, std::optional<int> target) {
  const auto kind = parse_task_kind(name);
  if (!kind) throw ValidationError("unknown setting '" + name + "'");
  TaskSetting s{*kind, target};
  validate(s);
  return s;
}

std::pair<std::string, std::string> split_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw ValidationError("expected name=path, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

void write_text(const fs::path& path, const std::string& text) {
  write_file_atomic(path, text);
  spdlog::info("wrote {}", path.string());
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("laydef");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Curation, selection and evaluation tools for jargon lay-definition data"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.set_config("--config", "", "INI file; [section] names match subcommands");
  std::string log_level = "info";
  app.add_option("--log-level", log_level)->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::function<void()> action;

  // retrieve
  {
    auto* cmd = app.add_subcommand("retrieve", "Fill general definitions from a lexicon");
    static std::string input, lexicon, output;
    static bool overwrite = false;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--lexicon", lexicon)->required();
    cmd->add_option("--output", output)->required();
    cmd->add_flag("--overwrite", overwrite, "replace existing general definitions");
    cmd->callback([&] {
      action = [] {
        const auto d = load(input);
        const auto lex = load_lexicon(lexicon);
        std::vector<std::string> lays;
        for (const auto& p : d.points) lays.push_back(p.lay_definition);
        BagOfWordsEmbedder embedder(lexicon_document_frequency(lex, lays));
        auto r = retrieve_for_dataset(d, lex, embedder, overwrite);
        spdlog::info("retrieve: {} filled, {} unmatched, {} kept", r.filled, r.unmatched, r.kept);
        save_as(std::move(r.dataset), output);
      };
    });
  }

  // examine
  {
    auto* cmd = app.add_subcommand("examine", "Judge general definitions with the examiner");
    static std::string input, out;
    static BackendFlags flags;
    static bool no_dedup = false;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--out", out, "directory for good/bad/quarantine.jsonl")->required();
    cmd->add_flag("--no-dedup", no_dedup, "one call per point instead of per unique triple");
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      action = [] {
        auto backend = make_backend(flags, BackendRole::examiner);
        EaeOptions o;
        o.concurrency = flags.concurrency;
        o.dedup = !no_dedup;
        auto r = examine_dataset(load(input), *backend, flags.cfg, o);
        const fs::path dir(out);
        save_as(std::move(r.good), dir / "good.jsonl");
        save_as(std::move(r.bad), dir / "bad.jsonl");
        save_as(std::move(r.quarantine), dir / "quarantine.jsonl");
        spdlog::info("examine: {} calls over {} unique items", r.calls, r.unique_items);
      };
    });
  }

  // augment
  {
    auto* cmd = app.add_subcommand("augment", "Synthesize general definitions");
    static std::string input, output;
    static BackendFlags flags;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--output", output)->required();
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      action = [] {
        auto backend = make_backend(flags, BackendRole::generator);
        EaeOptions o;
        o.concurrency = flags.concurrency;
        save_as(augment_dataset(load(input), *backend, flags.cfg, o), output);
      };
    });
  }

  // eae
  {
    auto* cmd = app.add_subcommand("eae", "Examine, augment the rejects, examine again");
    static std::string input, out;
    static BackendFlags flags;
    static bool no_dedup = false;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--out", out, "directory for the bucket files and stats.json")->required();
    cmd->add_flag("--no-dedup", no_dedup);
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      action = [] {
        // One stub flag set drives both roles; --stub-kind overrides only the augmenter.
        BackendFlags examiner_flags = flags;
        if (flags.kind == "stub") examiner_flags.stub_kind.clear();
        auto examiner = make_backend(examiner_flags, BackendRole::examiner);
        auto augmenter = make_backend(flags, BackendRole::generator);
        EaeOptions o;
        o.concurrency = flags.concurrency;
        o.dedup = !no_dedup;
        o.checkpoint = fs::path(out) / "checkpoint.json";
        fs::create_directories(out);
        const auto r = run_eae(load(input), *examiner, *augmenter, flags.cfg, o);
        write_eae_result(r, out);
        spdlog::info("eae: exp_good {}, exp_bad {}, syn_good {}, syn_bad {}, quarantined {}", r.stats.exp_good,
                     r.stats.exp_bad, r.stats.syn_good, r.stats.syn_bad, r.stats.quarantine + r.stats.syn_quarantine);
      };
    });
  }

  // select
  {
    auto* cmd = app.add_subcommand("select", "Score points and extract a top or bottom subset");
    static std::string input, strategy, direction = "top", out, subset_out, setting = "J_G2L", lexicon;
    static std::optional<std::uint64_t> seed;
    static std::optional<std::size_t> n;
    static BackendFlags flags;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--strategy", strategy)->required()->check(CLI::IsMember({"random", "syntax", "semantic", "model"}));
    cmd->add_option("--n", n, "subset size");
    cmd->add_option("--direction", direction)->check(CLI::IsMember({"top", "bottom"}));
    cmd->add_option("--seed", seed, "required for the random strategy");
    cmd->add_option("--out", out, "scores as JSON lines")->required();
    cmd->add_option("--subset-out", subset_out, "selected points");
    cmd->add_option("--setting", setting, "prompt setting for the model strategy");
    cmd->add_option("--lexicon", lexicon, "semantic: add lexicon definitions to the document statistics");
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      if (strategy == "random" && !seed) throw CLI::RequiredError("--seed is required for --strategy random");
      if (!subset_out.empty() && !n) throw CLI::RequiredError("--subset-out needs --n");
      action = [] {
        const auto d = load(input);
        ScoringResult r;
        if (strategy == "random") {
          r = score_random(d, *seed);
        } else if (strategy == "syntax") {
          r = score_syntax(d);
        } else if (strategy == "semantic") {
          std::vector<std::string> texts;
          for (const auto& p : d.points) {
            texts.push_back(p.lay_definition);
            if (p.general_definition) texts.push_back(*p.general_definition);
          }
          auto df = lexicon.empty() ? DocumentFrequency::build(texts)
                                    : lexicon_document_frequency(load_lexicon(lexicon), texts);
          r = score_semantic(d, BagOfWordsEmbedder(std::move(df)));
        } else {
          auto backend = make_backend(flags, BackendRole::generator);
          r = score_model(d, *backend, parse_setting(setting, std::nullopt), flags.cfg, flags.concurrency);
        }
        for (const auto& e : r.excluded) spdlog::warn("excluded '{}': {}", e.point_id, e.reason);
        if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
        save_scores(r.scores, out);
        spdlog::info("wrote {} scores to {}", r.scores.size(), out);
        if (!subset_out.empty())
          save_as(subset(d, laydef::select(r.scores, *n, *parse_direction(direction))), subset_out);
      };
    });
  }

  // split
  {
    auto* cmd = app.add_subcommand("split", "Jargon-disjoint train/eval/test split");
    static std::string expert, synthetic, out, ratio = "1:1";
    static std::size_t holdout = 1000;
    static std::uint64_t seed = 0;
    cmd->add_option("--expert", expert)->required();
    cmd->add_option("--synthetic", synthetic, "synthetic points; may be omitted");
    cmd->add_option("--holdout", holdout, "number of held-out jargon terms");
    cmd->add_option("--ratio", ratio, "eval:test term ratio");
    cmd->add_option("--seed", seed)->required();
    cmd->add_option("--out", out)->required();
    cmd->callback([&] {
      action = [] {
        SplitSpec spec;
        spec.holdout_term_count = holdout;
        spec.seed = seed;
        const auto colon = ratio.find(':');
        if (colon == std::string::npos) throw ValidationError("--ratio must look like 1:1");
        try {
          spec.eval_test_ratio = {static_cast<unsigned>(std::stoul(ratio.substr(0, colon))),
                                  static_cast<unsigned>(std::stoul(ratio.substr(colon + 1)))};
        } catch (const std::logic_error&) {
          throw ValidationError("--ratio must look like 1:1");
        }
        const Dataset syn = synthetic.empty() ? Dataset{"synthetic", {}} : load(synthetic);
        auto s = split_by_jargon(load(expert), syn, spec);
        const fs::path dir(out);
        save_as(std::move(s.train), dir / "train.jsonl");
        save_as(std::move(s.eval), dir / "eval.jsonl");
        save_as(std::move(s.test), dir / "test.jsonl");
        write_text(dir / "eval_terms.txt", join(s.eval_terms, "\n") + (s.eval_terms.empty() ? "" : "\n"));
        write_text(dir / "test_terms.txt", join(s.test_terms, "\n") + (s.test_terms.empty() ? "" : "\n"));
      };
    });
  }

  // mix
  {
    auto* cmd = app.add_subcommand("mix", "Concatenate expert data with a synthetic subset");
    static std::string expert, synthetic, output;
    cmd->add_option("--expert", expert)->required();
    cmd->add_option("--synthetic", synthetic)->required();
    cmd->add_option("--output", output)->required();
    cmd->callback([&] {
      action = [] {
        auto r = mix_datasets(load(expert), load(synthetic));
        for (const auto& w : r.warnings) spdlog::warn("mix: {}", w);
        save_as(std::move(r.dataset), output);
      };
    });
  }

  // generate
  {
    auto* cmd = app.add_subcommand("generate", "Generate lay definitions under one prompt setting");
    static std::string input, setting = "J2L", out, exemplar_term, exemplar_definition, run_id;
    static std::optional<int> target;
    static bool skip_missing = false;
    static BackendFlags flags;
    cmd->add_option("--input", input)->required();
    cmd->add_option("--setting", setting, "J2L, J_C2L, J_G2L, J_C_G2L, one_shot or readability");
    cmd->add_option("--target", target, "readability target grade 1..12");
    cmd->add_option("--out", out, "run directory")->required();
    cmd->add_option("--run-id", run_id);
    cmd->add_flag("--skip-missing", skip_missing, "skip points lacking a field the setting needs");
    cmd->add_option("--exemplar-term", exemplar_term, "one-shot example term");
    cmd->add_option("--exemplar-definition", exemplar_definition, "one-shot example lay definition");
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      action = [] {
        auto backend = make_backend(flags, BackendRole::generator);
        RunOptions o;
        o.run_id = run_id;
        o.skip_policy = skip_missing ? SkipPolicy::skip : SkipPolicy::fail;
        o.concurrency = flags.concurrency;
        o.dir = fs::path(out);
        if (!exemplar_term.empty()) o.prompt.exemplar.term = exemplar_term;
        if (!exemplar_definition.empty()) o.prompt.exemplar.definition = exemplar_definition;
        const auto run = run_generation(load(input), parse_setting(setting, target), *backend, flags.cfg, o);
        for (const auto& s : run.skipped) spdlog::warn("skipped '{}': {}", s.point_id, s.reason);
        spdlog::info("generate: {} outputs in {}", run.outputs.size(), out);
      };
    });
  }

  // evaluate
  {
    auto* cmd = app.add_subcommand("evaluate", "Score a run against reference lay definitions");
    static std::string run_dir, refs, lexicon, out, name;
    cmd->add_option("--run", run_dir)->required();
    cmd->add_option("--refs", refs)->required();
    cmd->add_option("--lexicon", lexicon)->required();
    cmd->add_option("--out", out, "directory for metrics.json and metrics.txt (default: the run directory)");
    cmd->add_option("--name", name, "row label in metrics.txt (default: the run id)");
    cmd->callback([&] {
      action = [] {
        const auto run = load_run(run_dir);
        const auto report = evaluate_run(run, load(refs), load_lexicon(lexicon));
        const fs::path dir = out.empty() ? fs::path(run_dir) : fs::path(out);
        write_json_file(dir / "metrics.json", to_json(report));
        write_text(dir / "metrics.txt", format_metric_table({{name.empty() ? run.run_id : name, report}}));
      };
    });
  }

  // readability
  {
    auto* cmd = app.add_subcommand("readability", "Mean FKGL per target grade, 1 to 12");
    static std::string input, out, system = "system";
    static std::vector<std::string> runs;
    static bool skip_missing = false;
    static BackendFlags flags;
    cmd->add_option("--input", input, "generate one run per target from this dataset");
    cmd->add_option("--runs", runs, "existing readability run directories");
    cmd->add_option("--out", out)->required();
    cmd->add_option("--system", system, "column label");
    cmd->add_flag("--skip-missing", skip_missing, "skip points without a general definition");
    add_backend_flags(cmd, flags);
    cmd->callback([&] {
      if (input.empty() == runs.empty()) throw CLI::ValidationError("give exactly one of --input and --runs");
      action = [] {
        std::vector<RunRecord> records;
        const fs::path dir(out);
        if (!input.empty()) {
          auto backend = make_backend(flags, BackendRole::generator);
          const auto d = load(input);
          for (int t = 1; t <= 12; ++t) {
            RunOptions o;
            o.concurrency = flags.concurrency;
            o.dir = dir / ("target-" + std::to_string(t));
            if (skip_missing) o.skip_policy = SkipPolicy::skip;
            records.push_back(run_generation(d, TaskSetting::readability(t), *backend, flags.cfg, o));
          }
        } else {
          for (const auto& r : runs) records.push_back(load_run(r));
        }
        const auto report = readability_report(records);
        for (int t : report.missing_targets) spdlog::warn("readability: no outputs for target {}", t);
        write_text(dir / "readability.txt", format_readability_table({{system, report}}));
        write_json_file(dir / "readability.json", to_json(report));
      };
    });
  }

  // review-serve
  {
    auto* cmd = app.add_subcommand("review-serve", "Serve the human review API");
    static std::string log_path, static_dir;
    static std::vector<std::string> datasets, run_dirs;
    static ReviewServerOptions options;
    cmd->add_option("--log", log_path, "append-only judgment log")->required();
    cmd->add_option("--dataset", datasets, "name=path, repeatable");
    cmd->add_option("--run", run_dirs, "name=run-directory, repeatable");
    cmd->add_option("--host", options.host);
    cmd->add_option("--port", options.port);
    cmd->add_option("--static", static_dir, "directory served at /");
    cmd->callback([&] {
      action = [] {
        ReviewCatalog catalog;
        for (const auto& a : datasets) {
          auto [name, path] = split_assignment(a);
          catalog.datasets.emplace(name, load_dataset(path, name));
        }
        for (const auto& a : run_dirs) {
          auto [name, path] = split_assignment(a);
          catalog.runs.emplace(name, load_run(path));
        }
        if (!static_dir.empty()) options.static_dir = static_dir;
        ReviewService service(std::move(catalog), log_path);
        serve_review(service, options);
      };
    });
  }

  // stats
  {
    auto* cmd = app.add_subcommand("stats", "Statistics from a review log");
    static std::string log_path, session, group, out, corrections;
    cmd->add_option("--log", log_path)->required()->check(CLI::ExistingFile);
    auto* s = cmd->add_option("--session", session);
    cmd->add_option("--group", group)->excludes(s);
    cmd->add_option("--out", out, "statistics JSON")->required();
    cmd->add_option("--export-corrections", corrections, "write corrected lay definitions as a dataset");
    cmd->callback([&] {
      action = [] {
        ReviewService service({}, log_path);
        nlohmann::ordered_json stats;
        if (!session.empty()) {
          stats = service.session_stats(session);
        } else if (!group.empty()) {
          stats = service.group_stats(group);
        } else {
          stats = nlohmann::ordered_json::array();
          std::set<std::string> ids;
          for (const auto& j : service.judgments()) ids.insert(j.session_id);
          for (const auto& id : ids) stats.push_back(service.session_stats(id));
        }
        write_json_file(out, stats);
        if (!corrections.empty()) save_as(service.export_corrections(), corrections);
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    action();
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitOperational;
  }
  return 0;
}
