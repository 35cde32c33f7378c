#include "laydef/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "laydef/error.hpp"
#include "laydef/io.hpp"
#include "laydef/parallel.hpp"
#include "laydef/text.hpp"

namespace laydef {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

ordered_json setting_json(const TaskSetting& s) {
  ordered_json j{{"kind", to_string(s.kind)}};
  j["target_fkgl"] = s.target_fkgl ? ordered_json(*s.target_fkgl) : ordered_json(nullptr);
  return j;
}

TaskSetting setting_from_json(const ordered_json& j) {
  const auto name = j.at("kind").get<std::string>();
  const auto kind = parse_task_kind(name);
  if (!kind) throw ValidationError("unknown task setting '" + name + "'");
  TaskSetting s{*kind, std::nullopt};
  if (j.contains("target_fkgl") && !j["target_fkgl"].is_null()) s.target_fkgl = j["target_fkgl"].get<int>();
  validate(s);
  return s;
}

std::string lines_of(const std::vector<ordered_json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

}  // namespace

ordered_json run_metadata(const RunRecord& run) {
  ordered_json skipped = ordered_json::array();
  for (const auto& s : run.skipped) skipped.push_back({{"point_id", s.point_id}, {"reason", s.reason}});
  return ordered_json{
      {"run_id", run.run_id},
      {"setting", setting_json(run.setting)},
      {"generation", to_json(run.cfg)},
      {"backend", run.backend},
      {"started_at", run.started_at},
      {"finished_at", run.finished_at.empty() ? ordered_json(nullptr) : ordered_json(run.finished_at)},
      {"outputs", run.outputs.size()},
      {"skipped", std::move(skipped)},
  };
}

RunRecord run_generation(const Dataset& d, const TaskSetting& setting, GenerationBackend& backend,
                         const GenerationConfig& cfg, const RunOptions& options) {
  validate(setting);
  validate(cfg);

  RunRecord run;
  run.run_id = options.run_id.empty() ? label(setting) : options.run_id;
  run.setting = setting;
  run.cfg = cfg;
  run.backend = backend.identity();
  run.started_at = utc_timestamp();

  // Render everything first so a missing field fails before any call.
  std::vector<std::size_t> todo;
  std::vector<ChatPrompt> prompts(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    try {
      prompts[i] = build_prompt(setting, d.points[i], options.prompt);
      todo.push_back(i);
    } catch (const PreconditionError& e) {
      if (options.skip_policy == SkipPolicy::fail) throw;
      run.skipped.push_back({d.points[i].id, e.what()});
    }
  }

  std::optional<fs::path> checkpoint_path;
  std::unordered_map<std::string, std::string> resumed;
  if (options.dir) {
    fs::create_directories(*options.dir);
    write_json_file(*options.dir / "run.json", run_metadata(run));
    std::vector<ordered_json> rows;
    for (auto i : todo) rows.push_back({{"point_id", d.points[i].id}, {"prompt", to_json(prompts[i])}});
    write_file_atomic(*options.dir / "prompts.jsonl", lines_of(rows));

    checkpoint_path = *options.dir / "checkpoint.json";
    if (fs::exists(*checkpoint_path)) {
      const auto cp = read_json_file(*checkpoint_path);
      if (cp.at("setting") == setting_json(setting))
        for (const auto& [id, text] : cp.at("outputs").items()) resumed.emplace(id, text.get<std::string>());
      spdlog::info("resuming {} outputs from {}", resumed.size(), checkpoint_path->string());
    }
  }

  std::vector<std::optional<std::string>> texts(todo.size());
  for (std::size_t k = 0; k < todo.size(); ++k) {
    auto it = resumed.find(d.points[todo[k]].id);
    if (it != resumed.end()) texts[k] = it->second;
  }

  try {
    parallel_for(todo.size(), options.concurrency, [&](std::size_t k) {
      if (texts[k]) return;
      texts[k] = generate(prompts[todo[k]], cfg, backend);
    });
  } catch (...) {
    if (checkpoint_path) {
      ordered_json done = ordered_json::object();
      for (std::size_t k = 0; k < todo.size(); ++k)
        if (texts[k]) done[d.points[todo[k]].id] = *texts[k];
      write_json_file(*checkpoint_path, {{"setting", setting_json(setting)}, {"outputs", done}});
      spdlog::error("generation aborted; {} completed outputs saved to {}", done.size(), checkpoint_path->string());
    }
    throw;
  }

  for (std::size_t k = 0; k < todo.size(); ++k) run.outputs.push_back({d.points[todo[k]].id, *texts[k]});
  run.finished_at = utc_timestamp();

  if (options.dir) {
    std::vector<ordered_json> rows;
    for (const auto& o : run.outputs) rows.push_back({{"point_id", o.point_id}, {"output", o.text}});
    write_file_atomic(*options.dir / "outputs.jsonl", lines_of(rows));
    write_json_file(*options.dir / "run.json", run_metadata(run));
    if (checkpoint_path && fs::exists(*checkpoint_path)) fs::remove(*checkpoint_path);
  }
  return run;
}

RunRecord load_run(const fs::path& dir) {
  const auto meta = read_json_file(dir / "run.json");
  RunRecord run;
  try {
    run.run_id = meta.at("run_id").get<std::string>();
    run.setting = setting_from_json(meta.at("setting"));
    run.cfg = generation_config_from_json(meta.at("generation"));
    run.backend = meta.at("backend").get<std::string>();
    run.started_at = meta.at("started_at").get<std::string>();
    if (!meta.at("finished_at").is_null()) run.finished_at = meta["finished_at"].get<std::string>();
    for (const auto& s : meta.at("skipped"))
      run.skipped.push_back({s.at("point_id").get<std::string>(), s.at("reason").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError((dir / "run.json").string(), 0, e.what());
  }
  if (run.finished_at.empty()) throw IntegrityError("run " + dir.string() + " did not finish");

  const fs::path outputs = dir / "outputs.jsonl";
  std::istringstream in(read_file(outputs));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      run.outputs.push_back({j.at("point_id").get<std::string>(), j.at("output").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(outputs.string(), n, e.what());
    }
  }
  return run;
}

MetricReport evaluate_run(const RunRecord& run, const Dataset& refs, const ConceptLexicon& lex) {
  std::vector<ScoredPair> pairs;
  pairs.reserve(run.outputs.size());
  for (const auto& o : run.outputs) {
    const auto* ref = refs.find(o.point_id);
    if (!ref) throw IntegrityError("output '" + o.point_id + "' has no reference in '" + refs.name + "'");
    pairs.push_back({o.point_id, o.text, ref->lay_definition});
  }
  return evaluate_pairs(pairs, lex);
}

ReadabilityReport readability_report(const std::vector<RunRecord>& runs) {
  std::map<int, const RunRecord*> by_target;
  for (const auto& r : runs) {
    if (r.setting.kind != TaskKind::readability || !r.setting.target_fkgl)
      throw ValidationError("run '" + r.run_id + "' is not a readability run");
    if (!by_target.emplace(*r.setting.target_fkgl, &r).second)
      throw ValidationError("two runs for readability target " + std::to_string(*r.setting.target_fkgl));
  }

  ReadabilityReport report;
  double deviation = 0.0;
  std::size_t present = 0;
  for (int t = 1; t <= 12; ++t) {
    ReadabilityRow row{t, std::nullopt, 0};
    auto it = by_target.find(t);
    if (it != by_target.end()) {
      double sum = 0.0;
      for (const auto& o : it->second->outputs) {
        if (tokenize(o.text).empty()) continue;
        sum += fkgl(o.text);
        ++row.outputs;
      }
      if (row.outputs > 0) row.mean_fkgl = sum / static_cast<double>(row.outputs);
    }
    if (row.mean_fkgl) {
      deviation += std::abs(*row.mean_fkgl - t);
      ++present;
    } else {
      report.missing_targets.push_back(t);
    }
    report.rows.push_back(row);
  }
  if (present > 0) report.mean_abs_deviation = deviation / static_cast<double>(present);
  return report;
}

namespace {

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string format_readability_table(const std::vector<std::pair<std::string, ReadabilityReport>>& systems) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header{"[X]"};
  for (const auto& [name, _] : systems) header.push_back(name);
  cells.push_back(header);
  for (int t = 1; t <= 12; ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (const auto& [_, r] : systems) {
      const auto& m = r.rows.at(static_cast<std::size_t>(t - 1)).mean_fkgl;
      row.push_back(m ? fixed4(*m) : "missing");
    }
    cells.push_back(row);
  }
  std::vector<std::string> mad{"MAD"};
  for (const auto& [_, r] : systems) mad.push_back(r.mean_abs_deviation ? fixed4(*r.mean_abs_deviation) : "missing");
  cells.push_back(mad);

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += " | ";
      out += row[c];
      if (c + 1 < row.size()) out.append(width[c] - row[c].size(), ' ');
    }
    out += '\n';
  }
  return out;
}

ordered_json to_json(const ReadabilityReport& r) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"target", row.target},
                    {"mean_fkgl", row.mean_fkgl ? ordered_json(*row.mean_fkgl) : ordered_json(nullptr)},
                    {"outputs", row.outputs}});
  return {{"rows", rows},
          {"missing_targets", r.missing_targets},
          {"mean_abs_deviation", r.mean_abs_deviation ? ordered_json(*r.mean_abs_deviation) : ordered_json(nullptr)}};
}

std::string_view to_string(Side s) { return s == Side::left ? "left" : "right"; }

std::optional<Side> parse_side(std::string_view s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  return std::nullopt;
}

WinRate win_rate(const std::vector<PreferenceJudgment>& judgments, std::string_view group) {
  WinRate w;
  for (const auto& j : judgments) {
    if (j.group != group) continue;
    w.wins.try_emplace(j.left_system, 0);
    w.wins.try_emplace(j.right_system, 0);
    ++w.wins[j.chosen_system()];
    ++w.total;
  }
  if (w.total == 0) throw UndefinedInputError("win rate: no judgments in group '" + std::string(group) + "'");
  for (const auto& [system, n] : w.wins) w.rates[system] = static_cast<double>(n) / static_cast<double>(w.total);
  return w;
}

ordered_json to_json(const WinRate& w) {
  ordered_json wins = ordered_json::object();
  ordered_json rates = ordered_json::object();
  for (const auto& [s, n] : w.wins) wins[s] = n;
  for (const auto& [s, r] : w.rates) rates[s] = r;
  return {{"total", w.total}, {"wins", wins}, {"rates", rates}};
}

}  // namespace laydef
