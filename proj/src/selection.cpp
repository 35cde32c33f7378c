#include "laydef/selection.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>

#include <spdlog/spdlog.h>

#include "laydef/error.hpp"
#include "laydef/metrics.hpp"
#include "laydef/parallel.hpp"
#include "laydef/random.hpp"
#include "laydef/text.hpp"

namespace laydef {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::random: return "random";
    case Strategy::syntax: return "syntax";
    case Strategy::semantic: return "semantic";
    case Strategy::model: return "model";
  }
  return "";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (auto v : {Strategy::random, Strategy::syntax, Strategy::semantic, Strategy::model})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<Direction> parse_direction(std::string_view s) {
  if (s == "top") return Direction::top;
  if (s == "bottom") return Direction::bottom;
  return std::nullopt;
}

std::vector<SelectionScore> rank_scores(std::vector<SelectionScore> scores) {
  std::sort(scores.begin(), scores.end(), [](const SelectionScore& a, const SelectionScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.point_id < b.point_id;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = i + 1;
  return scores;
}

ScoringResult score_random(const Dataset& d, std::uint64_t seed) {
  std::vector<std::string> ids;
  ids.reserve(d.size());
  for (const auto& p : d.points) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  SeededRng rng(seed);
  rng.shuffle(ids);

  ScoringResult r;
  const auto n = ids.size();
  for (std::size_t pos = 0; pos < n; ++pos)
    r.scores.push_back({ids[pos], Strategy::random, static_cast<double>(n - pos), pos + 1});
  return r;
}

namespace {

template <typename Fn>
ScoringResult score_pairs(const Dataset& d, Strategy strategy, Fn&& fn) {
  ScoringResult r;
  for (const auto& p : d.points) {
    if (!p.general_definition) {
      r.excluded.push_back({p.id, "missing general_definition"});
      continue;
    }
    r.scores.push_back({p.id, strategy, fn(*p.general_definition, p.lay_definition), 0});
  }
  r.scores = rank_scores(std::move(r.scores));
  return r;
}

}  // namespace

ScoringResult score_syntax(const Dataset& d) {
  return score_pairs(d, Strategy::syntax,
                     [](const std::string& g, const std::string& lay) { return rouge_l(g, lay).f1; });
}

ScoringResult score_semantic(const Dataset& d, const Embedder& embedder) {
  return score_pairs(d, Strategy::semantic, [&](const std::string& g, const std::string& lay) {
    return cosine(embedder.embed(g), embedder.embed(lay));
  });
}

ScoringResult score_model(const Dataset& d, GenerationBackend& backend, const TaskSetting& setting,
                          const GenerationConfig& cfg, std::size_t concurrency) {
  validate(setting);
  std::vector<std::optional<double>> scores(d.size());
  std::vector<std::string> errors(d.size());
  parallel_for(d.size(), concurrency, [&](std::size_t i) {
    const auto& p = d.points[i];
    try {
      const auto generated = generate(build_prompt(setting, p), cfg, backend);
      scores[i] = rouge_l(generated, p.lay_definition).f1;
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  ScoringResult r;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (scores[i]) {
      r.scores.push_back({d.points[i].id, Strategy::model, *scores[i], 0});
    } else {
      spdlog::warn("model scoring skipped '{}': {}", d.points[i].id, errors[i]);
      r.excluded.push_back({d.points[i].id, errors[i]});
    }
  }
  r.scores = rank_scores(std::move(r.scores));
  return r;
}

std::vector<std::string> select(const std::vector<SelectionScore>& scores, std::size_t n, Direction direction) {
  if (n > scores.size())
    throw CapacityError("select: asked for " + std::to_string(n) + " of " + std::to_string(scores.size()) +
                        " scored points");
  std::vector<const SelectionScore*> by_rank;
  by_rank.reserve(scores.size());
  for (const auto& s : scores) by_rank.push_back(&s);
  std::sort(by_rank.begin(), by_rank.end(), [](auto* a, auto* b) { return a->rank < b->rank; });

  const std::size_t first = direction == Direction::top ? 0 : scores.size() - n;
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = first; i < first + n; ++i) out.push_back(by_rank[i]->point_id);
  return out;
}

Dataset subset(const Dataset& d, const std::vector<std::string>& ids) {
  Dataset out;
  out.name = d.name;
  out.points.reserve(ids.size());
  for (const auto& id : ids) {
    const auto* p = d.find(id);
    if (!p) throw IntegrityError("selected id '" + id + "' not in dataset '" + d.name + "'");
    out.points.push_back(*p);
  }
  return out;
}

nlohmann::ordered_json to_json(const SelectionScore& s) {
  return {{"point_id", s.point_id}, {"strategy", to_string(s.strategy)}, {"score", s.score}, {"rank", s.rank}};
}

SelectionScore selection_score_from_json(const nlohmann::json& j) {
  SelectionScore s;
  s.point_id = j.at("point_id").get<std::string>();
  const auto name = j.at("strategy").get<std::string>();
  const auto strategy = parse_strategy(name);
  if (!strategy) throw ValidationError("unknown strategy '" + name + "'");
  s.strategy = *strategy;
  s.score = j.at("score").get<double>();
  s.rank = j.at("rank").get<std::size_t>();
  return s;
}

void save_scores(const std::vector<SelectionScore>& scores, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& s : scores) out << to_json(s).dump() << '\n';
  if (!out) throw Error("cannot write " + path.string());
}

std::vector<SelectionScore> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  std::vector<SelectionScore> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      out.push_back(selection_score_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), n, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(path.string(), n, e.what());
    }
  }
  return out;
}

}  // namespace laydef
