#include "laydef/review.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <unistd.h>

#include <spdlog/spdlog.h>

#include "laydef/error.hpp"
#include "laydef/io.hpp"
#include "laydef/random.hpp"
#include "laydef/text.hpp"

namespace laydef {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string_view to_string(ReviewMode m) { return m == ReviewMode::quality ? "quality" : "preference"; }

std::optional<ReviewMode> parse_review_mode(std::string_view s) {
  if (s == "quality") return ReviewMode::quality;
  if (s == "preference") return ReviewMode::preference;
  return std::nullopt;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

std::optional<bool> optional_bool(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw ValidationError(std::string("field '") + key + "' must be a boolean");
  return it->get<bool>();
}

ordered_json item_json(const ReviewItem& it) {
  return {{"item_id", it.item_id},         {"source", it.source},
          {"point", to_json(it.point)},     {"left_system", it.left_system},
          {"right_system", it.right_system}, {"left_text", it.left_text},
          {"right_text", it.right_text}};
}

ReviewItem item_from_json(const ordered_json& j) {
  ReviewItem it;
  it.item_id = j.at("item_id").get<std::string>();
  it.source = j.at("source").get<std::string>();
  it.point = data_point_from_json(j.at("point"));
  it.left_system = j.at("left_system").get<std::string>();
  it.right_system = j.at("right_system").get<std::string>();
  it.left_text = j.at("left_text").get<std::string>();
  it.right_text = j.at("right_text").get<std::string>();
  return it;
}

ordered_json judgment_json(const ReviewJudgment& j) {
  ordered_json out{{"type", "judgment"},
                   {"session_id", j.session_id},
                   {"item_id", j.item_id},
                   {"evaluator_id", j.evaluator_id},
                   {"timestamp", j.timestamp},
                   {"mode", to_string(j.mode)}};
  if (j.mode == ReviewMode::quality) {
    out["hard"] = j.hard;
    out["soft"] = j.soft;
    out["corrected_lay"] = j.corrected_lay ? ordered_json(*j.corrected_lay) : ordered_json(nullptr);
  } else {
    out["left_system"] = j.left_system;
    out["right_system"] = j.right_system;
    out["choice"] = to_string(j.choice);
  }
  return out;
}

ReviewJudgment judgment_from_event(const ordered_json& e) {
  ReviewJudgment j;
  j.session_id = e.at("session_id").get<std::string>();
  j.item_id = e.at("item_id").get<std::string>();
  j.evaluator_id = e.at("evaluator_id").get<std::string>();
  j.timestamp = e.at("timestamp").get<std::string>();
  j.mode = parse_review_mode(e.at("mode").get<std::string>()).value();
  if (j.mode == ReviewMode::quality) {
    j.hard = e.at("hard").get<bool>();
    j.soft = e.at("soft").get<bool>();
    if (!e.at("corrected_lay").is_null()) j.corrected_lay = e["corrected_lay"].get<std::string>();
  } else {
    j.left_system = e.at("left_system").get<std::string>();
    j.right_system = e.at("right_system").get<std::string>();
    j.choice = parse_side(e.at("choice").get<std::string>()).value();
  }
  return j;
}

ordered_json rate(std::size_t n, std::size_t of) {
  return of == 0 ? ordered_json(nullptr) : ordered_json(static_cast<double>(n) / static_cast<double>(of));
}

ordered_json preference_stats(const std::vector<ReviewJudgment>& all, const std::string& group,
                              const std::set<std::string>& sessions, const std::set<std::string>& systems) {
  std::vector<PreferenceJudgment> prefs;
  for (const auto& j : all)
    if (j.mode == ReviewMode::preference && sessions.count(j.session_id))
      prefs.push_back({group, j.evaluator_id, j.item_id, j.left_system, j.right_system, j.choice});
  if (prefs.empty()) {
    ordered_json wins = ordered_json::object();
    ordered_json rates = ordered_json::object();
    for (const auto& s : systems) {
      wins[s] = 0;
      rates[s] = nullptr;
    }
    return {{"group", group}, {"total", 0}, {"wins", wins}, {"rates", rates}};
  }
  const auto rates = to_json(win_rate(prefs, group));
  ordered_json out{{"group", group}};
  for (const auto& [k, v] : rates.items()) out[k] = v;
  return out;
}

}  // namespace

SessionRequest session_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("session request must be a JSON object");
  SessionRequest r;
  const auto mode = field<std::string>(j, "mode", "");
  const auto parsed = parse_review_mode(mode);
  if (!parsed) throw ValidationError("mode must be 'quality' or 'preference'");
  r.mode = *parsed;
  r.evaluator_id = field<std::string>(j, "evaluator_id", "");
  if (r.evaluator_id.empty()) throw ValidationError("evaluator_id is required");
  if (!j.contains("seed")) throw ValidationError("seed is required");
  r.seed = field<std::uint64_t>(j, "seed", 0);
  const auto size = field<std::int64_t>(j, "sample_size", -1);
  if (size < 0) throw ValidationError("sample_size must be a non-negative integer");
  r.sample_size = static_cast<std::size_t>(size);
  r.sources = field<std::vector<std::string>>(j, "sources", {});
  r.systems = field<std::vector<std::string>>(j, "systems", {});
  r.refs = field<std::string>(j, "refs", "");
  r.group = field<std::string>(j, "group", "");
  return r;
}

JudgmentInput judgment_input_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("judgment must be a JSON object");
  JudgmentInput in;
  in.item_id = field<std::string>(j, "item_id", "");
  if (in.item_id.empty()) throw ValidationError("item_id is required");
  in.evaluator_id = field<std::string>(j, "evaluator_id", "");
  in.hard = optional_bool(j, "hard");
  in.soft = optional_bool(j, "soft");
  if (j.contains("corrected_lay") && !j["corrected_lay"].is_null()) {
    if (!j["corrected_lay"].is_string()) throw ValidationError("corrected_lay must be a string");
    in.corrected_lay = j["corrected_lay"].get<std::string>();
  }
  if (j.contains("choice") && !j["choice"].is_null()) {
    const auto c = field<std::string>(j, "choice", "");
    if (c == "A") in.choice = Side::left;
    else if (c == "B") in.choice = Side::right;
    else in.choice = parse_side(c);
    if (!in.choice) throw ValidationError("choice must be 'left', 'right', 'A' or 'B'");
  }
  return in;
}

ReviewService::ReviewService(ReviewCatalog catalog, fs::path log_path)
    : catalog_(std::move(catalog)), log_path_(std::move(log_path)) {
  if (fs::exists(log_path_)) {
    std::istringstream in(read_file(log_path_));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (trim(line).empty()) continue;
      try {
        apply(ordered_json::parse(line), n);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(log_path_.string(), n, e.what());
      } catch (const std::bad_optional_access&) {
        throw ParseError(log_path_.string(), n, "bad enum value");
      }
    }
    spdlog::info("replayed {} sessions, {} judgments from {}", sessions_.size(), judgments_.size(),
                 log_path_.string());
  } else if (log_path_.has_parent_path()) {
    fs::create_directories(log_path_.parent_path());
  }
  log_ = std::fopen(log_path_.c_str(), "ab");
  if (!log_) throw Error("cannot open review log " + log_path_.string());
}

ReviewService::~ReviewService() {
  if (log_) std::fclose(log_);
}

void ReviewService::append(const ordered_json& event) {
  const auto line = event.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), log_) != line.size() || std::fflush(log_) != 0 ||
      ::fsync(::fileno(log_)) != 0)
    throw Error("cannot append to review log " + log_path_.string());
}

void ReviewService::apply(const ordered_json& e, std::size_t line) {
  const auto type = e.at("type").get<std::string>();
  if (type == "session") {
    ReviewSession s;
    s.id = e.at("id").get<std::string>();
    s.mode = parse_review_mode(e.at("mode").get<std::string>()).value();
    s.evaluator_id = e.at("evaluator_id").get<std::string>();
    s.group = e.at("group").get<std::string>();
    s.seed = e.at("seed").get<std::uint64_t>();
    s.created_at = e.at("created_at").get<std::string>();
    for (const auto& it : e.at("items")) s.items.push_back(item_from_json(it));
    if (sessions_.count(s.id)) throw ParseError(log_path_.string(), line, "duplicate session '" + s.id + "'");
    sessions_.emplace(s.id, std::move(s));
    ++next_session_;
  } else if (type == "judgment") {
    auto j = judgment_from_event(e);
    auto it = sessions_.find(j.session_id);
    if (it == sessions_.end())
      throw ParseError(log_path_.string(), line, "judgment for unknown session '" + j.session_id + "'");
    auto& s = it->second;
    if (s.done() || s.items[s.cursor].item_id != j.item_id)
      throw ParseError(log_path_.string(), line, "judgment out of order for item '" + j.item_id + "'");
    ++s.cursor;
    judgments_.push_back(std::move(j));
  } else {
    throw ParseError(log_path_.string(), line, "unknown event type '" + type + "'");
  }
}

const ReviewSession& ReviewService::find(const std::string& session_id) const {
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  return it->second;
}

ReviewSession ReviewService::create_session(const SessionRequest& r) {
  std::lock_guard lock(mutex_);
  if (r.evaluator_id.empty()) throw ValidationError("evaluator_id is required");

  ReviewSession s;
  s.mode = r.mode;
  s.evaluator_id = r.evaluator_id;
  s.seed = r.seed;
  SeededRng rng(r.seed);

  if (r.mode == ReviewMode::quality) {
    if (r.sources.empty()) throw ValidationError("quality session needs at least one source dataset");
    std::vector<std::pair<const Dataset*, std::size_t>> pool;
    for (const auto& name : r.sources) {
      auto it = catalog_.datasets.find(name);
      if (it == catalog_.datasets.end()) throw IntegrityError("unknown dataset '" + name + "'");
      for (std::size_t i = 0; i < it->second.size(); ++i) pool.emplace_back(&it->second, i);
    }
    if (r.sample_size > pool.size())
      throw CapacityError("sample of " + std::to_string(r.sample_size) + " from " + std::to_string(pool.size()) +
                          " available items");
    for (const auto& [d, i] : rng.sample(pool, r.sample_size)) {
      ReviewItem item;
      item.source = d->name;
      item.point = d->points[i];
      item.item_id = d->name + "/" + item.point.id;
      s.items.push_back(std::move(item));
    }
  } else {
    if (r.systems.size() != 2) throw ValidationError("preference session needs exactly two systems");
    if (r.systems[0] == r.systems[1]) throw ValidationError("preference systems must differ");
    const RunRecord* runs[2];
    for (int k = 0; k < 2; ++k) {
      auto it = catalog_.runs.find(r.systems[k]);
      if (it == catalog_.runs.end()) throw IntegrityError("unknown run '" + r.systems[k] + "'");
      runs[k] = &it->second;
    }
    auto refs = catalog_.datasets.find(r.refs);
    if (refs == catalog_.datasets.end()) throw IntegrityError("unknown reference dataset '" + r.refs + "'");

    std::map<std::string, std::string> a, b;
    for (const auto& o : runs[0]->outputs) a.emplace(o.point_id, o.text);
    for (const auto& o : runs[1]->outputs) b.emplace(o.point_id, o.text);
    std::vector<std::string> shared;
    for (const auto& [id, _] : a)
      if (b.count(id) && refs->second.find(id)) shared.push_back(id);
    if (r.sample_size > shared.size())
      throw CapacityError("sample of " + std::to_string(r.sample_size) + " from " + std::to_string(shared.size()) +
                          " shared items");

    s.group = r.group.empty() ? r.systems[0] + "-vs-" + r.systems[1] : r.group;
    for (const auto& id : rng.sample(shared, r.sample_size)) {
      ReviewItem item;
      item.item_id = id;
      item.source = r.refs;
      item.point = *refs->second.find(id);
      const bool swap = rng.coin();
      item.left_system = r.systems[swap ? 1 : 0];
      item.right_system = r.systems[swap ? 0 : 1];
      item.left_text = swap ? b.at(id) : a.at(id);
      item.right_text = swap ? a.at(id) : b.at(id);
      s.items.push_back(std::move(item));
    }
  }

  s.id = "s" + std::to_string(next_session_);
  s.created_at = utc_timestamp();
  ordered_json items = ordered_json::array();
  for (const auto& it : s.items) items.push_back(item_json(it));
  append({{"type", "session"},
          {"id", s.id},
          {"mode", to_string(s.mode)},
          {"evaluator_id", s.evaluator_id},
          {"group", s.group},
          {"seed", s.seed},
          {"created_at", s.created_at},
          {"items", items}});
  ++next_session_;
  sessions_.emplace(s.id, s);
  return s;
}

std::optional<ordered_json> ReviewService::next_item(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto& s = find(session_id);
  if (s.done()) return std::nullopt;
  const auto& it = s.items[s.cursor];
  ordered_json p{{"session_id", s.id},
                 {"mode", to_string(s.mode)},
                 {"position", s.cursor + 1},
                 {"total", s.items.size()},
                 {"item_id", it.item_id},
                 {"jargon", it.point.jargon}};
  if (s.mode == ReviewMode::quality) {
    p["general_definition"] = it.point.general_definition ? ordered_json(*it.point.general_definition)
                                                          : ordered_json(nullptr);
    p["lay_definition"] = it.point.lay_definition;
  } else {
    p["reference"] = it.point.lay_definition;
    p["candidates"] = {{"A", it.left_text}, {"B", it.right_text}};
  }
  return p;
}

ordered_json ReviewService::submit_judgment(const std::string& session_id, const JudgmentInput& in) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + session_id + "'");
  auto& s = it->second;

  if (!in.evaluator_id.empty() && in.evaluator_id != s.evaluator_id)
    throw ValidationError("evaluator '" + in.evaluator_id + "' does not own session '" + s.id + "'");
  if (s.done()) throw ConflictError("session '" + s.id + "' is complete");
  const auto& item = s.items[s.cursor];
  if (item.item_id != in.item_id) {
    const bool judged = std::any_of(s.items.begin(), s.items.begin() + static_cast<std::ptrdiff_t>(s.cursor),
                                    [&](const ReviewItem& x) { return x.item_id == in.item_id; });
    throw ConflictError(judged ? "item '" + in.item_id + "' was already judged"
                               : "item '" + in.item_id + "' is not the current item '" + item.item_id + "'");
  }

  ReviewJudgment j;
  j.session_id = s.id;
  j.item_id = item.item_id;
  j.evaluator_id = s.evaluator_id;
  j.mode = s.mode;
  if (s.mode == ReviewMode::quality) {
    if (!in.hard || !in.soft) throw ValidationError("quality judgment needs 'hard' and 'soft'");
    if (in.choice) throw ValidationError("quality judgment takes no 'choice'");
    if (*in.hard && !*in.soft) throw ValidationError("hard correlation implies soft correlation");
    j.hard = *in.hard;
    j.soft = *in.soft;
    if (in.corrected_lay && !trim(*in.corrected_lay).empty()) j.corrected_lay = std::string(trim(*in.corrected_lay));
  } else {
    if (!in.choice) throw ValidationError("preference judgment needs 'choice'");
    if (in.hard || in.soft || in.corrected_lay) throw ValidationError("preference judgment takes only 'choice'");
    j.left_system = item.left_system;
    j.right_system = item.right_system;
    j.choice = *in.choice;
  }
  j.timestamp = utc_timestamp();

  append(judgment_json(j));
  judgments_.push_back(std::move(j));
  ++s.cursor;
  return {{"accepted", true},
          {"session_id", s.id},
          {"item_id", in.item_id},
          {"judged", s.cursor},
          {"total", s.items.size()},
          {"done", s.done()}};
}

ordered_json ReviewService::session_stats(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto& s = find(session_id);
  ordered_json out{{"session_id", s.id},
                   {"mode", to_string(s.mode)},
                   {"evaluator_id", s.evaluator_id},
                   {"total", s.items.size()},
                   {"judged", s.cursor},
                   {"done", s.done()}};

  if (s.mode == ReviewMode::quality) {
    struct Counts {
      std::size_t judged = 0, hard = 0, soft = 0, corrected = 0;
    };
    std::map<std::string, Counts> per_source;
    for (const auto& it : s.items) per_source.try_emplace(it.source);
    std::map<std::string, std::string> source_of;
    for (const auto& it : s.items) source_of[it.item_id] = it.source;
    Counts all;
    for (const auto& j : judgments_) {
      if (j.session_id != s.id) continue;
      for (Counts* c : {&per_source[source_of.at(j.item_id)], &all}) {
        ++c->judged;
        c->hard += j.hard;
        c->soft += j.soft;
        c->corrected += j.corrected_lay.has_value();
      }
    }
    auto block = [](const Counts& c) {
      return ordered_json{{"judged", c.judged},
                          {"hard", c.hard},
                          {"soft", c.soft},
                          {"corrected", c.corrected},
                          {"hard_rate", rate(c.hard, c.judged)},
                          {"soft_rate", rate(c.soft, c.judged)}};
    };
    ordered_json sources = ordered_json::object();
    for (const auto& [name, c] : per_source) sources[name] = block(c);
    out["sources"] = sources;
    out["overall"] = block(all);
  } else {
    std::set<std::string> systems;
    if (!s.items.empty()) systems = {s.items.front().left_system, s.items.front().right_system};
    out["preference"] = preference_stats(judgments_, s.group, {s.id}, systems);
  }
  return out;
}

ordered_json ReviewService::group_stats(const std::string& group) const {
  std::lock_guard lock(mutex_);
  std::set<std::string> ids, systems;
  for (const auto& [id, s] : sessions_) {
    if (s.mode != ReviewMode::preference || s.group != group) continue;
    ids.insert(id);
    for (const auto& it : s.items) systems.insert({it.left_system, it.right_system});
  }
  if (ids.empty()) throw NotFoundError("no preference sessions in group '" + group + "'");
  auto out = preference_stats(judgments_, group, ids, systems);
  out["sessions"] = ids;
  return out;
}

ReviewSession ReviewService::session(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return find(session_id);
}

std::vector<ReviewJudgment> ReviewService::judgments() const {
  std::lock_guard lock(mutex_);
  return judgments_;
}

Dataset ReviewService::export_corrections() const {
  std::lock_guard lock(mutex_);
  Dataset out;
  out.name = "corrections";
  std::set<std::string> seen;
  for (const auto& j : judgments_) {
    if (!j.corrected_lay) continue;
    const auto& s = sessions_.at(j.session_id);
    const auto& item = *std::find_if(s.items.begin(), s.items.end(),
                                     [&](const ReviewItem& x) { return x.item_id == j.item_id; });
    DataPoint p = item.point;
    p.lay_definition = *j.corrected_lay;
    p.extra["corrected_in"] = j.session_id;
    p.extra["source"] = item.source;
    p.extra["point_id"] = p.id;
    // Ids are qualified by source; a later correction replaces an earlier one.
    p.id = item.item_id;
    if (!seen.insert(p.id).second)
      std::erase_if(out.points, [&](const DataPoint& q) { return q.id == p.id; });
    out.points.push_back(std::move(p));
  }
  return out;
}

ordered_json to_json(const ReviewSession& s) {
  ordered_json out{{"session_id", s.id},     {"mode", to_string(s.mode)},  {"evaluator_id", s.evaluator_id},
                   {"seed", s.seed},         {"created_at", s.created_at}, {"total", s.items.size()},
                   {"judged", s.cursor},     {"done", s.done()}};
  if (s.mode == ReviewMode::preference) out["group"] = s.group;
  ordered_json ids = ordered_json::array();
  for (const auto& it : s.items) ids.push_back(it.item_id);
  out["item_ids"] = ids;
  return out;
}

}  // namespace laydef
