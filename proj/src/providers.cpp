#include "laydef/providers.hpp"

#include <regex>
#include <set>

#include "laydef/error.hpp"
#include "laydef/text.hpp"

namespace laydef {

const std::string& ChatPrompt::final_user_content() const {
  if (turns.empty()) throw ValidationError("chat prompt has no turns");
  return turns.back().content;
}

void validate(const ChatPrompt& p) {
  if (p.turns.empty()) throw ValidationError("chat prompt has no turns");
  if (p.turns.back().role != Role::user) throw ValidationError("chat prompt must end with a user turn");
}

void validate(const GenerationConfig& cfg) {
  if (cfg.beam_size < 1) throw ValidationError("beam_size must be positive");
  if (cfg.no_repeat_ngram < 0) throw ValidationError("no_repeat_ngram must be non-negative");
  if (cfg.min_tokens < 1 || cfg.max_tokens < 1) throw ValidationError("min/max tokens must be positive");
  if (cfg.min_tokens > cfg.max_tokens) throw ValidationError("min_tokens exceeds max_tokens");
  if (cfg.temperature < 0.0) throw ValidationError("temperature must be non-negative");
}

nlohmann::ordered_json to_json(const ChatPrompt& p) {
  nlohmann::ordered_json j;
  j["system"] = p.system ? nlohmann::ordered_json(*p.system) : nlohmann::ordered_json(nullptr);
  j["turns"] = nlohmann::ordered_json::array();
  for (const auto& t : p.turns)
    j["turns"].push_back({{"role", t.role == Role::user ? "user" : "assistant"}, {"content", t.content}});
  return j;
}

nlohmann::ordered_json to_json(const GenerationConfig& cfg) {
  return {{"beam_size", cfg.beam_size},
          {"no_repeat_ngram", cfg.no_repeat_ngram},
          {"min_tokens", cfg.min_tokens},
          {"max_tokens", cfg.max_tokens},
          {"temperature", cfg.temperature}};
}

GenerationConfig generation_config_from_json(const nlohmann::json& j) {
  GenerationConfig cfg;
  cfg.beam_size = j.value("beam_size", cfg.beam_size);
  cfg.no_repeat_ngram = j.value("no_repeat_ngram", cfg.no_repeat_ngram);
  cfg.min_tokens = j.value("min_tokens", cfg.min_tokens);
  cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
  cfg.temperature = j.value("temperature", cfg.temperature);
  return cfg;
}

std::string generate(const ChatPrompt& prompt, const GenerationConfig& cfg, GenerationBackend& backend) {
  validate(prompt);
  validate(cfg);
  std::string out(trim(backend.complete(prompt, cfg)));
  if (out.empty()) throw EmptyOutputError("backend " + backend.identity() + " returned an empty completion");
  return out;
}

std::optional<std::string> last_labelled_line(std::string_view text, std::string_view label) {
  std::optional<std::string> found;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (line.substr(0, label.size()) == label) found = std::string(trim(line.substr(label.size())));
    pos = nl + 1;
  }
  return found;
}

std::string EchoBackend::complete(const ChatPrompt& prompt, const GenerationConfig&) {
  return prompt.final_user_content();
}

namespace {

std::string first_tokens(std::string_view text, std::size_t n) {
  auto tokens = tokenize(text);
  if (tokens.size() > n) tokens.resize(n);
  return join(tokens, " ");
}

}  // namespace

std::string TemplateBackend::complete(const ChatPrompt& prompt, const GenerationConfig&) {
  const std::string& content = prompt.final_user_content();

  static const std::string kTermPrefix = "term : ";
  if (content.rfind(kTermPrefix, 0) == 0) {
    std::string term(trim(std::string_view(content).substr(kTermPrefix.size())));
    std::string body = options_.augment_template;
    for (auto at = body.find("{term}"); at != std::string::npos; at = body.find("{term}", at + term.size()))
      body.replace(at, 6, term);
    return "general definition : " + body;
  }

  static const std::regex kTarget("around target readability (\\d+)");
  std::smatch m;
  if (std::regex_search(content, m, kTarget)) {
    const int target = std::stoi(m[1].str());
    auto it = options_.readability_sentences.find(target);
    if (it != options_.readability_sentences.end()) return it->second;
    if (auto gen = last_labelled_line(content, "general definition:"))
      return first_tokens(*gen, options_.generation_tokens);
  }

  if (auto dict = last_labelled_line(content, "dictionary definition:"))
    return first_tokens(*dict, options_.generation_tokens);
  if (auto term = last_labelled_line(content, "jargon term:")) return first_tokens(*term, options_.generation_tokens);
  return first_tokens(content, options_.generation_tokens);
}

bool rule_examiner_says_good(std::string_view term, std::string_view general_definition) {
  const auto def_tokens = tokenize(general_definition);
  if (def_tokens.empty()) return false;
  const std::set<std::string> def_set(def_tokens.begin(), def_tokens.end());
  const auto term_tokens = tokenize(term);
  const std::set<std::string> term_set(term_tokens.begin(), term_tokens.end());
  std::size_t shared = 0;
  for (const auto& t : def_set)
    if (term_set.count(t)) ++shared;
  // shared / |def| >= 1/2, kept in integers.
  return 2 * shared < def_set.size();
}

std::string RuleExaminerBackend::complete(const ChatPrompt& prompt, const GenerationConfig&) {
  const std::string& content = prompt.final_user_content();
  auto term = last_labelled_line(content, "term :");
  auto general = last_labelled_line(content, "general definition :");
  if (!term) return "I cannot find a term to examine.";
  return rule_examiner_says_good(*term, general.value_or("")) ? "answer : yes" : "answer : no";
}

}  // namespace laydef
