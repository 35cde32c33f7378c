#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace laydef {

enum class Role { user, assistant };

struct ChatTurn {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatTurn&) const = default;
};

struct ChatPrompt {
  std::optional<std::string> system;
  std::vector<ChatTurn> turns;

  // Content of the last turn; validate() guarantees it is a user turn.
  const std::string& final_user_content() const;
  bool operator==(const ChatPrompt&) const = default;
};

// Throws ValidationError unless turns is non-empty and ends with a user turn.
void validate(const ChatPrompt& p);

// Decoding settings. Chat endpoints only honour temperature and max_tokens;
// the rest is carried as run metadata.
struct GenerationConfig {
  int beam_size = 4;
  int no_repeat_ngram = 2;
  int min_tokens = 10;
  int max_tokens = 100;
  double temperature = 0.0;
};

void validate(const GenerationConfig& cfg);

nlohmann::ordered_json to_json(const ChatPrompt& p);
nlohmann::ordered_json to_json(const GenerationConfig& cfg);
GenerationConfig generation_config_from_json(const nlohmann::json& j);

// A text generator. complete() may be called from several threads at once.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string complete(const ChatPrompt& prompt, const GenerationConfig& cfg) = 0;
  virtual std::string identity() const = 0;
};

/// Validates inputs, calls the backend and trims the result. Throws
/// EmptyOutputError when nothing is left.
std::string generate(const ChatPrompt& prompt, const GenerationConfig& cfg, GenerationBackend& backend);

// Returns the final user turn verbatim.
class EchoBackend final : public GenerationBackend {
 public:
  std::string complete(const ChatPrompt& prompt, const GenerationConfig& cfg) override;
  std::string identity() const override { return "stub:echo"; }
};

// Deterministic rule-based stand-in for a generator:
//  - "term : X" (augmenter)             -> "general definition : " + augment_template with {term} = X
//  - "... target readability N ..."     -> readability_sentences[N] when present
//  - a "dictionary definition:" line    -> first generation_tokens tokens of that definition
//  - anything else                      -> tokens of the "jargon term:" line
class TemplateBackend final : public GenerationBackend {
 public:
  struct Options {
    std::size_t generation_tokens = 8;
    std::string augment_template = "{term}, a clinical term.";
    std::map<int, std::string> readability_sentences;
  };

  TemplateBackend() = default;
  explicit TemplateBackend(Options options) : options_(std::move(options)) {}

  std::string complete(const ChatPrompt& prompt, const GenerationConfig& cfg) override;
  std::string identity() const override { return "stub:template"; }
  const Options& options() const { return options_; }

 private:
  Options options_;
};

// Reference examiner for offline runs: answers "no" when the general
// definition is empty or at least half of its distinct tokens come from the
// term, "yes" otherwise. Not a model of any real LLM.
class RuleExaminerBackend final : public GenerationBackend {
 public:
  std::string complete(const ChatPrompt& prompt, const GenerationConfig& cfg) override;
  std::string identity() const override { return "stub:rule-examiner"; }
};

bool rule_examiner_says_good(std::string_view term, std::string_view general_definition);

// Last "<label>" line value in text, e.g. label "jargon term:" -> "EGD".
std::optional<std::string> last_labelled_line(std::string_view text, std::string_view label);

}  // namespace laydef
