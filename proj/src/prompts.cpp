#include "laydef/prompts.hpp"

#include "laydef/error.hpp"
#include "laydef/text.hpp"

namespace laydef {
namespace {

constexpr std::string_view kLead =
    "In this task, we ask for your expertise in generating the corresponding lay definition from the medical jargon.";
constexpr std::string_view kTermOnly = " Mainly, we provide the target medical jargon term.";
constexpr std::string_view kTermAndContext =
    " Mainly, we provide the target medical jargon term along with the contextual snippets in which they appear in "
    "the text.";
constexpr std::string_view kDictionary = " In addition, we also provide a definition from the dictionary for reference.";
constexpr std::string_view kAsk = " We need you to generate a lay definition for this jargon term.";

constexpr std::string_view kReadabilityInstruction =
    "Given an input jargon term and general definition, please output a lay definition with a readability score "
    "around target readability ";

std::string instruction(bool context, bool dictionary) {
  std::string s(kLead);
  s += context ? kTermAndContext : kTermOnly;
  if (dictionary) s += kDictionary;
  s += kAsk;
  return s;
}

}  // namespace

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::J2L: return "J2L";
    case TaskKind::J_C2L: return "J_C2L";
    case TaskKind::J_G2L: return "J_G2L";
    case TaskKind::J_C_G2L: return "J_C_G2L";
    case TaskKind::one_shot: return "one_shot";
    case TaskKind::readability: return "readability";
  }
  return "";
}

std::optional<TaskKind> parse_task_kind(std::string_view s) {
  if (s == "J2L") return TaskKind::J2L;
  if (s == "J_C2L" || s == "J+C2L") return TaskKind::J_C2L;
  if (s == "J_G2L" || s == "J+G2L") return TaskKind::J_G2L;
  if (s == "J_C_G2L" || s == "J+C+G2L") return TaskKind::J_C_G2L;
  if (s == "one_shot" || s == "one-shot") return TaskKind::one_shot;
  if (s == "readability") return TaskKind::readability;
  return std::nullopt;
}

void validate(const TaskSetting& s) {
  if (s.kind == TaskKind::readability) {
    if (!s.target_fkgl) throw ValidationError("readability setting needs a target grade");
    if (*s.target_fkgl < 1 || *s.target_fkgl > 12) throw ValidationError("readability target must be in 1..12");
  } else if (s.target_fkgl) {
    throw ValidationError("only the readability setting takes a target grade");
  }
}

std::string label(const TaskSetting& s) {
  std::string out(to_string(s.kind));
  if (s.target_fkgl) out += "@" + std::to_string(*s.target_fkgl);
  return out;
}

OneShotExemplar default_one_shot_exemplar() {
  return {"nodule", "A growth or lump that may be cancerous or not."};
}

bool needs_context(TaskKind k) { return k == TaskKind::J_C2L || k == TaskKind::J_C_G2L; }

bool needs_general_definition(TaskKind k) {
  return k == TaskKind::J_G2L || k == TaskKind::J_C_G2L || k == TaskKind::readability;
}

std::string dictionary_block(std::string_view general_definition) {
  return "['" + std::string(general_definition) + "']";
}

std::string render_generation_prompt(TaskKind kind, std::string_view jargon, std::string_view context,
                                     std::string_view general_definition) {
  const bool with_context = needs_context(kind);
  const bool with_dictionary = kind == TaskKind::J_G2L || kind == TaskKind::J_C_G2L;
  std::string p = instruction(with_context, with_dictionary);
  p += "\njargon term: ";
  p += jargon;
  if (with_context) {
    p += "\ncontext: ";
    p += context;
  }
  if (with_dictionary) {
    p += "\ndictionary definition: ";
    p += dictionary_block(general_definition);
  }
  p += "\nlay definition:";
  return p;
}

std::string render_one_shot_prompt(const OneShotExemplar& exemplar, std::string_view jargon) {
  std::string p = instruction(false, false);
  p += "\n\nExample:\njargon term: ";
  p += exemplar.term;
  p += "\nlay definition: ";
  p += exemplar.definition;
  p += "\n\njargon term: ";
  p += jargon;
  p += "\nlay definition:";
  return p;
}

std::string render_readability_prompt(std::string_view target, std::string_view jargon,
                                      std::string_view general_definition) {
  std::string p(kReadabilityInstruction);
  p += target;
  p += ".\njargon term: ";
  p += jargon;
  p += "\ngeneral definition: ";
  p += general_definition;
  p += "\nlay definition:";
  return p;
}

ChatPrompt build_prompt(const TaskSetting& setting, const DataPoint& dp, const PromptOptions& options) {
  validate(setting);
  if (needs_context(setting.kind) && !dp.context)
    throw PreconditionError("point '" + dp.id + "': setting " + label(setting) + " needs field 'context'");
  if (needs_general_definition(setting.kind) && !dp.general_definition)
    throw PreconditionError("point '" + dp.id + "': setting " + label(setting) + " needs field 'general_definition'");

  const std::string jargon(trim(dp.jargon));
  std::string content;
  switch (setting.kind) {
    case TaskKind::one_shot:
      content = render_one_shot_prompt(options.exemplar, jargon);
      break;
    case TaskKind::readability:
      content = render_readability_prompt(std::to_string(*setting.target_fkgl), jargon, *dp.general_definition);
      break;
    default:
      content = render_generation_prompt(setting.kind, jargon, dp.context.value_or(""),
                                         dp.general_definition.value_or(""));
      break;
  }
  ChatPrompt prompt;
  prompt.turns.push_back({Role::user, std::move(content)});
  return prompt;
}

}  // namespace laydef
