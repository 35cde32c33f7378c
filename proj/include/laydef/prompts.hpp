#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "laydef/corpus.hpp"
#include "laydef/providers.hpp"

namespace laydef {

enum class TaskKind { J2L, J_C2L, J_G2L, J_C_G2L, one_shot, readability };

std::string_view to_string(TaskKind k);
// Accepts the enum spelling ("J_C_G2L") and the plus form ("J+C+G2L").
std::optional<TaskKind> parse_task_kind(std::string_view s);

struct TaskSetting {
  TaskKind kind = TaskKind::J2L;
  std::optional<int> target_fkgl;  // 1..12, readability only

  static TaskSetting readability(int target) { return {TaskKind::readability, target}; }
};

void validate(const TaskSetting& s);
std::string label(const TaskSetting& s);

struct OneShotExemplar {
  std::string term;
  std::string definition;
};

// Taken from the bundled fixture corpus.
OneShotExemplar default_one_shot_exemplar();

struct PromptOptions {
  OneShotExemplar exemplar = default_one_shot_exemplar();
};

bool needs_context(TaskKind k);
bool needs_general_definition(TaskKind k);

/// Renders the prompt for one point. Throws PreconditionError naming the
/// missing field when the setting needs context or a general definition the
/// point does not carry.
ChatPrompt build_prompt(const TaskSetting& setting, const DataPoint& dp, const PromptOptions& options = {});

// Lower-level renderers, exposed so slot text can be arbitrary.
std::string render_generation_prompt(TaskKind kind, std::string_view jargon, std::string_view context,
                                     std::string_view general_definition);
std::string render_one_shot_prompt(const OneShotExemplar& exemplar, std::string_view jargon);
std::string render_readability_prompt(std::string_view target, std::string_view jargon,
                                      std::string_view general_definition);

// "['<definition>']", the list-literal form dictionary definitions are shown in.
std::string dictionary_block(std::string_view general_definition);

}  // namespace laydef
