#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace dejaboom {

// One line of dialogue or narration kept in a memory window.
struct Turn {
  std::string speaker;
  std::string text;
  int step = 0;
  int day = 1;

  bool operator==(const Turn&) const = default;
};

enum class ConditionKind { FlagSet, UtteranceMatches, Always };

// A goal gate. Utterance conditions carry two evaluators: keyword sets in
// conjunctive normal form (every inner list needs one hit) for offline
// play, and a judge instruction for a model-backed judge.
struct Condition {
  ConditionKind kind = ConditionKind::Always;
  std::string flag;
  std::vector<std::vector<std::string>> keywords;
  std::string judge_instruction;
  // What the NPC is told about the gate; must not give the answer away.
  std::string description;

  bool operator==(const Condition&) const = default;
};

struct NpcEffects {
  std::vector<std::string> flags;
  std::optional<std::string> clue;

  bool empty() const { return flags.empty() && !clue; }
  bool operator==(const NpcEffects&) const = default;
};

struct NpcGoal {
  std::string goal_prompt;
  Condition condition;
  NpcEffects on_satisfied;
  // Rule-mode lines for this goal: condition still unmet / just satisfied.
  std::string unmet_response;
  std::string met_response;

  bool operator==(const NpcGoal&) const = default;
};

struct NpcTopic {
  std::vector<std::string> keywords;
  std::string response;

  bool operator==(const NpcTopic&) const = default;
};

struct NpcSpec {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::string location;
  std::string appearance;
  std::string persona;
  std::string backstory;
  std::optional<std::string> activation;
  std::vector<NpcGoal> goals;
  std::string greeting;
  std::string exhausted_response;
  std::vector<NpcTopic> topics;

  bool operator==(const NpcSpec&) const = default;
};

struct NpcRuntime {
  std::string npc_id;
  std::size_t current_goal_index = 0;
  bool activated = false;
  std::vector<Turn> conversation;

  bool operator==(const NpcRuntime&) const = default;
};

}  // namespace dejaboom
