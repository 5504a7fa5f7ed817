#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dejaboom/npc_types.hpp"
#include "dejaboom/world.hpp"

namespace dejaboom {

class Provider;

// Provider-ready view of one NPC at one moment. `clues` holds only what the
// player has already earned; the clue behind the current gate is withheld.
struct NpcContext {
  std::string npc_id;
  std::string name;
  std::string persona;
  std::string backstory;
  std::size_t goal_index = 0;
  std::size_t goal_count = 0;
  std::string goal_prompt;
  std::string unmet_condition;
  std::vector<std::string> clues;
  std::vector<Turn> conversation;
  // Set by the caller for the turn being answered.
  bool arrival = false;
  bool condition_met = false;
  bool action_failed = false;
};

struct NpcAdvance {
  NpcRuntime runtime;
  NpcEffects effects;
  bool advanced = false;
  std::size_t completed_goal = 0;  // valid when advanced
};

// The NPC standing at `location_id`, provided its activation flag is set.
std::optional<std::string> npc_present(std::string_view location_id, const WorldState& state,
                                       const WorldSpec& spec);

// Keyword evaluator for utterance conditions (CNF over keyword groups).
// A keyword ending in '*' matches any word with that prefix.
bool keywords_match(const std::vector<std::vector<std::string>>& groups, std::string_view utterance);

// Throws ProviderError when the judge fails; never reports that as false.
bool evaluate_condition(const Condition& cond, std::string_view utterance, const WorldState& state,
                        const WorldSpec& spec, Provider& judge);

// At most one goal advances per utterance.
NpcAdvance advance_npc(const NpcRuntime& npc, std::string_view utterance, const WorldState& state,
                       const WorldSpec& spec, Provider& judge);

void apply_effects(WorldState& state, const NpcEffects& effects, const WorldSpec& spec);

// Empty when the NPC is inactive or stands in a room the player cannot reach.
std::optional<NpcContext> build_npc_context(std::string_view npc_id, const WorldState& state,
                                            const WorldSpec& spec);

NpcRuntime& runtime_for(WorldState& state, const WorldSpec& spec, std::string_view npc_id);
const NpcRuntime& runtime_for(const WorldState& state, const WorldSpec& spec, std::string_view npc_id);

}  // namespace dejaboom
