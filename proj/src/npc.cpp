#include "dejaboom/npc.hpp"

#include <algorithm>
#include <stdexcept>

#include "dejaboom/provider.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

namespace {

bool activation_met(const NpcSpec& npc, const WorldState& state, const WorldSpec& spec) {
  return !npc.activation || has_flag(state, spec, *npc.activation);
}

}  // namespace

NpcRuntime& runtime_for(WorldState& state, const WorldSpec& spec, std::string_view npc_id) {
  auto idx = spec.npc_index(npc_id);
  if (!idx || *idx >= state.npcs.size()) throw std::out_of_range("unknown npc " + std::string(npc_id));
  return state.npcs[*idx];
}

const NpcRuntime& runtime_for(const WorldState& state, const WorldSpec& spec, std::string_view npc_id) {
  auto idx = spec.npc_index(npc_id);
  if (!idx || *idx >= state.npcs.size()) throw std::out_of_range("unknown npc " + std::string(npc_id));
  return state.npcs[*idx];
}

std::optional<std::string> npc_present(std::string_view location_id, const WorldState& state,
                                       const WorldSpec& spec) {
  for (const auto& npc : spec.npcs) {
    if (npc.location == location_id && activation_met(npc, state, spec)) return npc.id;
  }
  return std::nullopt;
}

bool keywords_match(const std::vector<std::vector<std::string>>& groups, std::string_view utterance) {
  if (groups.empty()) return false;
  const std::string hay = text::normalized(utterance);
  if (hay.empty()) return false;
  return std::all_of(groups.begin(), groups.end(), [&](const auto& group) {
    return std::any_of(group.begin(), group.end(), [&](const auto& kw) { return text::contains_phrase(hay, kw); });
  });
}

bool evaluate_condition(const Condition& cond, std::string_view utterance, const WorldState& state,
                        const WorldSpec& spec, Provider& judge) {
  switch (cond.kind) {
    case ConditionKind::Always:
      return true;
    case ConditionKind::FlagSet:
      return has_flag(state, spec, cond.flag);
    case ConditionKind::UtteranceMatches:
      if (text::trim(utterance).empty()) return false;
      return judge.judge(cond, utterance);
  }
  return false;
}

NpcAdvance advance_npc(const NpcRuntime& npc, std::string_view utterance, const WorldState& state,
                       const WorldSpec& spec, Provider& judge) {
  NpcAdvance result{npc, {}, false, 0};
  const NpcSpec* def = spec.find_npc(npc.npc_id);
  if (!def || npc.current_goal_index >= def->goals.size()) return result;
  const NpcGoal& goal = def->goals[npc.current_goal_index];
  if (!evaluate_condition(goal.condition, utterance, state, spec, judge)) return result;
  result.completed_goal = npc.current_goal_index;
  result.runtime.current_goal_index += 1;
  result.effects = goal.on_satisfied;
  result.advanced = true;
  return result;
}

void apply_effects(WorldState& state, const NpcEffects& effects, const WorldSpec& spec) {
  for (const auto& flag : effects.flags) set_flag_in_place(state, flag, spec);
}

std::optional<NpcContext> build_npc_context(std::string_view npc_id, const WorldState& state,
                                            const WorldSpec& spec) {
  const NpcSpec* def = spec.find_npc(npc_id);
  if (!def) return std::nullopt;
  if (!activation_met(*def, state, spec) || !location_visible(state, spec, def->location)) return std::nullopt;
  const NpcRuntime& rt = runtime_for(state, spec, npc_id);

  NpcContext ctx;
  ctx.npc_id = def->id;
  ctx.name = def->name;
  ctx.persona = def->persona;
  ctx.backstory = def->backstory;
  ctx.goal_index = rt.current_goal_index;
  ctx.goal_count = def->goals.size();
  if (rt.current_goal_index < def->goals.size()) {
    const NpcGoal& goal = def->goals[rt.current_goal_index];
    ctx.goal_prompt = goal.goal_prompt;
    ctx.unmet_condition = goal.condition.description;
  } else {
    ctx.goal_prompt = "You have shared everything you know. Stay in character and chat.";
  }
  for (std::size_t i = 0; i < rt.current_goal_index && i < def->goals.size(); ++i) {
    if (def->goals[i].on_satisfied.clue) ctx.clues.push_back(*def->goals[i].on_satisfied.clue);
  }
  ctx.conversation = rt.conversation;
  return ctx;
}

}  // namespace dejaboom
