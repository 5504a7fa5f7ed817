#include "dejaboom/world.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"

namespace dejaboom {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// StateLabel

StateLabel StateLabel::parse(std::string_view text) {
  std::vector<bool> bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') throw std::invalid_argument("state label must be a bitstring");
    bits.push_back(c == '1');
  }
  return StateLabel(std::move(bits));
}

std::size_t StateLabel::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

bool StateLabel::dominates(const StateLabel& other) const {
  if (other.size() != size()) return false;
  for (std::size_t i = 0; i < bits_.size(); ++i) {
    if (other.bits_[i] && !bits_[i]) return false;
  }
  return true;
}

std::string StateLabel::str() const {
  std::string out;
  out.reserve(bits_.size());
  for (bool b : bits_) out.push_back(b ? '1' : '0');
  return out;
}

// ---------------------------------------------------------------------------
// WorldSpec lookups

const Location* WorldSpec::find_location(std::string_view id) const {
  auto it = std::find_if(locations.begin(), locations.end(), [&](const auto& l) { return l.id == id; });
  return it == locations.end() ? nullptr : &*it;
}

const GameObject* WorldSpec::find_object(std::string_view id) const {
  auto it = std::find_if(objects.begin(), objects.end(), [&](const auto& o) { return o.id == id; });
  return it == objects.end() ? nullptr : &*it;
}

const NpcSpec* WorldSpec::find_npc(std::string_view id) const {
  auto it = std::find_if(npcs.begin(), npcs.end(), [&](const auto& n) { return n.id == id; });
  return it == npcs.end() ? nullptr : &*it;
}

std::optional<std::size_t> WorldSpec::flag_index(std::string_view flag) const {
  auto it = std::find(milestones.begin(), milestones.end(), flag);
  if (it == milestones.end()) return std::nullopt;
  return static_cast<std::size_t>(it - milestones.begin());
}

std::optional<std::size_t> WorldSpec::npc_index(std::string_view id) const {
  for (std::size_t i = 0; i < npcs.size(); ++i) {
    if (npcs[i].id == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> WorldState::inventory() const {
  std::vector<std::string> out;
  for (const auto& [object, where] : placements) {
    if (where == kInventory) out.push_back(object);
  }
  return out;
}

bool WorldState::carrying(std::string_view object_id) const {
  auto it = placements.find(std::string(object_id));
  return it != placements.end() && it->second == kInventory;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::size_t line_of(std::string_view doc, std::size_t byte) {
  byte = std::min(byte, doc.size());
  return 1 + static_cast<std::size_t>(std::count(doc.begin(), doc.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw SpecParseError(path, 0, path + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected object");
  auto it = j.find(key);
  if (it == j.end()) field_error(path + "." + key, "missing required field");
  return *it;
}

std::string get_string(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) field_error(path + "." + key, "expected string");
  return v.get<std::string>();
}

std::string opt_string(const json& j, const char* key, const std::string& path, std::string fallback = {}) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_string()) field_error(path + "." + key, "expected string");
  return it->get<std::string>();
}

std::optional<std::string> opt_nullable_string(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) field_error(path + "." + key, "expected string or null");
  return it->get<std::string>();
}

bool opt_bool(const json& j, const char* key, const std::string& path, bool fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) field_error(path + "." + key, "expected boolean");
  return it->get<bool>();
}

std::vector<std::string> string_list(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_array()) field_error(path + "." + key, "expected array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) {
    const json& v = (*it)[i];
    if (!v.is_string()) field_error(path + "." + key + "[" + std::to_string(i) + "]", "expected string");
    out.push_back(v.get<std::string>());
  }
  return out;
}

const json& require_array(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array()) field_error(path + "." + key, "expected array");
  return v;
}

std::string indexed(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

Location parse_location(const json& j, const std::string& path) {
  Location loc;
  loc.id = get_string(j, "id", path);
  loc.name = opt_string(j, "name", path, loc.id);
  loc.description = opt_string(j, "description", path);
  if (auto it = j.find("exits"); it != j.end()) {
    if (!it->is_object()) field_error(path + ".exits", "expected object mapping direction to location id");
    for (const auto& [dir, target] : it->items()) {
      if (!target.is_string()) field_error(path + ".exits." + dir, "expected location id");
      loc.exits.emplace(dir, target.get<std::string>());
    }
  }
  for (auto& d : string_list(j, "one_way", path)) loc.one_way.insert(std::move(d));
  loc.hidden = opt_bool(j, "hidden", path, false);
  loc.reveal_condition = opt_nullable_string(j, "reveal_condition", path);
  return loc;
}

GameObject parse_object(const json& j, const std::string& path) {
  GameObject obj;
  obj.id = get_string(j, "id", path);
  obj.name = opt_string(j, "name", path, obj.id);
  obj.aliases = string_list(j, "aliases", path);
  obj.description = opt_string(j, "description", path);
  obj.location = get_string(j, "location", path);
  obj.portable = opt_bool(j, "portable", path, false);
  obj.readable_text = opt_nullable_string(j, "readable_text", path);
  obj.grants_flags = string_list(j, "grants_flags", path);
  return obj;
}

Condition parse_condition(const json& j, const std::string& path) {
  Condition c;
  std::string kind = get_string(j, "kind", path);
  if (kind == "flag_set") {
    c.kind = ConditionKind::FlagSet;
    c.flag = get_string(j, "flag", path);
  } else if (kind == "utterance_matches") {
    c.kind = ConditionKind::UtteranceMatches;
    const json& kw = require_array(j, "keywords", path);
    for (std::size_t i = 0; i < kw.size(); ++i) {
      if (!kw[i].is_array()) field_error(indexed(path + ".keywords", i), "expected array of keywords");
      std::vector<std::string> group;
      for (const auto& k : kw[i]) {
        if (!k.is_string()) field_error(indexed(path + ".keywords", i), "expected string keyword");
        group.push_back(k.get<std::string>());
      }
      c.keywords.push_back(std::move(group));
    }
    c.judge_instruction = opt_string(j, "judge_instruction", path);
  } else if (kind == "always") {
    c.kind = ConditionKind::Always;
  } else {
    field_error(path + ".kind", "unknown condition kind '" + kind + "'");
  }
  c.description = opt_string(j, "description", path);
  return c;
}

NpcSpec parse_npc(const json& j, const std::string& path) {
  NpcSpec npc;
  npc.id = get_string(j, "id", path);
  npc.name = opt_string(j, "name", path, npc.id);
  npc.aliases = string_list(j, "aliases", path);
  npc.location = get_string(j, "location", path);
  npc.appearance = opt_string(j, "appearance", path);
  npc.persona = opt_string(j, "persona", path);
  npc.backstory = opt_string(j, "backstory", path);
  npc.activation = opt_nullable_string(j, "activation", path);
  const json& goals = require_array(j, "goals", path);
  for (std::size_t i = 0; i < goals.size(); ++i) {
    std::string gp = indexed(path + ".goals", i);
    const json& g = goals[i];
    NpcGoal goal;
    goal.goal_prompt = get_string(g, "goal_prompt", gp);
    goal.condition = parse_condition(require(g, "condition", gp), gp + ".condition");
    if (auto it = g.find("on_satisfied"); it != g.end()) {
      goal.on_satisfied.flags = string_list(*it, "flags", gp + ".on_satisfied");
      goal.on_satisfied.clue = opt_nullable_string(*it, "clue", gp + ".on_satisfied");
    }
    goal.unmet_response = opt_string(g, "unmet_response", gp);
    goal.met_response = opt_string(g, "met_response", gp);
    npc.goals.push_back(std::move(goal));
  }
  npc.greeting = opt_string(j, "greeting", path);
  npc.exhausted_response = opt_string(j, "exhausted_response", path);
  if (auto it = j.find("topics"); it != j.end()) {
    if (!it->is_array()) field_error(path + ".topics", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      std::string tp = indexed(path + ".topics", i);
      NpcTopic topic;
      topic.keywords = string_list((*it)[i], "keywords", tp);
      topic.response = get_string((*it)[i], "response", tp);
      npc.topics.push_back(std::move(topic));
    }
  }
  return npc;
}

WorldSpec parse_spec(const json& root) {
  const std::string path = "$";
  if (!root.is_object()) field_error(path, "world spec must be a JSON object");
  WorldSpec spec;
  spec.name = opt_string(root, "name", path);

  const json& locations = require_array(root, "locations", path);
  for (std::size_t i = 0; i < locations.size(); ++i)
    spec.locations.push_back(parse_location(locations[i], indexed("$.locations", i)));

  if (auto it = root.find("objects"); it != root.end()) {
    if (!it->is_array()) field_error("$.objects", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i)
      spec.objects.push_back(parse_object((*it)[i], indexed("$.objects", i)));
  }
  if (auto it = root.find("npcs"); it != root.end()) {
    if (!it->is_array()) field_error("$.npcs", "expected array");
    for (std::size_t i = 0; i < it->size(); ++i) spec.npcs.push_back(parse_npc((*it)[i], indexed("$.npcs", i)));
  }

  const json& bomb = require(root, "bomb", path);
  if (bomb.is_array()) {
    throw SpecValidationError("exactly_one_bomb", "world must define exactly one bomb, found " +
                                                      std::to_string(bomb.size()));
  }
  spec.bomb.location = get_string(bomb, "location", "$.bomb");
  const json& limit = require(bomb, "step_limit", "$.bomb");
  if (!limit.is_number_integer()) field_error("$.bomb.step_limit", "expected integer");
  spec.bomb.step_limit = limit.get<int>();
  spec.bomb.defuse_requirement = string_list(bomb, "defuse_requirement", "$.bomb");
  if (auto it = bomb.find("kit"); it != bomb.end() && !it->is_null()) {
    spec.bomb.kit_ingredients = string_list(*it, "ingredients", "$.bomb.kit");
    spec.bomb.kit_requires = string_list(*it, "requires", "$.bomb.kit");
    spec.bomb.kit_flag = get_string(*it, "grants", "$.bomb.kit");
  }
  spec.bomb.explosion_text = opt_string(bomb, "explosion_text", "$.bomb");
  spec.bomb.defused_text = opt_string(bomb, "defused_text", "$.bomb");

  require_array(root, "milestones", path);
  spec.milestones = string_list(root, "milestones", path);
  spec.start_location = get_string(root, "start_location", path);
  spec.intro_text = opt_string(root, "intro_text", path);
  return spec;
}

template <typename T, typename Key>
void require_unique(const std::vector<T>& items, Key key, const char* invariant, const char* what) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    const std::string& k = key(item);
    if (!seen.insert(k).second) {
      throw SpecValidationError(invariant, std::string("duplicate ") + what + " id '" + k + "'");
    }
  }
}

}  // namespace

void validate_world_spec(const WorldSpec& spec) {
  require_unique(spec.locations, [](const Location& l) -> const std::string& { return l.id; },
                 "unique_location_ids", "location");
  require_unique(spec.objects, [](const GameObject& o) -> const std::string& { return o.id; },
                 "unique_object_ids", "object");
  require_unique(spec.npcs, [](const NpcSpec& n) -> const std::string& { return n.id; }, "unique_npc_ids",
                 "npc");
  require_unique(spec.milestones, [](const std::string& m) -> const std::string& { return m; },
                 "unique_milestone_ids", "milestone");

  auto known_flag = [&](const std::string& flag, const std::string& where) {
    if (!spec.flag_index(flag)) {
      throw SpecValidationError("known_flag", where + " references unknown milestone '" + flag + "'");
    }
  };

  if (spec.locations.empty()) throw SpecValidationError("start_location_exists", "world has no locations");
  if (!spec.find_location(spec.start_location)) {
    throw SpecValidationError("start_location_exists",
                              "start_location '" + spec.start_location + "' does not exist");
  }

  for (const auto& loc : spec.locations) {
    for (const auto& [dir, target] : loc.exits) {
      const Location* dest = spec.find_location(target);
      if (!dest) {
        throw SpecValidationError("exit_target_exists", "exit '" + dir + "' of '" + loc.id +
                                                            "' references unknown location '" + target + "'");
      }
      if (loc.one_way.contains(dir)) continue;
      bool back = std::any_of(dest->exits.begin(), dest->exits.end(),
                              [&](const auto& e) { return e.second == loc.id; });
      if (!back) {
        throw SpecValidationError("symmetric_exits", "exit '" + dir + "' from '" + loc.id + "' to '" + target +
                                                         "' has no return exit and is not marked one-way");
      }
    }
    for (const auto& dir : loc.one_way) {
      if (!loc.exits.contains(dir)) {
        throw SpecValidationError("exit_target_exists",
                                  "one-way direction '" + dir + "' of '" + loc.id + "' is not an exit");
      }
    }
    if (loc.hidden && !loc.reveal_condition) {
      throw SpecValidationError("hidden_has_reveal_condition",
                                "hidden location '" + loc.id + "' has no reveal_condition");
    }
    if (loc.reveal_condition) known_flag(*loc.reveal_condition, "location '" + loc.id + "'");
  }

  for (const auto& obj : spec.objects) {
    if (obj.location == kInventory) {
      if (!obj.portable) {
        throw SpecValidationError("non_portable_not_in_inventory",
                                  "non-portable object '" + obj.id + "' starts in the inventory");
      }
    } else if (!spec.find_location(obj.location)) {
      throw SpecValidationError("placement_exists",
                                "object '" + obj.id + "' placed at unknown location '" + obj.location + "'");
    }
    for (const auto& f : obj.grants_flags) known_flag(f, "object '" + obj.id + "'");
  }

  for (const auto& npc : spec.npcs) {
    if (!spec.find_location(npc.location)) {
      throw SpecValidationError("placement_exists",
                                "npc '" + npc.id + "' placed at unknown location '" + npc.location + "'");
    }
    if (npc.activation) known_flag(*npc.activation, "npc '" + npc.id + "' activation");
    if (npc.goals.empty()) {
      throw SpecValidationError("npc_goals_non_empty", "npc '" + npc.id + "' has no goals");
    }
    for (std::size_t i = 0; i < npc.goals.size(); ++i) {
      const auto& goal = npc.goals[i];
      const std::string where = "npc '" + npc.id + "' goal " + std::to_string(i);
      for (const auto& f : goal.on_satisfied.flags) known_flag(f, where);
      const Condition& c = goal.condition;
      if (c.kind == ConditionKind::FlagSet) known_flag(c.flag, where);
      if (c.kind == ConditionKind::UtteranceMatches) {
        bool keywords_ok = !c.keywords.empty() &&
                           std::none_of(c.keywords.begin(), c.keywords.end(), [](const auto& g) { return g.empty(); });
        if (!keywords_ok || c.judge_instruction.empty()) {
          throw SpecValidationError("dual_evaluator_condition",
                                    where + " utterance condition needs keywords and a judge instruction");
        }
      }
    }
  }

  if (spec.bomb.step_limit < 1) {
    throw SpecValidationError("step_limit_positive", "bomb step_limit must be at least 1");
  }
  if (!spec.find_location(spec.bomb.location)) {
    throw SpecValidationError("bomb_location_exists",
                              "bomb placed at unknown location '" + spec.bomb.location + "'");
  }
  for (const auto& f : spec.bomb.defuse_requirement) known_flag(f, "bomb defuse_requirement");
  for (const auto& f : spec.bomb.kit_requires) known_flag(f, "bomb kit requires");
  if (spec.bomb.kit_flag) known_flag(*spec.bomb.kit_flag, "bomb kit grants");
  for (const auto& item : spec.bomb.kit_ingredients) {
    const GameObject* obj = spec.find_object(item);
    if (!obj || !obj->portable) {
      throw SpecValidationError("kit_ingredient_portable",
                                "kit ingredient '" + item + "' is not a portable object");
    }
  }
}

WorldSpec load_world_spec(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SpecParseError("$", line_of(document, e.byte == 0 ? 0 : e.byte - 1),
                         "line " + std::to_string(line_of(document, e.byte == 0 ? 0 : e.byte - 1)) + ": " +
                             e.what());
  }
  WorldSpec spec = parse_spec(root);
  validate_world_spec(spec);
  return spec;
}

WorldSpec load_world_spec_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("world spec '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_world_spec(buf.str());
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ordered_json nullable(const std::optional<std::string>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json condition_json(const Condition& c) {
  ordered_json j;
  switch (c.kind) {
    case ConditionKind::FlagSet:
      j["kind"] = "flag_set";
      j["flag"] = c.flag;
      break;
    case ConditionKind::UtteranceMatches:
      j["kind"] = "utterance_matches";
      j["keywords"] = c.keywords;
      j["judge_instruction"] = c.judge_instruction;
      break;
    case ConditionKind::Always:
      j["kind"] = "always";
      break;
  }
  j["description"] = c.description;
  return j;
}

}  // namespace

std::string serialize_world_spec(const WorldSpec& spec) {
  ordered_json root;
  root["name"] = spec.name;
  root["milestones"] = spec.milestones;
  root["start_location"] = spec.start_location;
  root["intro_text"] = spec.intro_text;

  ordered_json locations = ordered_json::array();
  for (const auto& l : spec.locations) {
    ordered_json j;
    j["id"] = l.id;
    j["name"] = l.name;
    j["description"] = l.description;
    ordered_json exits = ordered_json::object();
    for (const auto& [dir, target] : l.exits) exits[dir] = target;
    j["exits"] = exits;
    j["one_way"] = std::vector<std::string>(l.one_way.begin(), l.one_way.end());
    j["hidden"] = l.hidden;
    j["reveal_condition"] = nullable(l.reveal_condition);
    locations.push_back(std::move(j));
  }
  root["locations"] = std::move(locations);

  ordered_json objects = ordered_json::array();
  for (const auto& o : spec.objects) {
    ordered_json j;
    j["id"] = o.id;
    j["name"] = o.name;
    j["aliases"] = o.aliases;
    j["description"] = o.description;
    j["location"] = o.location;
    j["portable"] = o.portable;
    j["readable_text"] = nullable(o.readable_text);
    j["grants_flags"] = o.grants_flags;
    objects.push_back(std::move(j));
  }
  root["objects"] = std::move(objects);

  ordered_json npcs = ordered_json::array();
  for (const auto& n : spec.npcs) {
    ordered_json j;
    j["id"] = n.id;
    j["name"] = n.name;
    j["aliases"] = n.aliases;
    j["location"] = n.location;
    j["appearance"] = n.appearance;
    j["persona"] = n.persona;
    j["backstory"] = n.backstory;
    j["activation"] = nullable(n.activation);
    ordered_json goals = ordered_json::array();
    for (const auto& g : n.goals) {
      ordered_json gj;
      gj["goal_prompt"] = g.goal_prompt;
      gj["condition"] = condition_json(g.condition);
      gj["on_satisfied"] = ordered_json{{"flags", g.on_satisfied.flags}, {"clue", nullable(g.on_satisfied.clue)}};
      gj["unmet_response"] = g.unmet_response;
      gj["met_response"] = g.met_response;
      goals.push_back(std::move(gj));
    }
    j["goals"] = std::move(goals);
    j["greeting"] = n.greeting;
    j["exhausted_response"] = n.exhausted_response;
    ordered_json topics = ordered_json::array();
    for (const auto& t : n.topics) topics.push_back(ordered_json{{"keywords", t.keywords}, {"response", t.response}});
    j["topics"] = std::move(topics);
    npcs.push_back(std::move(j));
  }
  root["npcs"] = std::move(npcs);

  ordered_json bomb;
  bomb["location"] = spec.bomb.location;
  bomb["step_limit"] = spec.bomb.step_limit;
  bomb["defuse_requirement"] = spec.bomb.defuse_requirement;
  if (spec.bomb.kit_flag) {
    bomb["kit"] = ordered_json{{"ingredients", spec.bomb.kit_ingredients},
                               {"requires", spec.bomb.kit_requires},
                               {"grants", *spec.bomb.kit_flag}};
  }
  bomb["explosion_text"] = spec.bomb.explosion_text;
  bomb["defused_text"] = spec.bomb.defused_text;
  root["bomb"] = std::move(bomb);
  return root.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Runtime state

WorldState fresh_state(const WorldSpec& spec) {
  WorldState state;
  state.current_location = spec.start_location;
  for (const auto& obj : spec.objects) state.placements.emplace(obj.id, obj.location);
  state.flags.assign(spec.milestones.size(), false);
  for (const auto& npc : spec.npcs) {
    NpcRuntime rt;
    rt.npc_id = npc.id;
    rt.activated = !npc.activation.has_value();
    state.npcs.push_back(std::move(rt));
  }
  state.step_in_day = 0;
  state.day = 1;
  return state;
}

WorldState reset_world(const WorldState& state, const WorldSpec& spec) {
  WorldState next = fresh_state(spec);
  next.day = state.day + 1;
  return next;
}

StateLabel state_label(const WorldState& state, const WorldSpec& spec) {
  std::vector<bool> bits(spec.milestones.size(), false);
  for (std::size_t i = 0; i < bits.size() && i < state.flags.size(); ++i) bits[i] = state.flags[i];
  return StateLabel(std::move(bits));
}

bool has_flag(const WorldState& state, const WorldSpec& spec, std::string_view flag) {
  auto idx = spec.flag_index(flag);
  if (!idx) throw UnknownFlagError(std::string(flag));
  return *idx < state.flags.size() && state.flags[*idx];
}

void set_flag_in_place(WorldState& state, std::string_view flag, const WorldSpec& spec) {
  auto idx = spec.flag_index(flag);
  if (!idx) throw UnknownFlagError(std::string(flag));
  if (state.flags.size() < spec.milestones.size()) state.flags.resize(spec.milestones.size(), false);
  state.flags[*idx] = true;
  for (std::size_t i = 0; i < spec.npcs.size() && i < state.npcs.size(); ++i) {
    if (spec.npcs[i].activation && *spec.npcs[i].activation == flag) state.npcs[i].activated = true;
  }
}

WorldState set_flag(WorldState state, std::string_view flag, const WorldSpec& spec) {
  set_flag_in_place(state, flag, spec);
  return state;
}

bool location_visible(const WorldState& state, const WorldSpec& spec, std::string_view location_id) {
  const Location* loc = spec.find_location(location_id);
  if (!loc) return false;
  if (!loc->hidden) return true;
  return loc->reveal_condition && has_flag(state, spec, *loc->reveal_condition);
}

std::vector<std::pair<std::string, std::string>> visible_exits(const WorldState& state, const WorldSpec& spec,
                                                               std::string_view location_id) {
  std::vector<std::pair<std::string, std::string>> out;
  const Location* loc = spec.find_location(location_id);
  if (!loc) return out;
  for (const auto& [dir, target] : loc->exits) {
    if (location_visible(state, spec, target)) out.emplace_back(dir, target);
  }
  return out;
}

}  // namespace dejaboom
