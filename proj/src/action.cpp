#include "dejaboom/action.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/npc.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

std::string VerbObjectCommand::canonical() const { return object ? verb + " " + *object : verb; }

namespace {

constexpr std::array<std::pair<FailureCode, std::string_view>, 6> kCodeNames{{
    {FailureCode::UnknownVerb, "UNKNOWN_VERB"},
    {FailureCode::MissingObject, "MISSING_OBJECT"},
    {FailureCode::Precondition, "PRECONDITION"},
    {FailureCode::NotHere, "NOT_HERE"},
    {FailureCode::NotPortable, "NOT_PORTABLE"},
    {FailureCode::Locked, "LOCKED"},
}};

const std::map<std::string, std::string>& default_messages() {
  static const std::map<std::string, std::string> table{
      {"unknown_verb", "You can't {verb} that!"},
      {"no_object", "What do you want to {verb}?"},
      {"not_seen", "You don't see any {object} here."},
      {"not_portable", "You can't take the {object}."},
      {"already_carrying", "You already have the {object}."},
      {"not_carrying", "You aren't carrying the {object}."},
      {"not_readable", "There is nothing written on the {object}."},
      {"cannot_open", "The {object} doesn't open."},
      {"no_way", "You can't go that way."},
      {"not_adjacent", "You can't get to the {object} from here."},
      {"unknown_place", "You don't know the way to {object}."},
      {"already_here", "You are already there."},
      {"not_at_bomb", "There is no bomb here to defuse."},
      {"defuse_unready", "You study the bomb, but you have nothing that could defuse it."},
      {"combine_missing", "You don't have the ingredients for a bomb disposal kit."},
      {"combine_no_recipe", "You have the ingredients, but you don't know how to put them together."},
      {"not_an_object", "The {object} is not an object that can be added to your inventory in this game."},
      {"took", "You picked up the {object}."},
      {"dropped", "You dropped the {object}."},
      {"read", "You read the {object}. {text}"},
      {"opened", "You open the {object}. {text}"},
      {"nothing_special", "You see nothing special about the {object}."},
      {"inventory", "You are carrying: {items}."},
      {"inventory_empty", "You are empty-handed."},
      {"combined", "Following the recipe, you combine the {items} into a bomb disposal kit."},
      {"waited", "Time passes."},
      {"won_banner", "The bomb is defused. The village is safe!"},
      {"time_up", "The days have run out."},
  };
  return table;
}

const std::vector<std::string> kVerbs{"go",   "take",      "drop",    "open",   "read", "examine",
                                      "look", "inventory", "combine", "defuse", "wait"};

}  // namespace

std::string_view to_string(FailureCode code) {
  for (const auto& [c, name] : kCodeNames) {
    if (c == code) return name;
  }
  return "UNKNOWN";
}

std::optional<FailureCode> failure_code_from_string(std::string_view text) {
  for (const auto& [c, name] : kCodeNames) {
    if (name == text) return c;
  }
  return std::nullopt;
}

MessageTable::MessageTable() : table_(default_messages()) {}

MessageTable MessageTable::parse(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("message table: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("message table must be a JSON object");
  MessageTable table;
  for (const auto& [id, value] : j.items()) {
    if (!value.is_string()) throw ConfigError("message table entry '" + id + "' must be a string");
    table.table_[id] = value.get<std::string>();
  }
  return table;
}

MessageTable MessageTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("message table '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string MessageTable::render(const std::string& id, const std::map<std::string, std::string>& fields) const {
  auto it = table_.find(id);
  std::string templ = it == table_.end() ? id : it->second;
  std::vector<std::pair<std::string, std::string>> f(fields.begin(), fields.end());
  return text::fill(templ, f);
}

const std::vector<std::string>& supported_verbs() { return kVerbs; }

bool is_supported_verb(std::string_view verb) {
  return std::find(kVerbs.begin(), kVerbs.end(), verb) != kVerbs.end();
}

// ---------------------------------------------------------------------------

ActionEngine::ActionEngine(const WorldSpec& spec, MessageTable messages)
    : spec_(spec), messages_(std::move(messages)) {}

ActionResult ActionEngine::failure(FailureCode code, const std::string& id,
                                   std::map<std::string, std::string> fields) const {
  ActionResult r;
  r.outcome = Outcome::Failure;
  r.failure_code = code;
  r.message = messages_.render(id, fields);
  return r;
}

std::optional<std::string> ActionEngine::resolve_object(std::string_view token) const {
  const std::string needle = text::normalized(token);
  if (needle.empty()) return std::nullopt;
  for (const auto& obj : spec_.objects) {
    if (text::normalized(obj.id) == needle || text::normalized(obj.name) == needle) return obj.id;
    for (const auto& alias : obj.aliases) {
      if (text::normalized(alias) == needle) return obj.id;
    }
  }
  return std::nullopt;
}

std::optional<std::string> ActionEngine::resolve_destination(std::string_view token, const WorldState& state) const {
  const std::string needle = text::normalized(token);
  if (needle.empty()) return std::nullopt;
  const Location* here = spec_.find_location(state.current_location);
  if (here) {
    for (const auto& [dir, target] : here->exits) {
      if (text::normalized(dir) == needle) return target;
    }
  }
  for (const auto& loc : spec_.locations) {
    if (text::normalized(loc.id) == needle || text::normalized(loc.name) == needle) return loc.id;
  }
  for (const auto& npc : spec_.npcs) {
    if (text::normalized(npc.name) == needle || text::normalized(npc.id) == needle) return npc.location;
    for (const auto& alias : npc.aliases) {
      if (text::normalized(alias) == needle) return npc.location;
    }
  }
  return std::nullopt;
}

bool ActionEngine::object_here(const WorldState& state, const std::string& object_id) const {
  auto it = state.placements.find(object_id);
  return it != state.placements.end() && (it->second == state.current_location || it->second == kInventory);
}

std::string ActionEngine::describe_location(const WorldState& state) const {
  const Location* loc = spec_.find_location(state.current_location);
  if (!loc) return {};
  std::vector<std::string> parts;
  if (!loc->description.empty()) parts.push_back(loc->description);
  if (auto npc = npc_present(loc->id, state, spec_)) {
    const NpcSpec* def = spec_.find_npc(*npc);
    if (def && !def->appearance.empty()) parts.push_back(def->appearance);
  }
  for (const auto& obj : spec_.objects) {
    auto it = state.placements.find(obj.id);
    if (it != state.placements.end() && it->second == loc->id) parts.push_back("There is a " + obj.name + ".");
  }
  std::vector<std::string> exits;
  for (const auto& [dir, target] : visible_exits(state, spec_, loc->id)) {
    const Location* dest = spec_.find_location(target);
    exits.push_back(dir + " to the " + (dest ? dest->name : target));
  }
  if (!exits.empty()) parts.push_back("Exits: " + text::join(exits, ", ") + ".");
  return text::join(parts, " ");
}

std::pair<ActionResult, WorldState> ActionEngine::execute(const VerbObjectCommand& cmd,
                                                          const WorldState& state) const {
  WorldState next = state;
  ActionResult result;
  const std::string& verb = cmd.verb;
  if (!is_supported_verb(verb)) {
    result = failure(FailureCode::UnknownVerb, "unknown_verb", {{"verb", verb}});
  } else if (verb == "go") {
    result = go(cmd, next);
  } else if (verb == "take") {
    result = take(cmd, next);
  } else if (verb == "drop") {
    result = drop(cmd, next);
  } else if (verb == "read") {
    result = read(cmd, next, false);
  } else if (verb == "open") {
    result = read(cmd, next, true);
  } else if (verb == "examine") {
    result = examine(cmd, next);
  } else if (verb == "look") {
    result.message = describe_location(next);
  } else if (verb == "inventory") {
    result = inventory(next);
  } else if (verb == "combine") {
    result = combine_kit(next);
  } else if (verb == "defuse") {
    result = try_defuse(next);
  } else if (verb == "wait") {
    result.message = messages_.render("waited");
  }
  if (!result.ok()) return {std::move(result), state};
  return {std::move(result), std::move(next)};
}

ActionResult ActionEngine::go(const VerbObjectCommand& cmd, WorldState& state) const {
  if (!cmd.object) return failure(FailureCode::MissingObject, "no_object", {{"verb", cmd.verb}});
  const std::string& token = *cmd.object;
  auto target = resolve_destination(token, state);
  if (!target) {
    static const std::vector<std::string> kDirections{"north",     "south",     "east", "west",
                                                      "northeast", "northwest", "southeast",
                                                      "southwest", "up",        "down", "in", "out"};
    const bool is_direction =
        std::find(kDirections.begin(), kDirections.end(), text::normalized(token)) != kDirections.end();
    if (is_direction) return failure(FailureCode::NotHere, "no_way", {});
    return failure(FailureCode::MissingObject, "unknown_place", {{"object", token}});
  }
  if (!location_visible(state, spec_, *target)) {
    // Do not confirm that an unrevealed room exists.
    const Location* here = spec_.find_location(state.current_location);
    bool adjacent = here && std::any_of(here->exits.begin(), here->exits.end(),
                                        [&](const auto& e) { return e.second == *target; });
    if (adjacent) return failure(FailureCode::Locked, "no_way", {});
    return failure(FailureCode::MissingObject, "unknown_place", {{"object", token}});
  }
  if (*target == state.current_location) return failure(FailureCode::Precondition, "already_here", {});
  auto exits = visible_exits(state, spec_, state.current_location);
  bool adjacent = std::any_of(exits.begin(), exits.end(), [&](const auto& e) { return e.second == *target; });
  if (!adjacent) {
    const Location* dest = spec_.find_location(*target);
    return failure(FailureCode::NotHere, "not_adjacent", {{"object", dest ? dest->name : *target}});
  }
  state.current_location = *target;
  ActionResult r;
  r.message = describe_location(state);
  r.state_delta.push_back("location:" + *target);
  return r;
}

ActionResult ActionEngine::take(const VerbObjectCommand& cmd, WorldState& state) const {
  if (!cmd.object) return failure(FailureCode::MissingObject, "no_object", {{"verb", cmd.verb}});
  auto id = resolve_object(*cmd.object);
  if (!id) return failure(FailureCode::MissingObject, "not_seen", {{"object", *cmd.object}});
  const GameObject& obj = *spec_.find_object(*id);
  if (state.carrying(*id)) return failure(FailureCode::Precondition, "already_carrying", {{"object", obj.name}});
  if (state.placements[*id] != state.current_location) {
    return failure(FailureCode::NotHere, "not_seen", {{"object", obj.name}});
  }
  if (!obj.portable) return failure(FailureCode::NotPortable, "not_portable", {{"object", obj.name}});
  state.placements[*id] = std::string(kInventory);
  ActionResult r;
  r.message = messages_.render("took", {{"object", obj.name}});
  r.state_delta.push_back("placement:" + *id + "=inventory");
  if (!obj.readable()) {
    for (const auto& f : obj.grants_flags) {
      if (!has_flag(state, spec_, f)) r.state_delta.push_back("flag:" + f);
      set_flag_in_place(state, f, spec_);
    }
  }
  return r;
}

ActionResult ActionEngine::drop(const VerbObjectCommand& cmd, WorldState& state) const {
  if (!cmd.object) return failure(FailureCode::MissingObject, "no_object", {{"verb", cmd.verb}});
  auto id = resolve_object(*cmd.object);
  if (!id || !state.carrying(*id)) {
    std::string name = id ? spec_.find_object(*id)->name : *cmd.object;
    return failure(FailureCode::MissingObject, "not_carrying", {{"object", name}});
  }
  const GameObject& obj = *spec_.find_object(*id);
  state.placements[*id] = state.current_location;
  ActionResult r;
  r.message = messages_.render("dropped", {{"object", obj.name}});
  r.state_delta.push_back("placement:" + *id + "=" + state.current_location);
  return r;
}

ActionResult ActionEngine::read(const VerbObjectCommand& cmd, WorldState& state, bool via_open) const {
  if (!cmd.object) return failure(FailureCode::MissingObject, "no_object", {{"verb", cmd.verb}});
  auto id = resolve_object(*cmd.object);
  if (!id) return failure(FailureCode::MissingObject, "not_seen", {{"object", *cmd.object}});
  const GameObject& obj = *spec_.find_object(*id);
  if (!object_here(state, *id)) return failure(FailureCode::NotHere, "not_seen", {{"object", obj.name}});
  if (!obj.readable()) {
    return failure(FailureCode::Precondition, via_open ? "cannot_open" : "not_readable", {{"object", obj.name}});
  }
  ActionResult r;
  r.message = messages_.render(via_open ? "opened" : "read", {{"object", obj.name}, {"text", *obj.readable_text}});
  for (const auto& f : obj.grants_flags) {
    if (!has_flag(state, spec_, f)) r.state_delta.push_back("flag:" + f);
    set_flag_in_place(state, f, spec_);
  }
  return r;
}

ActionResult ActionEngine::examine(const VerbObjectCommand& cmd, const WorldState& state) const {
  ActionResult r;
  if (!cmd.object) {
    r.message = describe_location(state);
    return r;
  }
  if (auto id = resolve_object(*cmd.object)) {
    const GameObject& obj = *spec_.find_object(*id);
    if (!object_here(state, *id)) return failure(FailureCode::NotHere, "not_seen", {{"object", obj.name}});
    r.message = obj.description.empty() ? messages_.render("nothing_special", {{"object", obj.name}})
                                        : obj.description;
    return r;
  }
  if (auto npc = npc_present(state.current_location, state, spec_)) {
    const NpcSpec* def = spec_.find_npc(*npc);
    const std::string needle = text::normalized(*cmd.object);
    bool named = text::normalized(def->name) == needle ||
                 std::any_of(def->aliases.begin(), def->aliases.end(),
                             [&](const auto& a) { return text::normalized(a) == needle; });
    if (named) {
      r.message = def->appearance;
      return r;
    }
  }
  return failure(FailureCode::MissingObject, "not_seen", {{"object", *cmd.object}});
}

ActionResult ActionEngine::inventory(const WorldState& state) const {
  ActionResult r;
  std::vector<std::string> names;
  for (const auto& obj : spec_.objects) {
    if (state.carrying(obj.id)) names.push_back("a " + obj.name);
  }
  r.message = names.empty() ? messages_.render("inventory_empty")
                            : messages_.render("inventory", {{"items", text::join(names, ", ")}});
  return r;
}

ActionResult ActionEngine::combine_kit(WorldState& state) const {
  const Bomb& bomb = spec_.bomb;
  if (!bomb.kit_flag || bomb.kit_ingredients.empty()) {
    return failure(FailureCode::MissingObject, "combine_missing", {});
  }
  bool all_carried = std::all_of(bomb.kit_ingredients.begin(), bomb.kit_ingredients.end(),
                                 [&](const auto& id) { return state.carrying(id); });
  if (!all_carried) return failure(FailureCode::MissingObject, "combine_missing", {});
  bool knows_recipe = std::all_of(bomb.kit_requires.begin(), bomb.kit_requires.end(),
                                  [&](const auto& f) { return has_flag(state, spec_, f); });
  if (!knows_recipe) return failure(FailureCode::Precondition, "combine_no_recipe", {});

  ActionResult r;
  std::vector<std::string> names;
  for (const auto& id : bomb.kit_ingredients) {
    state.placements[id] = std::string(kConsumed);
    names.push_back(spec_.find_object(id)->name);
    r.state_delta.push_back("placement:" + id + "=consumed");
  }
  std::string items = names.size() > 1
                          ? text::join({names.begin(), names.end() - 1}, ", ") + " and " + names.back()
                          : names.front();
  if (!has_flag(state, spec_, *bomb.kit_flag)) r.state_delta.push_back("flag:" + *bomb.kit_flag);
  set_flag_in_place(state, *bomb.kit_flag, spec_);
  r.message = messages_.render("combined", {{"items", items}});
  return r;
}

ActionResult ActionEngine::try_defuse(WorldState& state) const {
  const Bomb& bomb = spec_.bomb;
  if (state.current_location != bomb.location) return failure(FailureCode::NotHere, "not_at_bomb", {});
  bool ready = std::all_of(bomb.defuse_requirement.begin(), bomb.defuse_requirement.end(),
                           [&](const auto& f) { return has_flag(state, spec_, f); });
  if (!ready) return failure(FailureCode::Precondition, "defuse_unready", {});
  ActionResult r;
  r.won = true;
  r.message = bomb.defused_text.empty() ? "You defuse the bomb." : bomb.defused_text;
  r.state_delta.push_back("status:won");
  return r;
}

}  // namespace dejaboom
