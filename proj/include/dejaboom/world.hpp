#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dejaboom/npc_types.hpp"

namespace dejaboom {

inline constexpr std::string_view kInventory = "inventory";
// Placement of kit ingredients after they are combined.
inline constexpr std::string_view kConsumed = "consumed";

// Milestone-flag fingerprint of a world state, one bit per milestone in
// WorldSpec order.
class StateLabel {
 public:
  StateLabel() = default;
  explicit StateLabel(std::vector<bool> bits) : bits_(std::move(bits)) {}

  // Parses a string of '0'/'1' characters. Throws std::invalid_argument.
  static StateLabel parse(std::string_view text);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_.at(i); }
  std::size_t count() const;
  const std::vector<bool>& bits() const { return bits_; }

  // True when every bit set in `other` is also set here.
  bool dominates(const StateLabel& other) const;

  std::string str() const;

  bool operator==(const StateLabel&) const = default;
  auto operator<=>(const StateLabel& other) const { return str() <=> other.str(); }

 private:
  std::vector<bool> bits_;
};

struct Location {
  std::string id;
  std::string name;
  std::string description;
  std::map<std::string, std::string> exits;  // direction -> location id
  std::set<std::string> one_way;             // directions exempt from symmetry
  bool hidden = false;
  std::optional<std::string> reveal_condition;

  bool operator==(const Location&) const = default;
};

struct GameObject {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
  std::string description;
  std::string location;  // location id or "inventory"
  bool portable = false;
  std::optional<std::string> readable_text;
  // Granted on read for readable objects, on take otherwise.
  std::vector<std::string> grants_flags;

  bool readable() const { return readable_text.has_value(); }
  bool operator==(const GameObject&) const = default;
};

struct Bomb {
  std::string location;
  int step_limit = 30;
  std::vector<std::string> defuse_requirement;
  // Disposal-kit recipe: carried ingredients plus required flags yield kit_flag.
  std::vector<std::string> kit_ingredients;
  std::vector<std::string> kit_requires;
  std::optional<std::string> kit_flag;
  std::string explosion_text;
  std::string defused_text;

  bool operator==(const Bomb&) const = default;
};

struct WorldSpec {
  std::string name;
  std::vector<Location> locations;
  std::vector<GameObject> objects;
  std::vector<NpcSpec> npcs;
  Bomb bomb;
  std::vector<std::string> milestones;
  std::string start_location;
  std::string intro_text;

  const Location* find_location(std::string_view id) const;
  const GameObject* find_object(std::string_view id) const;
  const NpcSpec* find_npc(std::string_view id) const;
  std::optional<std::size_t> flag_index(std::string_view flag) const;
  std::optional<std::size_t> npc_index(std::string_view id) const;

  bool operator==(const WorldSpec&) const = default;
};

struct WorldState {
  std::string current_location;
  std::map<std::string, std::string> placements;  // object id -> location id | "inventory"
  std::vector<bool> flags;
  std::vector<NpcRuntime> npcs;  // parallel to WorldSpec::npcs
  int step_in_day = 0;
  int day = 1;

  std::vector<std::string> inventory() const;
  bool carrying(std::string_view object_id) const;

  bool operator==(const WorldState&) const = default;
};

// Parses and validates a world-spec JSON document.
WorldSpec load_world_spec(std::string_view document);
WorldSpec load_world_spec_file(const std::filesystem::path& path);

// Pretty-printed JSON; load_world_spec(serialize_world_spec(s)) == s.
std::string serialize_world_spec(const WorldSpec& spec);

// Throws SpecValidationError naming the first violated invariant.
void validate_world_spec(const WorldSpec& spec);

WorldState fresh_state(const WorldSpec& spec);

// Restores the spec defaults and advances the day. The session log is the
// player's memory and lives elsewhere.
WorldState reset_world(const WorldState& state, const WorldSpec& spec);

StateLabel state_label(const WorldState& state, const WorldSpec& spec);

bool has_flag(const WorldState& state, const WorldSpec& spec, std::string_view flag);

// Idempotent; also activates NPCs gated on the flag. Throws UnknownFlagError.
WorldState set_flag(WorldState state, std::string_view flag, const WorldSpec& spec);
void set_flag_in_place(WorldState& state, std::string_view flag, const WorldSpec& spec);

bool location_visible(const WorldState& state, const WorldSpec& spec, std::string_view location_id);

// Exits of a location, omitting hidden rooms that have not been revealed.
std::vector<std::pair<std::string, std::string>> visible_exits(const WorldState& state,
                                                               const WorldSpec& spec,
                                                               std::string_view location_id);

}  // namespace dejaboom
