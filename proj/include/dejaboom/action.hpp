#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dejaboom/world.hpp"

namespace dejaboom {

struct VerbObjectCommand {
  std::string verb;
  std::optional<std::string> object;
  std::string raw;

  // "take water bucket", "look"
  std::string canonical() const;
  bool operator==(const VerbObjectCommand&) const = default;
};

enum class Outcome { Success, Failure };

enum class FailureCode { UnknownVerb, MissingObject, Precondition, NotHere, NotPortable, Locked };

std::string_view to_string(FailureCode code);
std::optional<FailureCode> failure_code_from_string(std::string_view text);

struct ActionResult {
  Outcome outcome = Outcome::Success;
  std::string message;
  std::vector<std::string> state_delta;
  std::optional<FailureCode> failure_code;
  bool won = false;

  bool ok() const { return outcome == Outcome::Success; }
};

// Canonical engine texts keyed by message id, with {placeholder} fields.
class MessageTable {
 public:
  MessageTable();  // built-in defaults
  static MessageTable load(const std::filesystem::path& path);
  static MessageTable parse(std::string_view json_text);

  std::string render(const std::string& id, const std::map<std::string, std::string>& fields = {}) const;
  bool contains(const std::string& id) const { return table_.contains(id); }

 private:
  std::map<std::string, std::string> table_;
};

const std::vector<std::string>& supported_verbs();
bool is_supported_verb(std::string_view verb);

// The fixed game agent. Failures are values and leave the state untouched.
class ActionEngine {
 public:
  explicit ActionEngine(const WorldSpec& spec, MessageTable messages = {});

  std::pair<ActionResult, WorldState> execute(const VerbObjectCommand& cmd, const WorldState& state) const;
  ActionResult try_defuse(WorldState& state) const;
  ActionResult combine_kit(WorldState& state) const;

  // Text shown on arrival or for `look`.
  std::string describe_location(const WorldState& state) const;

  // Resolves a player token to an object id (id, name, or alias).
  std::optional<std::string> resolve_object(std::string_view token) const;
  // Resolves a go target: direction, location id/name, or NPC name.
  std::optional<std::string> resolve_destination(std::string_view token, const WorldState& state) const;

  const MessageTable& messages() const { return messages_; }
  const WorldSpec& spec() const { return spec_; }

 private:
  ActionResult failure(FailureCode code, const std::string& id, std::map<std::string, std::string> fields) const;
  ActionResult go(const VerbObjectCommand& cmd, WorldState& state) const;
  ActionResult take(const VerbObjectCommand& cmd, WorldState& state) const;
  ActionResult drop(const VerbObjectCommand& cmd, WorldState& state) const;
  ActionResult read(const VerbObjectCommand& cmd, WorldState& state, bool via_open) const;
  ActionResult examine(const VerbObjectCommand& cmd, const WorldState& state) const;
  ActionResult inventory(const WorldState& state) const;
  bool object_here(const WorldState& state, const std::string& object_id) const;

  const WorldSpec& spec_;
  MessageTable messages_;
};

}  // namespace dejaboom
