#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dejaboom/action.hpp"
#include "dejaboom/provider.hpp"
#include "dejaboom/world.hpp"

namespace dejaboom {

enum class SessionStatus { Running, Won, TimeUp };

std::string_view to_string(SessionStatus status);
SessionStatus session_status_from_string(std::string_view text);

struct PlayerMetadata {
  std::string player_id;
  // Free-form motivation profile tags; stored, never analysed.
  std::vector<std::string> motivation_profiles;

  bool operator==(const PlayerMetadata&) const = default;
};

// One line of the game log. `role` is "player", "game_feedback",
// "npc:<id>" or "system"; `classification` is "action", "words" or "none".
struct LogRecord {
  std::uint64_t seq = 0;
  int day = 1;
  int step_in_day = 0;
  std::string role;
  std::string text;
  std::string classification = "none";
  StateLabel state_label_after;
  std::optional<std::string> canonical_command;
  std::string location;
  std::optional<std::string> event;  // "day_start", "explosion", "won", "time_up"
  bool fallback = false;             // produced by a fallback path

  bool operator==(const LogRecord&) const = default;
};

// One JSON object, no trailing newline. Field order is fixed, so equal
// records serialize to identical bytes.
std::string to_jsonl_line(const LogRecord& record);
LogRecord parse_log_line(std::string_view line);  // throws MalformedLogError

std::vector<LogRecord> read_log(std::istream& in);
std::vector<LogRecord> read_log_file(const std::filesystem::path& path);
void write_log(std::ostream& out, const std::vector<LogRecord>& records);
void write_log_file(const std::filesystem::path& path, const std::vector<LogRecord>& records);

struct DaySegment {
  int day = 1;
  std::vector<LogRecord> records;

  bool operator==(const DaySegment&) const = default;
};

// Throws MalformedLogError on a non-increasing seq or a decreasing day.
std::vector<DaySegment> split_days(const std::vector<LogRecord>& log);

struct Session {
  std::string id;
  PlayerMetadata player;
  std::string world;
  std::string provider;
  SessionStatus status = SessionStatus::Running;
  std::string created;  // ISO-8601 UTC
  WorldState state;
  HistoryWindow history;
  std::vector<LogRecord> log;

  bool operator==(const Session&) const = default;
};

struct SessionOptions {
  std::size_t token_budget = 6000;
  // Days allowed before the session ends TIME_UP; unlimited when empty.
  std::optional<int> max_days;
};

// Runs the per-command pipeline for sessions of one world. The provider
// should be a FallbackProvider for live play.
class SessionEngine {
 public:
  SessionEngine(const WorldSpec& spec, Provider& provider, MessageTable messages = {}, SessionOptions options = {});

  Session start(PlayerMetadata player, std::string id = {}) const;

  // Returns the records appended by this command. Throws EmptyInputError
  // (no step consumed) or SessionOverError.
  std::vector<LogRecord> step(Session& session, std::string_view raw) const;

  const WorldSpec& spec() const { return spec_; }
  const ActionEngine& engine() const { return engine_; }

 private:
  std::vector<LogRecord> apply(Session& s, const std::string& raw) const;

  const WorldSpec& spec_;
  Provider& provider_;
  ActionEngine engine_;
  SessionOptions options_;
};

std::string new_session_id();

std::string serialize_session(const Session& session);  // without the log
Session parse_session(std::string_view document);       // log left empty

// Directory of `<id>.session.json` snapshots plus append-only `<id>.jsonl`
// logs.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  void persist(const Session& session) const;
  Session load(const std::string& id) const;  // NotFoundError, CorruptLogError
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

  std::filesystem::path log_path(const std::string& id) const;
  std::filesystem::path snapshot_path(const std::string& id) const;

 private:
  std::filesystem::path dir_;
};

// Re-executes a day's canonical commands and NPC utterances from a fresh
// state and returns the label after each record.
std::vector<StateLabel> replay_day(const DaySegment& segment, const WorldSpec& spec, Provider& judge);

// "take water bucket" -> {take, "water bucket"}
VerbObjectCommand parse_canonical(std::string_view canonical);

}  // namespace dejaboom
