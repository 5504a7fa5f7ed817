#include "dejaboom/session.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/npc.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Running:
      return "RUNNING";
    case SessionStatus::Won:
      return "WON";
    case SessionStatus::TimeUp:
      return "TIME_UP";
  }
  return "RUNNING";
}

SessionStatus session_status_from_string(std::string_view text) {
  if (text == "RUNNING") return SessionStatus::Running;
  if (text == "WON") return SessionStatus::Won;
  if (text == "TIME_UP") return SessionStatus::TimeUp;
  throw std::invalid_argument("unknown session status " + std::string(text));
}

// ---------------------------------------------------------------------------
// Log records

std::string to_jsonl_line(const LogRecord& r) {
  ojson j;
  j["seq"] = r.seq;
  j["day"] = r.day;
  j["step_in_day"] = r.step_in_day;
  j["role"] = r.role;
  j["text"] = r.text;
  j["classification"] = r.classification;
  j["state_label_after"] = r.state_label_after.str();
  j["canonical_command"] = r.canonical_command ? ojson(*r.canonical_command) : ojson(nullptr);
  j["location"] = r.location;
  if (r.event) j["event"] = *r.event;
  if (r.fallback) j["fallback"] = true;
  return j.dump();
}

LogRecord parse_log_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw MalformedLogError(std::string("log line is not JSON: ") + e.what());
  }
  try {
    LogRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.day = j.at("day").get<int>();
    r.step_in_day = j.at("step_in_day").get<int>();
    r.role = j.at("role").get<std::string>();
    r.text = j.at("text").get<std::string>();
    r.classification = j.at("classification").get<std::string>();
    r.state_label_after = StateLabel::parse(j.at("state_label_after").get<std::string>());
    if (j.contains("canonical_command") && !j["canonical_command"].is_null()) {
      r.canonical_command = j["canonical_command"].get<std::string>();
    }
    r.location = j.value("location", "");
    if (j.contains("event")) r.event = j["event"].get<std::string>();
    r.fallback = j.value("fallback", false);
    if (r.classification != "action" && r.classification != "words" && r.classification != "none") {
      throw MalformedLogError("bad classification '" + r.classification + "'");
    }
    return r;
  } catch (const json::exception& e) {
    throw MalformedLogError(std::string("log record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedLogError(std::string("log record: ") + e.what());
  }
}

std::vector<LogRecord> read_log(std::istream& in) {
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    out.push_back(parse_log_line(line));
  }
  return out;
}

std::vector<LogRecord> read_log_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("log file " + path.string());
  return read_log(in);
}

void write_log(std::ostream& out, const std::vector<LogRecord>& records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

void write_log_file(const std::filesystem::path& path, const std::vector<LogRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("IO", "cannot write " + path.string());
  write_log(out, records);
}

std::vector<DaySegment> split_days(const std::vector<LogRecord>& log) {
  std::vector<DaySegment> out;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const LogRecord& r = log[i];
    if (i > 0) {
      if (r.seq <= log[i - 1].seq) throw MalformedLogError("seq " + std::to_string(r.seq) + " is not increasing");
      if (r.day < log[i - 1].day) throw MalformedLogError("day decreases at seq " + std::to_string(r.seq));
    }
    if (out.empty() || out.back().day != r.day) out.push_back(DaySegment{r.day, {}});
    out.back().records.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Session engine

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

struct Pending {
  std::string role;
  std::string text;
  bool fallback = false;
};

}  // namespace

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << rng();
  return out.str();
}

SessionEngine::SessionEngine(const WorldSpec& spec, Provider& provider, MessageTable messages, SessionOptions options)
    : spec_(spec), provider_(provider), engine_(spec, std::move(messages)), options_(options) {}

Session SessionEngine::start(PlayerMetadata player, std::string id) const {
  Session s;
  s.id = id.empty() ? new_session_id() : std::move(id);
  s.player = std::move(player);
  s.world = spec_.name;
  s.provider = provider_.name();
  s.created = utc_now();
  s.state = fresh_state(spec_);
  LogRecord intro;
  intro.seq = 1;
  intro.day = s.state.day;
  intro.step_in_day = 0;
  intro.role = "system";
  intro.text = spec_.intro_text;
  intro.state_label_after = state_label(s.state, spec_);
  intro.location = s.state.current_location;
  intro.event = "day_start";
  s.log.push_back(std::move(intro));
  s.history.turns.push_back(Turn{"system", spec_.intro_text, 0, s.state.day});
  return s;
}

std::vector<LogRecord> SessionEngine::step(Session& session, std::string_view raw_in) const {
  if (session.status != SessionStatus::Running) throw SessionOverError();
  const std::string raw = text::trim(raw_in);
  if (text::words(raw).empty()) throw EmptyInputError();
  Session work = session;
  auto records = apply(work, raw);
  session = std::move(work);
  return records;
}

std::vector<LogRecord> SessionEngine::apply(Session& s, const std::string& raw) const {

  WorldState& st = s.state;
  const std::string here = st.current_location;
  const auto npc_here = npc_present(here, st, spec_);

  std::size_t fb = provider_.fallbacks();
  auto fell_back = [&] {
    bool changed = provider_.fallbacks() != fb;
    fb = provider_.fallbacks();
    return changed;
  };

  const Classification cls = provider_.classify(raw, npc_here.has_value());
  const bool player_fallback = fell_back();
  st.step_in_day += 1;
  const Turn player_turn{"player", raw, st.step_in_day, st.day};

  std::vector<Pending> responses;
  std::optional<std::string> canonical;
  bool won = false;

  auto npc_reply = [&](const std::string& npc_id, bool arrival, bool condition_met, bool action_failed,
                       std::string_view utterance) {
    auto ctx = build_npc_context(npc_id, st, spec_);
    if (!ctx) return;
    ctx->arrival = arrival;
    ctx->condition_met = condition_met;
    ctx->action_failed = action_failed;
    std::string reply = provider_.npc_respond(*ctx, utterance, s.history);
    NpcRuntime& rt = runtime_for(st, spec_, npc_id);
    if (!utterance.empty()) rt.conversation.push_back(player_turn);
    rt.conversation.push_back(Turn{ctx->name, reply, st.step_in_day, st.day});
    responses.push_back({"npc:" + npc_id, std::move(reply), fell_back()});
  };

  if (cls.kind == InputKind::Action) {
    NormalizeResult nr = provider_.normalize(raw);
    fell_back();
    VerbObjectCommand cmd = nr.command ? *nr.command : VerbObjectCommand{nr.verb_token, nr.object_token, raw};
    if (nr.command) canonical = cmd.canonical();
    auto [result, next] = engine_.execute(cmd, st);
    if (result.ok()) {
      st = std::move(next);
      FeedbackRequest req{raw, st.current_location, engine_.describe_location(st), result.message};
      std::string text = provider_.game_feedback(req, s.history);
      responses.push_back({"game_feedback", std::move(text), fell_back()});
      if (st.current_location != here) {
        if (auto npc = npc_present(st.current_location, st, spec_);
            npc && runtime_for(st, spec_, *npc).conversation.empty()) {
          npc_reply(*npc, true, false, false, "");
        }
      }
      won = result.won;
    } else if (npc_here) {
      npc_reply(*npc_here, false, false, true, raw);
    } else {
      std::string text = provider_.rewrite_failure(raw, result, s.history);
      responses.push_back({"game_feedback", std::move(text), fell_back()});
    }
  } else if (npc_here) {
    NpcRuntime& rt = runtime_for(st, spec_, *npc_here);
    NpcAdvance adv = advance_npc(rt, raw, st, spec_, provider_);
    fell_back();
    if (adv.advanced) {
      rt = adv.runtime;
      apply_effects(st, adv.effects, spec_);
    }
    npc_reply(*npc_here, false, adv.advanced, false, raw);
  } else {
    FeedbackRequest req{raw, st.current_location, engine_.describe_location(st), std::nullopt};
    std::string text = provider_.game_feedback(req, s.history);
    responses.push_back({"game_feedback", std::move(text), fell_back()});
  }

  const std::size_t first = s.log.size();
  const StateLabel label = state_label(st, spec_);
  auto append = [&](std::string role, std::string text, std::string classification, bool fallback,
                    std::optional<std::string> event = std::nullopt) {
    LogRecord r;
    r.seq = s.log.empty() ? 1 : s.log.back().seq + 1;
    r.day = st.day;
    r.step_in_day = st.step_in_day;
    r.role = std::move(role);
    r.text = std::move(text);
    r.classification = std::move(classification);
    r.state_label_after = state_label(st, spec_);
    r.location = st.current_location;
    r.event = std::move(event);
    r.fallback = fallback;
    s.log.push_back(std::move(r));
  };

  append("player", raw, std::string(to_string(cls.kind)), player_fallback);
  s.log.back().canonical_command = canonical;
  s.log.back().state_label_after = label;
  s.history.turns.push_back(player_turn);
  for (auto& p : responses) {
    std::string speaker = p.role;
    if (p.role.starts_with("npc:")) {
      if (const NpcSpec* def = spec_.find_npc(p.role.substr(4))) speaker = def->name;
    }
    s.history.turns.push_back(Turn{speaker, p.text, st.step_in_day, st.day});
    append(std::move(p.role), std::move(p.text), "none", p.fallback);
  }

  if (won) {
    s.status = SessionStatus::Won;
    append("system", engine_.messages().render("won_banner"), "none", false, "won");
  } else if (st.step_in_day >= spec_.bomb.step_limit) {
    append("system", spec_.bomb.explosion_text, "none", false, "explosion");
    s.history.turns.push_back(Turn{"system", spec_.bomb.explosion_text, st.step_in_day, st.day});
    if (options_.max_days && st.day >= *options_.max_days) {
      s.status = SessionStatus::TimeUp;
      append("system", engine_.messages().render("time_up"), "none", false, "time_up");
    } else {
      st = reset_world(st, spec_);
      append("system", spec_.intro_text, "none", false, "day_start");
      s.history.turns.push_back(Turn{"system", spec_.intro_text, 0, st.day});
    }
  }

  s.history = summarize_history(s.history, options_.token_budget, provider_);
  return {s.log.begin() + static_cast<std::ptrdiff_t>(first), s.log.end()};
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

ojson turn_to_json(const Turn& t) { return ojson{{"speaker", t.speaker}, {"text", t.text}, {"step", t.step}, {"day", t.day}}; }

Turn turn_from_json(const json& j) {
  return Turn{j.at("speaker").get<std::string>(), j.at("text").get<std::string>(), j.at("step").get<int>(),
              j.at("day").get<int>()};
}

ojson turns_to_json(const std::vector<Turn>& turns) {
  ojson arr = ojson::array();
  for (const auto& t : turns) arr.push_back(turn_to_json(t));
  return arr;
}

std::vector<Turn> turns_from_json(const json& j) {
  std::vector<Turn> out;
  for (const auto& t : j) out.push_back(turn_from_json(t));
  return out;
}

ojson state_to_json(const WorldState& st) {
  ojson j;
  j["current_location"] = st.current_location;
  ojson placements = ojson::object();
  for (const auto& [k, v] : st.placements) placements[k] = v;
  j["placements"] = placements;
  j["flags"] = StateLabel(st.flags).str();
  ojson npcs = ojson::array();
  for (const auto& n : st.npcs) {
    npcs.push_back(ojson{{"npc_id", n.npc_id},
                         {"current_goal_index", n.current_goal_index},
                         {"activated", n.activated},
                         {"conversation", turns_to_json(n.conversation)}});
  }
  j["npcs"] = npcs;
  j["step_in_day"] = st.step_in_day;
  j["day"] = st.day;
  return j;
}

WorldState state_from_json(const json& j) {
  WorldState st;
  st.current_location = j.at("current_location").get<std::string>();
  for (const auto& [k, v] : j.at("placements").items()) st.placements[k] = v.get<std::string>();
  st.flags = StateLabel::parse(j.at("flags").get<std::string>()).bits();
  for (const auto& n : j.at("npcs")) {
    NpcRuntime rt;
    rt.npc_id = n.at("npc_id").get<std::string>();
    rt.current_goal_index = n.at("current_goal_index").get<std::size_t>();
    rt.activated = n.at("activated").get<bool>();
    rt.conversation = turns_from_json(n.at("conversation"));
    st.npcs.push_back(std::move(rt));
  }
  st.step_in_day = j.at("step_in_day").get<int>();
  st.day = j.at("day").get<int>();
  return st;
}

}  // namespace

std::string serialize_session(const Session& s) {
  ojson j;
  j["id"] = s.id;
  j["player"] = ojson{{"id", s.player.player_id}, {"motivation_profiles", s.player.motivation_profiles}};
  j["world"] = s.world;
  j["provider"] = s.provider;
  j["status"] = std::string(to_string(s.status));
  j["created"] = s.created;
  j["state"] = state_to_json(s.state);
  ojson history;
  history["summary"] = s.history.summary ? ojson(*s.history.summary) : ojson(nullptr);
  history["turns"] = turns_to_json(s.history.turns);
  j["history"] = history;
  j["log_length"] = s.log.size();
  return j.dump(2);
}

Session parse_session(std::string_view document) {
  json j = json::parse(document);
  Session s;
  s.id = j.at("id").get<std::string>();
  s.player.player_id = j.at("player").at("id").get<std::string>();
  s.player.motivation_profiles = j.at("player").at("motivation_profiles").get<std::vector<std::string>>();
  s.world = j.at("world").get<std::string>();
  s.provider = j.at("provider").get<std::string>();
  s.status = session_status_from_string(j.at("status").get<std::string>());
  s.created = j.at("created").get<std::string>();
  s.state = state_from_json(j.at("state"));
  const json& h = j.at("history");
  if (!h.at("summary").is_null()) s.history.summary = h.at("summary").get<std::string>();
  s.history.turns = turns_from_json(h.at("turns"));
  return s;
}

SessionStore::SessionStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionStore::log_path(const std::string& id) const { return dir_ / (id + ".jsonl"); }
std::filesystem::path SessionStore::snapshot_path(const std::string& id) const {
  return dir_ / (id + ".session.json");
}

bool SessionStore::exists(const std::string& id) const { return std::filesystem::exists(snapshot_path(id)); }

std::vector<std::string> SessionStore::list() const {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir_)) {
    const std::string name = e.path().filename().string();
    if (name.ends_with(".session.json")) out.push_back(name.substr(0, name.size() - 13));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void SessionStore::persist(const Session& s) const {
  if (s.id.empty() || s.id.find_first_of("/\\.") != std::string::npos) {
    throw Error("INVALID_ID", "bad session id '" + s.id + "'");
  }
  std::size_t stored = 0;
  {
    std::ifstream in(log_path(s.id), std::ios::binary);
    std::string line;
    while (std::getline(in, line)) stored += text::trim(line).empty() ? 0 : 1;
  }
  if (stored > s.log.size()) throw Error("LOG_SHRANK", "session " + s.id + " has fewer records than its log");
  if (stored < s.log.size()) {
    std::ofstream out(log_path(s.id), std::ios::binary | std::ios::app);
    for (std::size_t i = stored; i < s.log.size(); ++i) out << to_jsonl_line(s.log[i]) << '\n';
    if (!out) throw Error("IO", "cannot append to " + log_path(s.id).string());
  }
  const auto tmp = snapshot_path(s.id).string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << serialize_session(s);
    if (!out) throw Error("IO", "cannot write " + tmp);
  }
  std::filesystem::rename(tmp, snapshot_path(s.id));
}

Session SessionStore::load(const std::string& id) const {
  if (!exists(id)) throw NotFoundError("session " + id);
  std::ifstream snap(snapshot_path(id), std::ios::binary);
  std::stringstream buf;
  buf << snap.rdbuf();
  Session s;
  std::size_t expected = 0;
  try {
    s = parse_session(buf.str());
    expected = json::parse(buf.str()).at("log_length").get<std::size_t>();
  } catch (const std::exception& e) {
    throw CorruptLogError(0, "session snapshot " + id + " unreadable: " + e.what());
  }
  std::ifstream in(log_path(id), std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    const std::uint64_t seq = s.log.size() + 1;
    if (text::trim(line).empty()) continue;
    try {
      LogRecord r = parse_log_line(line);
      if (r.seq != seq) throw MalformedLogError("expected seq " + std::to_string(seq));
      s.log.push_back(std::move(r));
    } catch (const MalformedLogError& e) {
      throw CorruptLogError(seq, "session " + id + " log corrupt at seq " + std::to_string(seq) + ": " + e.what());
    }
  }
  if (s.log.size() != expected) {
    const std::uint64_t seq = std::min(s.log.size(), expected) + 1;
    throw CorruptLogError(seq, "session " + id + " log has " + std::to_string(s.log.size()) + " records, expected " +
                                   std::to_string(expected));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Replay

VerbObjectCommand parse_canonical(std::string_view canonical) {
  VerbObjectCommand cmd;
  cmd.raw = std::string(canonical);
  auto sp = canonical.find(' ');
  cmd.verb = std::string(canonical.substr(0, sp));
  if (sp != std::string_view::npos) cmd.object = std::string(canonical.substr(sp + 1));
  return cmd;
}

std::vector<StateLabel> replay_day(const DaySegment& segment, const WorldSpec& spec, Provider& judge) {
  ActionEngine engine(spec);
  WorldState st = fresh_state(spec);
  st.day = segment.day;
  std::vector<StateLabel> labels;
  for (const auto& r : segment.records) {
    if (r.role == "player") {
      st.step_in_day += 1;
      if (r.classification == "action" && r.canonical_command) {
        auto [result, next] = engine.execute(parse_canonical(*r.canonical_command), st);
        if (result.ok()) st = std::move(next);
      } else if (r.classification == "words") {
        if (auto npc = npc_present(st.current_location, st, spec)) {
          NpcRuntime& rt = runtime_for(st, spec, *npc);
          NpcAdvance adv = advance_npc(rt, r.text, st, spec, judge);
          if (adv.advanced) {
            rt = adv.runtime;
            apply_effects(st, adv.effects, spec);
          }
        }
      }
    }
    labels.push_back(state_label(st, spec));
  }
  return labels;
}

}  // namespace dejaboom
