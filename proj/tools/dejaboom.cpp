#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/narrative.hpp"
#include "dejaboom/profiles.hpp"
#include "dejaboom/service.hpp"
#include "dejaboom/session.hpp"

namespace fs = std::filesystem;
using namespace dejaboom;

namespace {

#ifdef DEJABOOM_DATA_DIR
const char* kDefaultDataDir = DEJABOOM_DATA_DIR;
#else
const char* kDefaultDataDir = "data";
#endif

struct Shared {
  std::string data_dir = kDefaultDataDir;
  std::string world;
  std::string provider = "rule";
  std::string provider_config;

  fs::path world_path() const {
    return world.empty() ? fs::path(data_dir) / "worlds" / "dejaboom.json" : fs::path(world);
  }

  std::map<std::string, ProviderProfile> profiles() const {
    return provider_config.empty() ? default_provider_profiles() : load_provider_profiles(provider_config);
  }

  MessageTable messages() const {
    const fs::path p = fs::path(data_dir) / "failure_messages.json";
    return fs::exists(p) ? MessageTable::load(p) : MessageTable{};
  }
};

void add_shared(CLI::App* cmd, Shared& s, bool with_provider) {
  cmd->add_option("--data-dir", s.data_dir, "directory with worlds/, rules/ and prompts/");
  cmd->add_option("--world", s.world, "world spec JSON (default: the shipped world)");
  if (with_provider) {
    cmd->add_option("--provider", s.provider, "provider profile name");
    cmd->add_option("--provider-config", s.provider_config, "provider profiles JSON");
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << body;
}

std::string speaker(const LogRecord& r, const WorldSpec& spec) {
  if (r.role == "player") return "Player";
  if (r.role == "game_feedback") return "Game Feedback";
  if (r.role.starts_with("npc:")) {
    const NpcSpec* npc = spec.find_npc(r.role.substr(4));
    return npc ? npc->name : r.role.substr(4);
  }
  return "==";
}

// ---------------------------------------------------------------------------

struct PlayOptions {
  Shared shared;
  std::string log_out;
  std::string player_id;
  bool no_rewrite = false;
  int max_days = 0;
  bool echo = false;
};

int run_play(const PlayOptions& o) {
  const WorldSpec spec = load_world_spec_file(o.shared.world_path());
  const RuleTables tables = RuleTables::load(fs::path(o.shared.data_dir) / "rules");
  const MessageTable messages = o.shared.messages();
  auto profiles = o.shared.profiles();
  auto it = profiles.find(o.shared.provider);
  if (it == profiles.end()) throw ConfigError("unknown provider profile '" + o.shared.provider + "'");
  ProviderProfile profile = it->second;
  if (o.no_rewrite) profile.rewrite_template = false;
  ProviderStack stack(profile, spec, tables, messages, fs::path(o.shared.data_dir) / "prompts");

  SessionOptions opts;
  if (o.max_days > 0) opts.max_days = o.max_days;
  SessionEngine engine(spec, stack.provider(), messages, opts);
  PlayerMetadata player;
  player.player_id = o.player_id;
  Session session = engine.start(player);
  session.world = spec.name;
  session.provider = profile.name;

  auto show = [&](const LogRecord& r) {
    if (r.role == "player" && !o.echo) return;
    std::cout << speaker(r, spec) << ": " << r.text << "\n";
  };
  for (const auto& r : session.log) show(r);

  std::string line;
  while (session.status == SessionStatus::Running && std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (const auto& r : engine.step(session, line)) show(r);
  }
  std::cout << "STATUS: " << to_string(session.status) << " day=" << session.state.day
            << " steps=" << session.state.step_in_day << "\n";
  if (!o.log_out.empty()) write_log_file(o.log_out, session.log);
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeOptions {
  Shared shared;
  std::string logs;
  std::string designer;
  std::string out;
};

std::vector<std::pair<std::string, fs::path>> jsonl_in(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw NotFoundError("directory " + dir.string());
  return designer_logs_in(dir);
}

int run_analyze(const AnalyzeOptions& o) {
  const WorldSpec spec = load_world_spec_file(o.shared.world_path());
  const RuleTables tables = RuleTables::load(fs::path(o.shared.data_dir) / "rules");
  const MessageTable messages = o.shared.messages();
  auto profiles = o.shared.profiles();
  auto it = profiles.find(o.shared.provider);
  if (it == profiles.end()) throw ConfigError("unknown provider profile '" + o.shared.provider + "'");
  ProviderStack stack(it->second, spec, tables, messages, fs::path(o.shared.data_dir) / "prompts");
  Provider& provider = stack.provider();

  std::vector<std::pair<std::string, std::vector<LogRecord>>> walkthroughs;
  for (const auto& [source, path] : jsonl_in(o.designer)) walkthroughs.emplace_back(source, read_log_file(path));
  const NarrativeGraph g0 = build_designer_graph(walkthroughs, spec, provider);

  std::vector<std::pair<std::string, NarrativeGraph>> players;
  for (const auto& [player, path] : jsonl_in(o.logs)) {
    players.emplace_back(player, build_session_graph(read_log_file(path), "player", player, spec, provider));
  }
  const CorpusAnalysis analysis = analyze_corpus(g0, players, provider);

  const fs::path out(o.out);
  fs::create_directories(out);
  write_file(out / "designer_graph.json", export_graph_json(g0));
  write_file(out / "graph.json", export_graph_json(analysis.merged));
  write_file(out / "graph.dot", export_graph_dot(analysis.merged));
  write_file(out / "report.json", export_report_json(analysis.report));
  std::cout << "players=" << players.size() << " total=" << analysis.report.total
            << " unique=" << analysis.report.unique << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_export(const std::string& in, const std::string& format) {
  const NarrativeGraph g = import_graph_json(read_file(in));
  std::cout << (format == "dot" ? export_graph_dot(g) : export_graph_json(g));
  return 0;
}

int run_validate(const std::string& world) {
  const WorldSpec spec = load_world_spec(read_file(world));
  std::cout << nlohmann::json{{"ok", true},
                              {"world", spec.name},
                              {"locations", spec.locations.size()},
                              {"npcs", spec.npcs.size()}}
                   .dump()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeOptions {
  Shared shared;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string sessions_dir = "sessions";
  std::string log_root;
  std::string designer;
  std::string busy = "queue";
  int max_days = 0;
};

std::atomic<Service*> g_service{nullptr};

extern "C" void on_signal(int) {
  if (Service* s = g_service.load()) s->stop();
}

int run_serve(const ServeOptions& o) {
  ServiceConfig cfg;
  cfg.data_dir = o.shared.data_dir;
  cfg.sessions_dir = o.sessions_dir;
  cfg.log_root = o.log_root.empty() ? fs::path(o.sessions_dir) : fs::path(o.log_root);
  cfg.designer_logs = designer_logs_in(o.designer);
  cfg.providers = o.shared.profiles();
  cfg.busy = o.busy == "reject" ? BusyPolicy::Reject : BusyPolicy::Queue;
  if (o.max_days > 0) cfg.session_options.max_days = o.max_days;
  fs::create_directories(cfg.sessions_dir);

  Service service(cfg);
  const int port = service.bind(o.host, o.port);
  if (port < 0) throw ConfigError("cannot bind " + o.host + ":" + std::to_string(o.port));
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on " << o.host << ":" << port << std::endl;
  service.serve();
  g_service = nullptr;
  return 0;
}

int fail(const std::string& code, const std::string& message, const std::string& invariant = {}) {
  nlohmann::ordered_json j{{"error", code}, {"message", message}};
  if (!invariant.empty()) j["invariant"] = invariant;
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-loop text adventure with emergent narrative analysis"};
  app.require_subcommand(1);

  PlayOptions play;
  auto* play_cmd = app.add_subcommand("play", "play a session; commands are read line by line from stdin");
  add_shared(play_cmd, play.shared, true);
  play_cmd->add_option("--log-out", play.log_out, "write the session log (JSONL) here");
  play_cmd->add_option("--player", play.player_id, "player id stored in the session");
  play_cmd->add_option("--max-days", play.max_days, "end the session after this many days");
  play_cmd->add_flag("--no-rewrite", play.no_rewrite, "show raw failure messages");
  play_cmd->add_flag("--echo", play.echo, "echo player lines");

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "build narrative graphs and the emergence report");
  add_shared(analyze_cmd, analyze.shared, true);
  analyze_cmd->add_option("--logs", analyze.logs, "directory of player *.jsonl logs")->required();
  analyze_cmd->add_option("--designer", analyze.designer, "directory of designer *.jsonl logs")->required();
  analyze_cmd->add_option("--out", analyze.out, "output directory")->required();

  std::string export_in, export_format = "json";
  auto* graph_cmd = app.add_subcommand("graph", "graph utilities");
  graph_cmd->require_subcommand(1);
  auto* export_cmd = graph_cmd->add_subcommand("export", "re-export a graph JSON file");
  export_cmd->add_option("--in", export_in, "graph JSON")->required();
  export_cmd->add_option("--format", export_format, "dot or json")->check(CLI::IsMember({"dot", "json"}));

  std::string validate_world;
  auto* validate_cmd = app.add_subcommand("validate", "check a world spec");
  validate_cmd->add_option("--world", validate_world, "world spec JSON")->required();

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  add_shared(serve_cmd, serve.shared, false);
  serve_cmd->add_option("--providers", serve.shared.provider_config, "provider profiles JSON");
  serve_cmd->add_option("--host", serve.host, "address to listen on")->capture_default_str();
  serve_cmd->add_option("--port", serve.port, "port to listen on; 0 picks a free one")->capture_default_str();
  serve_cmd->add_option("--sessions-dir", serve.sessions_dir, "where session logs and snapshots are kept")->capture_default_str();
  serve_cmd->add_option("--log-root", serve.log_root, "root for path log references (default: sessions dir)");
  serve_cmd->add_option("--designer", serve.designer, "directory of designer *.jsonl logs");
  serve_cmd->add_option("--busy", serve.busy, "queue or reject")->check(CLI::IsMember({"queue", "reject"}));
  serve_cmd->add_option("--max-days", serve.max_days, "end sessions after this many days");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*play_cmd) return run_play(play);
    if (*analyze_cmd) return run_analyze(analyze);
    if (*export_cmd) return run_export(export_in, export_format);
    if (*validate_cmd) return run_validate(validate_world);
    if (*serve_cmd) return run_serve(serve);
  } catch (const SpecValidationError& e) {
    return fail(e.code(), e.what(), e.invariant());
  } catch (const SpecParseError& e) {
    return fail(e.code(), e.what(), e.field());
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::exception& e) {
    return fail("INTERNAL", e.what());
  }
  return 0;
}
