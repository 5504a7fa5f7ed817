#include "dejaboom/service.hpp"

#include <algorithm>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/narrative.hpp"

namespace dejaboom {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::vector<std::pair<std::string, std::filesystem::path>> designer_logs_in(const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::filesystem::path>> out;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() == ".jsonl") out.emplace_back(e.path().stem().string(), e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

const std::regex kNamePattern("[A-Za-z0-9_-]+");

struct WorldBundle {
  WorldSpec spec;
  RuleTables tables;
  MessageTable messages;
};

struct SessionSlot {
  std::mutex mutex;
  Session session;
  std::unique_ptr<ProviderStack> stack;
  std::unique_ptr<SessionEngine> engine;
};

struct GraphResult {
  std::string graph_json;
  std::string report_json;
};

struct HttpError {
  int status;
  std::string code;
  std::string message;
};

std::string records_array(const std::vector<LogRecord>& records, std::size_t from = 0,
                          std::size_t to = std::string::npos) {
  std::string out = "[";
  to = std::min(to, records.size());
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ",";
    out += to_jsonl_line(records[i]);
  }
  return out + "]";
}

std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

}  // namespace

struct Service::Impl {
  ServiceConfig cfg;
  httplib::Server server;
  SessionStore store;

  std::mutex worlds_mutex;
  std::map<std::string, std::unique_ptr<WorldBundle>> worlds;
  std::map<std::string, NarrativeGraph> designer_graphs;

  std::mutex sessions_mutex;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions;

  std::mutex graphs_mutex;
  std::map<std::string, GraphResult> graphs;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), store(cfg.sessions_dir) { routes(); }

  WorldBundle& world(const std::string& name) {
    if (!std::regex_match(name, kNamePattern)) throw HttpError{400, "BAD_REQUEST", "bad world name"};
    std::lock_guard lock(worlds_mutex);
    auto it = worlds.find(name);
    if (it != worlds.end()) return *it->second;
    const auto path = cfg.data_dir / "worlds" / (name + ".json");
    if (!std::filesystem::exists(path)) throw NotFoundError("world " + name);
    auto bundle = std::make_unique<WorldBundle>();
    bundle->spec = load_world_spec_file(path);
    bundle->tables = RuleTables::load(cfg.data_dir / "rules");
    const auto messages = cfg.data_dir / "failure_messages.json";
    if (std::filesystem::exists(messages)) bundle->messages = MessageTable::load(messages);
    return *worlds.emplace(name, std::move(bundle)).first->second;
  }

  const ProviderProfile& profile(const std::string& name) const {
    auto it = cfg.providers.find(name);
    if (it == cfg.providers.end()) throw HttpError{400, "CONFIG", "unknown provider profile '" + name + "'"};
    return it->second;
  }

  std::shared_ptr<SessionSlot> make_slot(Session session, const std::string& world_name,
                                         const std::string& profile_name) {
    WorldBundle& w = world(world_name);
    auto slot = std::make_shared<SessionSlot>();
    slot->stack = std::make_unique<ProviderStack>(profile(profile_name), w.spec, w.tables, w.messages,
                                                  cfg.data_dir / "prompts");
    slot->engine = std::make_unique<SessionEngine>(w.spec, slot->stack->provider(), w.messages, cfg.session_options);
    slot->session = std::move(session);
    return slot;
  }

  std::shared_ptr<SessionSlot> slot(const std::string& id) {
    std::lock_guard lock(sessions_mutex);
    if (auto it = sessions.find(id); it != sessions.end()) return it->second;
    Session s = store.load(id);
    std::string world_name = s.world, profile_name = s.provider;
    auto created = make_slot(std::move(s), world_name, profile_name);
    sessions[id] = created;
    return created;
  }

  // -------------------------------------------------------------------------

  void create_session(const httplib::Request& req, httplib::Response& res) {
    json body = req.body.empty() ? json::object() : json::parse(req.body);
    const std::string world_name = body.value("world", "dejaboom");
    const std::string profile_name = body.value("provider", "rule");
    PlayerMetadata player;
    if (body.contains("player")) {
      player.player_id = body["player"].value("id", "");
      player.motivation_profiles = body["player"].value("motivation_profiles", std::vector<std::string>{});
    }
    auto slot = make_slot({}, world_name, profile_name);
    slot->session = slot->engine->start(std::move(player));
    slot->session.world = world_name;
    slot->session.provider = profile_name;
    store.persist(slot->session);
    {
      std::lock_guard lock(sessions_mutex);
      sessions[slot->session.id] = slot;
    }
    res.status = 201;
    res.set_content(ojson{{"id", slot->session.id}}.dump(), "application/json");
  }

  void post_command(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = slot(id);
    std::unique_lock lock(s->mutex, std::defer_lock);
    if (cfg.busy == BusyPolicy::Reject) {
      if (!lock.try_lock()) throw HttpError{429, "BUSY", "session " + id + " is handling another command"};
    } else {
      lock.lock();
    }
    json body = json::parse(req.body);
    const std::string text = body.value("text", "");
    auto records = s->engine->step(s->session, text);
    store.persist(s->session);
    std::string out = "{\"records\":" + records_array(records) + ",\"status\":\"" +
                      std::string(to_string(s->session.status)) + "\",\"day\":" +
                      std::to_string(s->session.state.day) +
                      ",\"step_in_day\":" + std::to_string(s->session.state.step_in_day) + "}";
    res.set_content(out, "application/json");
  }

  void get_session(const std::string& id, httplib::Response& res) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    const Session& se = s->session;
    const std::size_t n = se.log.size();
    const std::size_t from = n > 20 ? n - 20 : 0;
    ojson head{{"id", se.id},
               {"player", ojson{{"id", se.player.player_id}, {"motivation_profiles", se.player.motivation_profiles}}},
               {"world", se.world},
               {"provider", se.provider},
               {"status", std::string(to_string(se.status))},
               {"day", se.state.day},
               {"step_in_day", se.state.step_in_day},
               {"step_limit", s->engine->spec().bomb.step_limit},
               {"log_length", n}};
    std::string out = head.dump();
    out.pop_back();
    out += ",\"records\":" + records_array(se.log, from) + "}";
    res.set_content(out, "application/json");
  }

  void get_log(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = slot(id);
    std::lock_guard lock(s->mutex);
    std::uint64_t from_seq = 1;
    std::size_t limit = 100;
    try {
      if (req.has_param("from_seq")) from_seq = std::stoull(req.get_param_value("from_seq"));
      if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
    } catch (const std::exception&) {
      throw HttpError{400, "BAD_REQUEST", "from_seq and limit must be integers"};
    }
    if (limit == 0 || limit > 1000) throw HttpError{400, "BAD_REQUEST", "limit must be in 1..1000"};
    const auto& log = s->session.log;
    auto first = std::lower_bound(log.begin(), log.end(), from_seq,
                                  [](const LogRecord& r, std::uint64_t seq) { return r.seq < seq; });
    const std::size_t begin = static_cast<std::size_t>(first - log.begin());
    const std::size_t end = std::min(log.size(), begin + limit);
    std::string next = end < log.size() ? std::to_string(log[end].seq) : "null";
    res.set_content("{\"records\":" + records_array(log, begin, end) + ",\"next_seq\":" + next + "}",
                    "application/json");
  }

  std::vector<LogRecord> resolve_log(const json& ref, std::string& player) {
    if (ref.contains("session")) {
      const std::string id = ref.at("session").get<std::string>();
      if (!std::regex_match(id, kNamePattern)) throw HttpError{400, "BAD_REQUEST", "bad session id"};
      Session s = store.load(id);
      player = ref.value("player", s.player.player_id.empty() ? id : s.player.player_id);
      return s.log;
    }
    if (ref.contains("path")) {
      std::filesystem::path rel = ref.at("path").get<std::string>();
      if (rel.is_absolute() || std::any_of(rel.begin(), rel.end(), [](const auto& p) { return p == ".."; })) {
        throw HttpError{400, "BAD_REQUEST", "log paths must be relative to the log root"};
      }
      player = ref.value("player", rel.stem().string());
      return read_log_file(cfg.log_root / rel);
    }
    throw HttpError{400, "BAD_REQUEST", "a log reference needs 'session' or 'path'"};
  }

  const NarrativeGraph& designer_graph(const std::string& world_name, WorldBundle& w, Provider& provider) {
    std::lock_guard lock(worlds_mutex);
    if (auto it = designer_graphs.find(world_name); it != designer_graphs.end()) return it->second;
    std::vector<std::pair<std::string, std::vector<LogRecord>>> walkthroughs;
    for (const auto& [source, path] : cfg.designer_logs) walkthroughs.emplace_back(source, read_log_file(path));
    return designer_graphs.emplace(world_name, build_designer_graph(walkthroughs, w.spec, provider)).first->second;
  }

  void create_graph(const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body);
    const std::string world_name = body.value("world", "dejaboom");
    const std::string profile_name = body.value("provider", "rule");
    if (!body.contains("logs") || !body["logs"].is_array() || body["logs"].empty()) {
      throw HttpError{422, "BAD_REQUEST", "'logs' must be a non-empty array of log references"};
    }
    const std::string id = "g" + fnv1a_hex(ojson{{"world", world_name},
                                                   {"provider", profile_name},
                                                   {"logs", body["logs"]}}
                                                 .dump());
    {
      std::lock_guard lock(graphs_mutex);
      if (graphs.contains(id)) {
        res.status = 201;
        res.set_content(ojson{{"id", id}}.dump(), "application/json");
        return;
      }
    }
    WorldBundle& w = world(world_name);
    ProviderStack stack(profile(profile_name), w.spec, w.tables, w.messages, cfg.data_dir / "prompts");
    Provider& provider = stack.provider();
    const NarrativeGraph& g0 = designer_graph(world_name, w, provider);
    std::vector<std::pair<std::string, NarrativeGraph>> players;
    for (const auto& ref : body["logs"]) {
      std::string player;
      auto log = resolve_log(ref, player);
      players.emplace_back(player, build_session_graph(log, "player", player, w.spec, provider));
    }
    CorpusAnalysis analysis = analyze_corpus(g0, players, provider);
    {
      std::lock_guard lock(graphs_mutex);
      graphs[id] = GraphResult{export_graph_json(analysis.merged), export_report_json(analysis.report)};
    }
    res.status = 201;
    res.set_content(ojson{{"id", id}}.dump(), "application/json");
  }

  const GraphResult& graph(const std::string& id) {
    std::lock_guard lock(graphs_mutex);
    auto it = graphs.find(id);
    if (it == graphs.end()) throw NotFoundError("graph " + id);
    return it->second;
  }

  // -------------------------------------------------------------------------

  template <typename F>
  httplib::Server::Handler guarded(F f) {
    return [this, f](const httplib::Request& req, httplib::Response& res) {
      auto fail = [&](int status, const std::string& code, const std::string& message) {
        res.status = status;
        res.set_content(ojson{{"error", code}, {"message", message}}.dump(), "application/json");
      };
      try {
        f(req, res);
      } catch (const HttpError& e) {
        fail(e.status, e.code, e.message);
      } catch (const json::exception& e) {
        fail(400, "BAD_REQUEST", std::string("invalid JSON body: ") + e.what());
      } catch (const NotFoundError& e) {
        fail(404, e.code(), e.what());
      } catch (const EmptyInputError& e) {
        fail(422, e.code(), e.what());
      } catch (const SessionOverError& e) {
        fail(409, e.code(), e.what());
      } catch (const ProviderError& e) {
        res.set_header("Retry-After", std::to_string(cfg.retry_after_seconds));
        fail(503, e.code(), e.what());
      } catch (const ConfigError& e) {
        fail(400, e.code(), e.what());
      } catch (const Error& e) {
        fail(422, e.code(), e.what());
      } catch (const std::exception& e) {
        fail(500, "INTERNAL", e.what());
      }
    };
  }

  void routes() {
    server.Post("/sessions", guarded([this](const auto& req, auto& res) { create_session(req, res); }));
    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/commands)",
                guarded([this](const auto& req, auto& res) { post_command(req.matches[1], req, res); }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+))",
               guarded([this](const auto& req, auto& res) { get_session(req.matches[1], res); }));
    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/log)",
               guarded([this](const auto& req, auto& res) { get_log(req.matches[1], req, res); }));
    server.Post("/analysis/graphs", guarded([this](const auto& req, auto& res) { create_graph(req, res); }));
    server.Get(R"(/analysis/graphs/([A-Za-z0-9_-]+))", guarded([this](const auto& req, auto& res) {
                 res.set_content(graph(req.matches[1]).graph_json, "application/json");
               }));
    server.Get(R"(/analysis/graphs/([A-Za-z0-9_-]+)/emergence)", guarded([this](const auto& req, auto& res) {
                 res.set_content(graph(req.matches[1]).report_json, "application/json");
               }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        res.set_content(ojson{{"error", "NOT_FOUND"}, {"message", "no such route"}}.dump(), "application/json");
      }
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void Service::serve() { impl_->server.listen_after_bind(); }
void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace dejaboom
