#include "dejaboom/remote_provider.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/rule_provider.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

using nlohmann::json;

namespace {

constexpr std::string_view kUserMarker = "---user---";

std::string render_template(std::string templ, const std::map<std::string, std::string>& fields) {
  for (const auto& [key, value] : fields) {
    const std::string marker = "{{" + key + "}}";
    std::size_t pos = 0;
    while ((pos = templ.find(marker, pos)) != std::string::npos) {
      templ.replace(pos, marker.size(), value);
      pos += value.size();
    }
  }
  return templ;
}

std::string strip_fences(std::string s) {
  s = text::trim(s);
  if (s.starts_with("```")) {
    auto nl = s.find('\n');
    s = nl == std::string::npos ? "" : s.substr(nl + 1);
    if (auto end = s.rfind("```"); end != std::string::npos) s.resize(end);
  }
  return text::trim(s);
}

json parse_model_json(const std::string& content) {
  try {
    return json::parse(strip_fences(content));
  } catch (const json::parse_error&) {
    throw ProviderError(ProviderFault::BadResponse, "model output is not JSON: " + content.substr(0, 80));
  }
}

std::string join_turns(const std::vector<Turn>& turns) {
  std::string out;
  for (const auto& t : turns) out += t.speaker + ": " + t.text + "\n";
  return out;
}

std::string bullet_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += "- " + i + "\n";
  return out.empty() ? "(none)\n" : out;
}

}  // namespace

std::string render_history(const HistoryWindow& history) {
  std::string out;
  if (history.summary) out += "Summary of earlier play: " + *history.summary + "\n";
  out += join_turns(history.turns);
  return out;
}

PromptSet PromptSet::load(const std::filesystem::path& dir) {
  PromptSet set;
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw ConfigError("prompt directory " + dir.string() + " not found");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string body = buf.str();
    auto pos = body.find(kUserMarker);
    if (pos == std::string::npos) throw ConfigError("prompt " + entry.path().string() + " lacks a user section");
    set.add(entry.path().stem().string(), text::trim(body.substr(0, pos)),
            text::trim(body.substr(pos + kUserMarker.size())));
  }
  return set;
}

void PromptSet::add(const std::string& op, std::string system, std::string user) {
  prompts_[op] = {std::move(system), std::move(user)};
}

std::vector<ChatMessage> PromptSet::render(const std::string& op,
                                           const std::map<std::string, std::string>& fields) const {
  auto it = prompts_.find(op);
  if (it == prompts_.end()) throw ConfigError("no prompt for operation '" + op + "'");
  return {{"system", render_template(it->second.first, fields)}, {"user", render_template(it->second.second, fields)}};
}

RemoteProvider::RemoteProvider(RemoteConfig config, PromptSet prompts)
    : config_(std::move(config)), prompts_(std::move(prompts)) {
  const std::string& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must be an http(s) URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (config_.model.empty()) throw ConfigError("remote provider needs a model id");
}

std::string RemoteProvider::chat(const std::vector<ChatMessage>& messages) {
  json body{{"model", config_.model}, {"messages", json::array()}};
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  std::optional<ProviderError> last;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff * (1 << (attempt - 1)));
    ++requests_;
    httplib::Client client(scheme_host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      auto err = res.error();
      auto fault = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                       ? ProviderFault::Timeout
                       : ProviderFault::Unavailable;
      last.emplace(fault, "provider request failed: " + httplib::to_string(err));
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last.emplace(ProviderFault::Unavailable, "provider returned HTTP " + std::to_string(res->status));
      continue;
    }
    if (res->status != 200) {
      throw ProviderError(ProviderFault::BadResponse, "provider returned HTTP " + std::to_string(res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::parse_error&) {
      throw ProviderError(ProviderFault::BadResponse, "provider reply is not JSON");
    }
    if (reply.contains("content") && reply["content"].is_string()) return reply["content"].get<std::string>();
    try {
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw ProviderError(ProviderFault::BadResponse, "provider reply has no content");
    }
  }
  throw *last;
}

std::string RemoteProvider::ask(const std::string& op, const std::map<std::string, std::string>& fields) {
  return text::trim(chat(prompts_.render(op, fields)));
}

Classification RemoteProvider::classify(std::string_view raw, bool at_npc) {
  if (text::trim(raw).empty()) throw EmptyInputError();
  std::string out = text::lower(ask("classify", {{"input", std::string(raw)}, {"at_npc", at_npc ? "yes" : "no"}}));
  if (out.find("words") != std::string::npos) return {InputKind::Words, "model"};
  if (out.find("action") != std::string::npos) return {InputKind::Action, "model"};
  throw ProviderError(ProviderFault::BadResponse, "classification must be action or words");
}

NormalizeResult RemoteProvider::normalize(std::string_view raw) {
  json j = parse_model_json(ask("normalize", {{"input", std::string(raw)},
                                              {"verbs", text::join(supported_verbs(), ", ")}}));
  NormalizeResult nr;
  nr.raw = std::string(raw);
  if (!j.is_object() || !j.contains("verb") || !j["verb"].is_string()) {
    throw ProviderError(ProviderFault::BadResponse, "normalize output needs a verb");
  }
  nr.verb_token = text::lower(j["verb"].get<std::string>());
  if (j.contains("object") && j["object"].is_string() && !j["object"].get<std::string>().empty()) {
    nr.object_token = j["object"].get<std::string>();
  }
  if (is_supported_verb(nr.verb_token)) nr.command = VerbObjectCommand{nr.verb_token, nr.object_token, nr.raw};
  return nr;
}

std::string RemoteProvider::npc_respond(const NpcContext& ctx, std::string_view utterance,
                                        const HistoryWindow& history) {
  return ask("npc", {{"name", ctx.name},
                     {"persona", ctx.persona},
                     {"backstory", ctx.backstory},
                     {"goal", ctx.goal_prompt},
                     {"condition", ctx.unmet_condition.empty() ? "(none)" : ctx.unmet_condition},
                     {"clues", bullet_list(ctx.clues)},
                     {"conversation", join_turns(ctx.conversation)},
                     {"history", render_history(history)},
                     {"situation", ctx.arrival        ? "The player has just arrived."
                                   : ctx.action_failed ? "The player attempted something that did not work."
                                   : ctx.condition_met ? "The player has just satisfied your condition."
                                                       : "The player is talking to you."},
                     {"utterance", std::string(utterance)}});
}

std::string RemoteProvider::game_feedback(const FeedbackRequest& request, const HistoryWindow& history) {
  return ask("feedback", {{"input", request.raw},
                          {"location", request.location_description},
                          {"agent", request.agent_response.value_or("(none)")},
                          {"history", render_history(history)}});
}

std::string RemoteProvider::rewrite_failure(std::string_view raw, const ActionResult& failure,
                                            const HistoryWindow& history) {
  return ask("rewrite", {{"input", std::string(raw)},
                         {"failure", failure.message},
                         {"code", std::string(to_string(failure.failure_code.value_or(FailureCode::UnknownVerb)))},
                         {"history", render_history(history)}});
}

std::string RemoteProvider::summarize(std::span<const Turn> turns, std::size_t max_tokens) {
  return ask("summarize", {{"turns", join_turns({turns.begin(), turns.end()})},
                           {"max_tokens", std::to_string(max_tokens)}});
}

bool RemoteProvider::judge(const Condition& condition, std::string_view utterance) {
  std::string out = text::lower(ask("judge", {{"instruction", condition.judge_instruction},
                                              {"utterance", std::string(utterance)}}));
  if (out.starts_with("yes") || out.starts_with("true")) return true;
  if (out.starts_with("no") || out.starts_with("false")) return false;
  throw ProviderError(ProviderFault::BadResponse, "judge must answer yes or no");
}

std::string RemoteProvider::distill(const StrategySegment& segment) {
  std::string out = ask("distill", {{"location", segment.location_name},
                                    {"npc", segment.npc_name.empty() ? "(none)" : segment.npc_name},
                                    {"mode", std::string(to_string(segment.mode))},
                                    {"commands", bullet_list(segment.commands)},
                                    {"inputs", bullet_list(segment.player_texts)}});
  out = text::cap_words(out, kSummaryWordCap);
  while (!out.empty() && (out.back() == '.' || out.back() == '"')) out.pop_back();
  if (out.empty()) throw ProviderError(ProviderFault::BadResponse, "empty strategy summary");
  return out;
}

std::vector<std::size_t> RemoteProvider::match(std::string_view summary, std::span<const std::string> candidates) {
  if (candidates.empty()) return {};
  std::string list;
  for (std::size_t i = 0; i < candidates.size(); ++i) list += std::to_string(i) + ". " + candidates[i] + "\n";
  json j = parse_model_json(ask("match", {{"summary", std::string(summary)}, {"candidates", list}}));
  if (!j.is_array()) throw ProviderError(ProviderFault::BadResponse, "match output must be a JSON array");
  std::vector<std::size_t> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) continue;
    auto i = v.get<long long>();
    if (i >= 0 && static_cast<std::size_t>(i) < candidates.size() &&
        std::find(out.begin(), out.end(), static_cast<std::size_t>(i)) == out.end()) {
      out.push_back(static_cast<std::size_t>(i));
    }
  }
  return out;
}

std::string RemoteProvider::categorize(std::string_view summary) {
  static const std::vector<std::string> kCategories{"extracting-information-from-npcs", "new-entity-suggestions",
                                                    "creative-hidden-information", "new-defuse-methods", "other"};
  std::string out = text::lower(ask("categorize", {{"summary", std::string(summary)}}));
  for (const auto& c : kCategories) {
    if (out.find(c) != std::string::npos) return c;
  }
  return "other";
}

}  // namespace dejaboom
