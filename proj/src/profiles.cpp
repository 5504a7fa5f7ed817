#include "dejaboom/profiles.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"

namespace dejaboom {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

std::map<std::string, ProviderProfile> default_provider_profiles() {
  ProviderProfile rule;
  rule.name = "rule";
  ProviderProfile remote;
  remote.name = "remote";
  remote.kind = "remote";
  return {{"rule", rule}, {"remote", remote}};
}

std::map<std::string, ProviderProfile> parse_provider_profiles(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("provider config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("provider config must map profile names to settings");
  std::map<std::string, ProviderProfile> out;
  try {
    for (const auto& [name, p] : j.items()) {
      ProviderProfile profile;
      profile.name = name;
      profile.kind = p.value("kind", "rule");
      if (profile.kind != "rule" && profile.kind != "remote") {
        throw ConfigError("profile '" + name + "': kind must be rule or remote");
      }
      profile.endpoint = p.value("endpoint", "");
      profile.model = p.value("model", "");
      profile.api_key_env = p.value("api_key_env", profile.api_key_env);
      profile.timeout_ms = p.value("timeout_ms", profile.timeout_ms);
      profile.retries = p.value("retries", profile.retries);
      profile.fallback = p.value("fallback", profile.fallback);
      profile.rewrite_template = p.value("rewrite_template", profile.rewrite_template);
      if (profile.timeout_ms <= 0) throw ConfigError("profile '" + name + "': timeout_ms must be positive");
      if (profile.retries < 0) throw ConfigError("profile '" + name + "': retries must be >= 0");
      out[name] = std::move(profile);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("provider config: ") + e.what());
  }
  return out;
}

std::map<std::string, ProviderProfile> load_provider_profiles(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open provider config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_provider_profiles(buf.str());
}

ProviderStack::ProviderStack(const ProviderProfile& profile, const WorldSpec& spec, const RuleTables& tables,
                             const MessageTable& messages, const std::filesystem::path& prompt_dir)
    : profile_(profile) {
  RuleBasedProvider::Options opts;
  opts.rewrite_template = profile.rewrite_template;
  rule_ = std::make_unique<RuleBasedProvider>(spec, tables, messages, opts);
  Provider* primary = rule_.get();
  if (profile.kind == "remote") {
    RemoteConfig cfg;
    cfg.endpoint = profile.endpoint.empty() ? env_or("DEJABOOM_REMOTE_ENDPOINT", "") : profile.endpoint;
    cfg.model = profile.model.empty() ? env_or("DEJABOOM_REMOTE_MODEL", "") : profile.model;
    cfg.api_key = env_or(profile.api_key_env.c_str(), "");
    cfg.timeout = std::chrono::milliseconds(profile.timeout_ms);
    cfg.retries = profile.retries;
    if (cfg.endpoint.empty()) throw ConfigError("profile '" + profile.name + "' has no endpoint");
    if (cfg.model.empty()) throw ConfigError("profile '" + profile.name + "' has no model");
    remote_ = std::make_unique<RemoteProvider>(std::move(cfg), PromptSet::load(prompt_dir));
    primary = remote_.get();
  }
  gateway_ = std::make_unique<FallbackProvider>(*primary, *rule_, profile.fallback);
}

}  // namespace dejaboom
