#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>

#include "dejaboom/gateway.hpp"
#include "dejaboom/remote_provider.hpp"
#include "dejaboom/rule_provider.hpp"

namespace dejaboom {

// A named, server-side provider configuration. Secrets come from the
// environment variable named by `api_key_env`, never from requests.
struct ProviderProfile {
  std::string name;
  std::string kind = "rule";  // "rule" or "remote"
  std::string endpoint;       // DEJABOOM_REMOTE_ENDPOINT when empty
  std::string model;          // DEJABOOM_REMOTE_MODEL when empty
  std::string api_key_env = "DEJABOOM_API_KEY";
  int timeout_ms = 30000;
  int retries = 1;
  bool fallback = true;
  bool rewrite_template = true;
};

std::map<std::string, ProviderProfile> parse_provider_profiles(std::string_view document);
std::map<std::string, ProviderProfile> load_provider_profiles(const std::filesystem::path& path);
// The profiles available without a config file: "rule" and "remote".
std::map<std::string, ProviderProfile> default_provider_profiles();

// Everything one session needs to talk to a provider. Not shareable
// between sessions; the counters inside are unsynchronized.
class ProviderStack {
 public:
  // Throws ConfigError when a remote profile lacks an endpoint or model.
  ProviderStack(const ProviderProfile& profile, const WorldSpec& spec, const RuleTables& tables,
                const MessageTable& messages, const std::filesystem::path& prompt_dir);

  Provider& provider() { return *gateway_; }
  RuleBasedProvider& rule() { return *rule_; }
  const ProviderProfile& profile() const { return profile_; }

 private:
  ProviderProfile profile_;
  std::unique_ptr<RuleBasedProvider> rule_;
  std::unique_ptr<RemoteProvider> remote_;
  std::unique_ptr<FallbackProvider> gateway_;
};

}  // namespace dejaboom
