#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dejaboom/provider.hpp"

namespace dejaboom {

struct ChatMessage {
  std::string role;
  std::string content;
};

// Prompt assets: one file per operation, "<system>\n---user---\n<user>",
// with {{name}} placeholders.
class PromptSet {
 public:
  static PromptSet load(const std::filesystem::path& dir);
  void add(const std::string& op, std::string system, std::string user);
  std::vector<ChatMessage> render(const std::string& op, const std::map<std::string, std::string>& fields) const;
  bool contains(const std::string& op) const { return prompts_.contains(op); }

 private:
  std::map<std::string, std::pair<std::string, std::string>> prompts_;
};

struct RemoteConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string api_key;
  std::string model;
  std::chrono::milliseconds timeout{30000};
  int retries = 1;
  std::chrono::milliseconds backoff{250};
};

// Chat-completion client. Posts {model, messages} and accepts either
// {"content": ...} or an OpenAI-style {"choices":[{"message":{"content":...}}]}.
class RemoteProvider : public Provider {
 public:
  RemoteProvider(RemoteConfig config, PromptSet prompts);

  std::string name() const override { return "remote:" + config_.model; }

  Classification classify(std::string_view raw, bool at_npc) override;
  NormalizeResult normalize(std::string_view raw) override;
  std::string npc_respond(const NpcContext& context, std::string_view utterance,
                          const HistoryWindow& history) override;
  std::string game_feedback(const FeedbackRequest& request, const HistoryWindow& history) override;
  std::string rewrite_failure(std::string_view raw, const ActionResult& failure,
                              const HistoryWindow& history) override;
  std::string summarize(std::span<const Turn> turns, std::size_t max_tokens) override;
  bool judge(const Condition& condition, std::string_view utterance) override;
  std::string distill(const StrategySegment& segment) override;
  std::vector<std::size_t> match(std::string_view summary, std::span<const std::string> candidates) override;
  std::string categorize(std::string_view summary) override;

  // One request with retries; throws ProviderError.
  std::string chat(const std::vector<ChatMessage>& messages);
  std::size_t requests() const { return requests_; }

 private:
  std::string ask(const std::string& op, const std::map<std::string, std::string>& fields);

  RemoteConfig config_;
  PromptSet prompts_;
  std::string scheme_host_;
  std::string path_;
  std::size_t requests_ = 0;
};

std::string render_history(const HistoryWindow& history);

}  // namespace dejaboom
