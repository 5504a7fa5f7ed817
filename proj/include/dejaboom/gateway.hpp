#pragma once

#include <cstddef>
#include <string>

#include "dejaboom/provider.hpp"
#include "dejaboom/rule_provider.hpp"

namespace dejaboom {

// Wraps a live provider for interactive play. A ProviderError from any
// gameplay call is answered by the rule-based provider (or a stall line),
// so a session never stops on a provider fault. With `allow_fallback`
// false the error propagates instead. Batch operations (distill, match,
// categorize) always propagate.
class FallbackProvider : public Provider {
 public:
  FallbackProvider(Provider& primary, RuleBasedProvider& fallback, bool allow_fallback = true)
      : primary_(primary), fallback_(fallback), allow_fallback_(allow_fallback) {}

  std::string name() const override { return primary_.name(); }

  Classification classify(std::string_view raw, bool at_npc) override;
  NormalizeResult normalize(std::string_view raw) override;
  std::string npc_respond(const NpcContext& context, std::string_view utterance,
                          const HistoryWindow& history) override;
  std::string game_feedback(const FeedbackRequest& request, const HistoryWindow& history) override;
  std::string rewrite_failure(std::string_view raw, const ActionResult& failure,
                              const HistoryWindow& history) override;
  std::string summarize(std::span<const Turn> turns, std::size_t max_tokens) override;
  bool judge(const Condition& condition, std::string_view utterance) override;
  std::string distill(const StrategySegment& segment) override { return primary_.distill(segment); }
  std::vector<std::size_t> match(std::string_view summary, std::span<const std::string> candidates) override {
    return primary_.match(summary, candidates);
  }
  std::string categorize(std::string_view summary) override { return primary_.categorize(summary); }

  std::size_t fallbacks() const override { return fallbacks_; }

 private:
  template <typename Primary, typename Fallback>
  auto guarded(Primary&& primary, Fallback&& fallback) -> decltype(primary());

  Provider& primary_;
  RuleBasedProvider& fallback_;
  bool allow_fallback_;
  std::size_t fallbacks_ = 0;
};

}  // namespace dejaboom
