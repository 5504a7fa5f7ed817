#include "dejaboom/gateway.hpp"

#include "dejaboom/error.hpp"

namespace dejaboom {

template <typename Primary, typename Fallback>
auto FallbackProvider::guarded(Primary&& primary, Fallback&& fallback) -> decltype(primary()) {
  try {
    return primary();
  } catch (const ProviderError&) {
    if (!allow_fallback_) throw;
    ++fallbacks_;
    return fallback();
  }
}

Classification FallbackProvider::classify(std::string_view raw, bool at_npc) {
  return guarded([&] { return primary_.classify(raw, at_npc); }, [&] { return fallback_.classify(raw, at_npc); });
}

NormalizeResult FallbackProvider::normalize(std::string_view raw) {
  return guarded([&] { return primary_.normalize(raw); }, [&] { return fallback_.normalize(raw); });
}

std::string FallbackProvider::npc_respond(const NpcContext& context, std::string_view utterance,
                                          const HistoryWindow& history) {
  return guarded([&] { return primary_.npc_respond(context, utterance, history); },
                 [&] { return fallback_.stall_line(context.name); });
}

std::string FallbackProvider::game_feedback(const FeedbackRequest& request, const HistoryWindow& history) {
  return guarded([&] { return primary_.game_feedback(request, history); },
                 [&] { return request.agent_response.value_or(request.location_description); });
}

std::string FallbackProvider::rewrite_failure(std::string_view raw, const ActionResult& failure,
                                              const HistoryWindow& history) {
  return guarded([&] { return primary_.rewrite_failure(raw, failure, history); },
                 [&] { return failure.message; });
}

std::string FallbackProvider::summarize(std::span<const Turn> turns, std::size_t max_tokens) {
  return guarded([&] { return primary_.summarize(turns, max_tokens); },
                 [&] { return fallback_.summarize(turns, max_tokens); });
}

bool FallbackProvider::judge(const Condition& condition, std::string_view utterance) {
  return guarded([&] { return primary_.judge(condition, utterance); },
                 [&] { return fallback_.judge(condition, utterance); });
}

}  // namespace dejaboom
