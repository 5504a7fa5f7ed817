#include "dejaboom/provider.hpp"

#include <algorithm>
#include <cmath>

namespace dejaboom {

std::string_view to_string(InputKind kind) { return kind == InputKind::Action ? "action" : "words"; }

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

namespace {

std::size_t turn_tokens(const Turn& t, const TokenEstimator& estimator) {
  return estimator(t.speaker + ": " + t.text);
}

}  // namespace

std::size_t HistoryWindow::token_estimate(const TokenEstimator& estimator) const {
  std::size_t total = summary ? estimator(*summary) : 0;
  for (const auto& t : turns) total += turn_tokens(t, estimator);
  return total;
}

HistoryWindow summarize_history(const HistoryWindow& history, std::size_t budget, Provider& provider,
                                const SummarizePolicy& policy) {
  const auto high_water = static_cast<std::size_t>(std::floor(static_cast<double>(budget) * policy.high_water));
  if (history.token_estimate(policy.estimator) <= high_water) return history;
  if (history.turns.size() <= policy.keep_recent) return history;

  const std::size_t split = history.turns.size() - policy.keep_recent;
  HistoryWindow out;
  out.turns.assign(history.turns.begin() + static_cast<std::ptrdiff_t>(split), history.turns.end());
  std::size_t recent = out.token_estimate(policy.estimator);
  std::size_t room = high_water > recent ? high_water - recent : 0;

  std::vector<Turn> older;
  if (history.summary) older.push_back(Turn{"summary", *history.summary, 0, 0});
  older.insert(older.end(), history.turns.begin(), history.turns.begin() + static_cast<std::ptrdiff_t>(split));
  if (room > 0) {
    std::string summary = provider.summarize(older, room);
    // A provider may overshoot; clip to the room we have.
    while (!summary.empty() && policy.estimator(summary) > room) {
      auto cut = summary.find_last_of(' ');
      summary.resize(cut == std::string::npos ? 0 : cut);
    }
    if (!summary.empty()) out.summary = std::move(summary);
  }
  return out;
}

}  // namespace dejaboom
