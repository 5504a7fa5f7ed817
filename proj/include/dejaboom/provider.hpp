#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dejaboom/action.hpp"
#include "dejaboom/npc.hpp"
#include "dejaboom/npc_types.hpp"

namespace dejaboom {

enum class InputKind { Action, Words };

std::string_view to_string(InputKind kind);

struct Classification {
  InputKind kind = InputKind::Action;
  // Rule id for the rule-based provider, "model" for remote ones.
  std::string note;
};

// Either a canonical command or the unrecognized remainder of the input.
struct NormalizeResult {
  std::optional<VerbObjectCommand> command;
  std::string verb_token;
  std::optional<std::string> object_token;
  std::string raw;

  bool recognized() const { return command.has_value(); }
};

using TokenEstimator = std::function<std::size_t(std::string_view)>;

// characters / 4, rounded up
std::size_t estimate_tokens(std::string_view text);

struct HistoryWindow {
  std::vector<Turn> turns;
  std::optional<std::string> summary;

  std::size_t token_estimate(const TokenEstimator& estimator = estimate_tokens) const;
  bool operator==(const HistoryWindow&) const = default;
};

struct FeedbackRequest {
  std::string raw;
  std::string location_id;
  std::string location_description;
  // What the fixed game agent said, if the input went through it.
  std::optional<std::string> agent_response;
};

enum class SegmentMode { Enter, Talk, Act };

// A run of log turns that the distiller turns into one strategy.
struct StrategySegment {
  std::string location;
  std::string location_name;
  SegmentMode mode = SegmentMode::Act;
  std::optional<std::string> npc;  // conversation partner, or the NPC that greeted on arrival
  std::string npc_name;
  std::vector<std::string> commands;      // canonical commands of recognized actions
  std::vector<std::string> player_texts;  // raw player inputs
};

// The model-facing surface. Every operation returns a value or throws a
// typed error (ProviderError for transport faults).
class Provider {
 public:
  virtual ~Provider() = default;

  virtual std::string name() const = 0;

  virtual Classification classify(std::string_view raw, bool at_npc) = 0;
  virtual NormalizeResult normalize(std::string_view raw) = 0;
  virtual std::string npc_respond(const NpcContext& context, std::string_view utterance,
                                  const HistoryWindow& history) = 0;
  virtual std::string game_feedback(const FeedbackRequest& request, const HistoryWindow& history) = 0;
  virtual std::string rewrite_failure(std::string_view raw, const ActionResult& failure,
                                      const HistoryWindow& history) = 0;
  virtual std::string summarize(std::span<const Turn> turns, std::size_t max_tokens) = 0;
  virtual bool judge(const Condition& condition, std::string_view utterance) = 0;
  virtual std::string distill(const StrategySegment& segment) = 0;
  // Indices of candidates with the same meaning as `summary`, best first.
  virtual std::vector<std::size_t> match(std::string_view summary, std::span<const std::string> candidates) = 0;
  virtual std::string categorize(std::string_view summary) = 0;

  // Number of calls answered by a fallback path so far.
  virtual std::size_t fallbacks() const { return 0; }
};

struct SummarizePolicy {
  double high_water = 0.8;
  std::size_t keep_recent = 10;
  TokenEstimator estimator = estimate_tokens;
};

// Folds the oldest turns into a rolling summary once the window passes the
// high-water mark. The newest `keep_recent` turns are never touched.
HistoryWindow summarize_history(const HistoryWindow& history, std::size_t budget, Provider& provider,
                                const SummarizePolicy& policy = {});

}  // namespace dejaboom
