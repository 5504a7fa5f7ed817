#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dejaboom/action.hpp"
#include "dejaboom/provider.hpp"
#include "dejaboom/world.hpp"

namespace dejaboom {

struct Lexicon {
  // canonical verb -> synonym phrases, each already split into words
  std::vector<std::pair<std::string, std::vector<std::vector<std::string>>>> verbs;
  // verbs that only match when the synonym is the whole input ("i", "inventory")
  std::set<std::string> bare_verbs;
  std::set<std::string> articles;
  std::set<std::string> directions;
  std::set<std::string> question_words;
  std::set<std::string> interjections;
  std::set<std::string> speech_verbs;
  std::set<std::string> physical_verbs;
  std::set<std::string> pronouns;
  std::set<std::string> inventory_verbs;  // "put", "add" ... in inventory requests
};

// One row of the distillation phrase table. Empty constraints match anything.
struct PhraseRule {
  std::string id;
  std::optional<std::string> location;
  std::optional<std::string> npc;
  std::optional<SegmentMode> mode;
  std::vector<std::vector<std::string>> keywords;  // CNF over the segment's player text
  std::optional<std::string> verb;                 // some command uses this verb
  std::vector<std::string> only_verbs;             // every command uses one of these
  std::string summary;                             // {npc} {place} {object}
};

struct MatcherTable {
  std::set<std::string> stopwords;
  std::map<std::string, std::string> synonyms;
  // multi-word names collapsed to one token before comparison
  std::vector<std::pair<std::string, std::string>> entities;
  double threshold = 0.6;
};

struct CategoryRule {
  std::string category;
  std::vector<std::string> keywords;
};

struct RuleTables {
  Lexicon lexicon;
  std::vector<PhraseRule> phrases;
  MatcherTable matcher;
  std::vector<CategoryRule> categories;
  std::string rewrite_template = "You tried to {raw}, but nothing happened.";

  // Reads lexicon.json, phrases.json, matcher.json and categories.json.
  static RuleTables load(const std::filesystem::path& dir);
};

inline constexpr std::size_t kSummaryWordCap = 15;

SegmentMode segment_mode_from_string(std::string_view text);
std::string_view to_string(SegmentMode mode);

// Deterministic offline provider. Every answer is a function of its inputs
// and the tables.
class RuleBasedProvider : public Provider {
 public:
  struct Options {
    bool rewrite_template = true;
    std::string stall_line = "{name} seems lost in thought.";
  };

  RuleBasedProvider(const WorldSpec& spec, RuleTables tables, MessageTable messages = {});
  RuleBasedProvider(const WorldSpec& spec, RuleTables tables, MessageTable messages, Options options);

  std::string name() const override { return "rule"; }

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

  // Token set the matcher compares; exposed for tests.
  std::set<std::string> canonical_tokens(std::string_view summary) const;
  double similarity(std::string_view a, std::string_view b) const;

  std::string stall_line(std::string_view npc_name) const;
  const RuleTables& tables() const { return tables_; }

 private:
  std::optional<std::string> inventory_request_object(const std::vector<std::string>& words) const;

  const WorldSpec& spec_;
  RuleTables tables_;
  MessageTable messages_;
  Options options_;
  ActionEngine engine_;
};

}  // namespace dejaboom
