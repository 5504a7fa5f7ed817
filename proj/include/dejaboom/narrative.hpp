#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dejaboom/provider.hpp"
#include "dejaboom/session.hpp"
#include "dejaboom/world.hpp"

namespace dejaboom {

struct Provenance {
  std::string kind;  // "designer" or "player"
  std::string source;
  int day = 1;

  auto operator<=>(const Provenance&) const = default;
  bool operator==(const Provenance&) const = default;
};

struct StrategyNode {
  std::string id;
  std::string summary;
  StateLabel label;
  std::set<Provenance> provenance;

  bool designer() const;
  bool operator==(const StrategyNode&) const = default;
};

struct NarrativeGraph {
  std::vector<StrategyNode> nodes;
  std::set<std::pair<std::string, std::string>> edges;
  std::set<std::string> starts;
  std::set<std::string> ends;

  const StrategyNode* find(std::string_view id) const;
  StrategyNode* find(std::string_view id);
  bool reaches(const std::string& from, const std::string& to) const;
  bool acyclic() const;
  // Node ids in topological order, ties broken by position in `nodes`.
  std::vector<std::string> topological_order() const;
  // Throws GraphError if an invariant is broken.
  void validate() const;

  bool operator==(const NarrativeGraph&) const = default;
};

struct Strategy {
  std::string summary;
  StateLabel label;

  bool operator==(const Strategy&) const = default;
};

// A segment of a day before distillation, with the label of its last record.
struct LabeledSegment {
  StrategySegment segment;
  StateLabel label;
  std::vector<std::uint64_t> seqs;
};

// Splits a day at location changes and talk/act switches. Arrival-only
// segments are dropped unless an NPC greeted the player.
std::vector<LabeledSegment> segment_day(const DaySegment& day, const WorldSpec& spec);

// Throws GraphError when the day has no player turns.
std::vector<Strategy> distill_day(const DaySegment& day, const WorldSpec& spec, Provider& provider);

// Throws GraphError on empty input or labels that lose a milestone.
NarrativeGraph build_path_graph(const std::vector<Strategy>& strategies, const Provenance& source);

struct NodeMatch {
  std::string incoming;
  std::string candidate;
  StateLabel incoming_label;
  StateLabel candidate_label;
  bool same = false;
  std::string evaluator;  // "rule_based" or "model"
  bool unified = false;
  bool rejected_for_cycle = false;
};

struct MergeResult {
  NarrativeGraph graph;
  std::vector<NodeMatch> audit;
  std::map<std::string, std::string> mapping;  // incoming id -> result id
};

// Walks `incoming` in topological order. Each node is unified with the best
// matcher-approved node of `accumulated` that has the same label, is not
// already taken by another incoming node, and closes no cycle; otherwise it
// becomes a fresh node.
MergeResult merge_graphs(const NarrativeGraph& accumulated, const NarrativeGraph& incoming, Provider& matcher);
NarrativeGraph merge(const NarrativeGraph& accumulated, const NarrativeGraph& incoming, Provider& matcher);

// Distills every day of one log and merges the day paths in order.
NarrativeGraph build_session_graph(const std::vector<LogRecord>& log, const std::string& kind,
                                   const std::string& source, const WorldSpec& spec, Provider& provider);

NarrativeGraph build_designer_graph(const std::vector<std::pair<std::string, std::vector<LogRecord>>>& walkthroughs,
                                    const WorldSpec& spec, Provider& provider);

struct EmergentNode {
  std::string id;
  std::string summary;
  StateLabel label;
  std::string category = "other";
  bool category_flagged = false;  // categorizer failed
  std::vector<std::string> sources;

  bool operator==(const EmergentNode&) const = default;
};

struct EmergenceReport {
  std::vector<EmergentNode> emergent;
  std::map<std::string, std::size_t> per_player;
  std::size_t total = 0;
  std::size_t unique = 0;
  std::map<std::string, std::size_t> categories;

  bool operator==(const EmergenceReport&) const = default;
};

std::vector<std::string> emergent_ids(const NarrativeGraph& graph);

// Merges one player graph into G0 and reports its emergent nodes.
EmergenceReport find_emergent(const NarrativeGraph& designer, const NarrativeGraph& player, Provider& matcher,
                              const std::string& player_id = "player");

struct CorpusAnalysis {
  NarrativeGraph merged;  // G0 merged with every player graph, in order
  EmergenceReport report;
};

CorpusAnalysis analyze_corpus(const NarrativeGraph& designer,
                              const std::vector<std::pair<std::string, NarrativeGraph>>& players, Provider& provider);

// One category per summary; a provider failure yields "other", flagged.
std::vector<std::pair<std::string, bool>> categorize(const std::vector<std::string>& summaries, Provider& provider);

std::string export_graph_json(const NarrativeGraph& graph);
NarrativeGraph import_graph_json(std::string_view document);  // throws GraphParseError
std::string export_graph_dot(const NarrativeGraph& graph);
std::string export_report_json(const EmergenceReport& report);

}  // namespace dejaboom
