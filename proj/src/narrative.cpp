#include "dejaboom/narrative.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

bool StrategyNode::designer() const {
  return std::any_of(provenance.begin(), provenance.end(), [](const auto& p) { return p.kind == "designer"; });
}

const StrategyNode* NarrativeGraph::find(std::string_view id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

StrategyNode* NarrativeGraph::find(std::string_view id) {
  for (auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

bool NarrativeGraph::reaches(const std::string& from, const std::string& to) const {
  if (from == to) return true;
  std::set<std::string> seen{from};
  std::deque<std::string> queue{from};
  while (!queue.empty()) {
    std::string cur = queue.front();
    queue.pop_front();
    for (auto it = edges.lower_bound({cur, ""}); it != edges.end() && it->first == cur; ++it) {
      if (it->second == to) return true;
      if (seen.insert(it->second).second) queue.push_back(it->second);
    }
  }
  return false;
}

std::vector<std::string> NarrativeGraph::topological_order() const {
  std::map<std::string, std::size_t> indegree;
  for (const auto& n : nodes) indegree[n.id] = 0;
  for (const auto& [a, b] : edges) indegree[b] += 1;
  std::vector<std::string> order;
  std::vector<bool> done(nodes.size(), false);
  while (order.size() < nodes.size()) {
    bool progressed = false;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (done[i] || indegree[nodes[i].id] != 0) continue;
      done[i] = true;
      order.push_back(nodes[i].id);
      for (auto it = edges.lower_bound({nodes[i].id, ""}); it != edges.end() && it->first == nodes[i].id; ++it) {
        indegree[it->second] -= 1;
      }
      progressed = true;
      break;
    }
    if (!progressed) break;  // cycle
  }
  return order;
}

bool NarrativeGraph::acyclic() const { return topological_order().size() == nodes.size(); }

void NarrativeGraph::validate() const {
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (n.id.empty()) throw GraphError("node with empty id");
    if (!ids.insert(n.id).second) throw GraphError("duplicate node id " + n.id);
    if (text::trim(n.summary).empty()) throw GraphError("node " + n.id + " has an empty summary");
    if (n.provenance.empty()) throw GraphError("node " + n.id + " has no provenance");
  }
  for (const auto& [a, b] : edges) {
    if (!ids.contains(a) || !ids.contains(b)) throw GraphError("edge " + a + "->" + b + " has a missing endpoint");
  }
  for (const auto& s : starts) {
    if (!ids.contains(s)) throw GraphError("start node " + s + " does not exist");
  }
  for (const auto& e : ends) {
    if (!ids.contains(e)) throw GraphError("end node " + e + " does not exist");
  }
  if (!acyclic()) throw GraphError("graph has a cycle");
}

// ---------------------------------------------------------------------------
// Segmentation and distillation

namespace {

struct TurnView {
  const LogRecord* player = nullptr;
  std::vector<const LogRecord*> responses;
};

std::optional<std::string> npc_of(const TurnView& t) {
  for (const auto* r : t.responses) {
    if (r->role.starts_with("npc:")) return r->role.substr(4);
  }
  return std::nullopt;
}

}  // namespace

std::vector<LabeledSegment> segment_day(const DaySegment& day, const WorldSpec& spec) {
  std::vector<TurnView> turns;
  std::string prev_location;
  for (const auto& r : day.records) {
    if (r.role == "player") {
      turns.push_back(TurnView{&r, {}});
    } else if (!turns.empty()) {
      turns.back().responses.push_back(&r);
    } else {
      prev_location = r.location;
    }
  }
  if (prev_location.empty() && !turns.empty()) prev_location = spec.start_location;

  struct Open {
    LabeledSegment seg;
    std::optional<SegmentMode> mode;
  };
  std::vector<LabeledSegment> out;
  std::optional<Open> cur;

  auto close = [&] {
    if (!cur) return;
    if (cur->mode) {
      cur->seg.segment.mode = *cur->mode;
      out.push_back(std::move(cur->seg));
    } else if (cur->seg.segment.npc) {
      cur->seg.segment.mode = SegmentMode::Enter;
      out.push_back(std::move(cur->seg));
    }
    cur.reset();
  };

  for (const auto& t : turns) {
    const std::string& loc = t.player->location;
    const auto npc = npc_of(t);
    const bool entered = loc != prev_location;
    prev_location = loc;
    SegmentMode mode = entered ? SegmentMode::Enter : npc ? SegmentMode::Talk : SegmentMode::Act;

    bool fresh = !cur || cur->seg.segment.location != loc ||
                 (mode != SegmentMode::Enter && cur->mode && *cur->mode != mode);
    if (fresh) {
      close();
      cur.emplace();
      cur->seg.segment.location = loc;
      const Location* l = spec.find_location(loc);
      cur->seg.segment.location_name = l ? l->name : loc;
    }
    StrategySegment& seg = cur->seg.segment;
    seg.player_texts.push_back(t.player->text);
    if (t.player->classification == "action" && t.player->canonical_command) {
      seg.commands.push_back(*t.player->canonical_command);
    }
    if (npc && (mode == SegmentMode::Talk || mode == SegmentMode::Enter)) {
      seg.npc = *npc;
      const NpcSpec* def = spec.find_npc(*npc);
      seg.npc_name = def ? def->name : *npc;
    }
    if (mode != SegmentMode::Enter) cur->mode = mode;
    cur->seg.seqs.push_back(t.player->seq);
    const LogRecord* last = t.responses.empty() ? t.player : t.responses.back();
    for (const auto* r : t.responses) cur->seg.seqs.push_back(r->seq);
    cur->seg.label = last->state_label_after;
  }
  close();
  return out;
}

std::vector<Strategy> distill_day(const DaySegment& day, const WorldSpec& spec, Provider& provider) {
  bool has_turn = std::any_of(day.records.begin(), day.records.end(), [](const auto& r) { return r.role == "player"; });
  if (!has_turn) throw GraphError("day " + std::to_string(day.day) + " has no player turns to distill");
  std::vector<Strategy> out;
  for (const auto& seg : segment_day(day, spec)) {
    std::string summary = text::trim(provider.distill(seg.segment));
    out.push_back(Strategy{summary, seg.label});
  }
  return out;
}

NarrativeGraph build_path_graph(const std::vector<Strategy>& strategies, const Provenance& source) {
  if (strategies.empty()) throw GraphError("cannot build a path graph from no strategies");
  NarrativeGraph g;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const Strategy& s = strategies[i];
    if (text::trim(s.summary).empty()) throw GraphError("strategy " + std::to_string(i + 1) + " has no summary");
    if (i > 0) {
      const StateLabel& prev = strategies[i - 1].label;
      if (prev.size() != s.label.size() || !s.label.dominates(prev)) {
        throw GraphError("strategy labels lose a milestone between " + prev.str() + " and " + s.label.str());
      }
    }
    g.nodes.push_back(StrategyNode{"n" + std::to_string(i + 1), s.summary, s.label, {source}});
    if (i > 0) g.edges.emplace(g.nodes[i - 1].id, g.nodes[i].id);
  }
  g.starts.insert(g.nodes.front().id);
  g.ends.insert(g.nodes.back().id);
  return g;
}

// ---------------------------------------------------------------------------
// Merge

namespace {

std::string fresh_id(const NarrativeGraph& g, std::size_t& counter) {
  std::string id;
  do {
    id = "n" + std::to_string(++counter);
  } while (g.find(id));
  return id;
}

}  // namespace

MergeResult merge_graphs(const NarrativeGraph& accumulated, const NarrativeGraph& incoming, Provider& matcher) {
  accumulated.validate();
  incoming.validate();
  MergeResult result;
  NarrativeGraph& g = result.graph;
  g = accumulated;
  const std::string evaluator = matcher.name() == "rule" ? "rule_based" : "model";
  const std::size_t original = accumulated.nodes.size();
  std::size_t counter = g.nodes.size();
  std::set<std::string> taken;

  std::map<std::string, std::vector<std::string>> preds;
  for (const auto& [a, b] : incoming.edges) preds[b].push_back(a);

  for (const auto& vid : incoming.topological_order()) {
    const StrategyNode& v = *incoming.find(vid);
    std::vector<std::size_t> pool;
    std::vector<std::string> summaries;
    for (std::size_t i = 0; i < original; ++i) {
      const StrategyNode& c = g.nodes[i];
      if (c.label == v.label && !taken.contains(c.id)) {
        pool.push_back(i);
        summaries.push_back(c.summary);
      }
    }
    std::vector<std::size_t> ranked = pool.empty() ? std::vector<std::size_t>{} : matcher.match(v.summary, summaries);
    std::set<std::size_t> approved(ranked.begin(), ranked.end());
    std::vector<NodeMatch> verdicts;
    for (std::size_t k = 0; k < pool.size(); ++k) {
      const StrategyNode& c = g.nodes[pool[k]];
      verdicts.push_back(NodeMatch{v.id, c.id, v.label, c.label, approved.contains(k), evaluator, false, false});
    }

    std::optional<std::size_t> chosen;
    for (std::size_t k : ranked) {
      const std::string& cid = g.nodes[pool[k]].id;
      bool cycle = false;
      for (const auto& p : preds[vid]) {
        if (g.reaches(cid, result.mapping.at(p))) cycle = true;
      }
      if (cycle) {
        verdicts[k].rejected_for_cycle = true;
        continue;
      }
      chosen = pool[k];
      verdicts[k].unified = true;
      break;
    }

    std::string target;
    if (chosen) {
      StrategyNode& c = g.nodes[*chosen];
      c.provenance.insert(v.provenance.begin(), v.provenance.end());
      target = c.id;
      taken.insert(target);
    } else {
      target = fresh_id(g, counter);
      g.nodes.push_back(StrategyNode{target, v.summary, v.label, v.provenance});
    }
    result.mapping[vid] = target;
    for (const auto& p : preds[vid]) g.edges.emplace(result.mapping.at(p), target);
    result.audit.insert(result.audit.end(), verdicts.begin(), verdicts.end());
  }
  for (const auto& s : incoming.starts) g.starts.insert(result.mapping.at(s));
  for (const auto& e : incoming.ends) g.ends.insert(result.mapping.at(e));
  if (!g.acyclic()) throw GraphError("merge produced a cycle");
  return result;
}

NarrativeGraph merge(const NarrativeGraph& accumulated, const NarrativeGraph& incoming, Provider& matcher) {
  return merge_graphs(accumulated, incoming, matcher).graph;
}

NarrativeGraph build_session_graph(const std::vector<LogRecord>& log, const std::string& kind,
                                   const std::string& source, const WorldSpec& spec, Provider& provider) {
  std::optional<NarrativeGraph> g;
  for (const auto& day : split_days(log)) {
    bool has_turn =
        std::any_of(day.records.begin(), day.records.end(), [](const auto& r) { return r.role == "player"; });
    if (!has_turn) continue;
    auto strategies = distill_day(day, spec, provider);
    if (strategies.empty()) continue;
    NarrativeGraph path = build_path_graph(strategies, Provenance{kind, source, day.day});
    g = g ? merge(*g, path, provider) : path;
  }
  if (!g) throw GraphError("log of " + source + " yields no strategies");
  return *g;
}

NarrativeGraph build_designer_graph(const std::vector<std::pair<std::string, std::vector<LogRecord>>>& walkthroughs,
                                    const WorldSpec& spec, Provider& provider) {
  if (walkthroughs.empty()) throw GraphError("the designer graph needs at least one walkthrough");
  std::optional<NarrativeGraph> g0;
  for (const auto& [source, log] : walkthroughs) {
    NarrativeGraph g = build_session_graph(log, "designer", source, spec, provider);
    g0 = g0 ? merge(*g0, g, provider) : g;
  }
  return *g0;
}

// ---------------------------------------------------------------------------
// Emergence

std::vector<std::string> emergent_ids(const NarrativeGraph& graph) {
  std::vector<std::string> out;
  for (const auto& n : graph.nodes) {
    if (!n.designer()) out.push_back(n.id);
  }
  return out;
}

std::vector<std::pair<std::string, bool>> categorize(const std::vector<std::string>& summaries, Provider& provider) {
  std::vector<std::pair<std::string, bool>> out;
  for (const auto& s : summaries) {
    try {
      out.emplace_back(provider.categorize(s), false);
    } catch (const ProviderError&) {
      out.emplace_back("other", true);
    }
  }
  return out;
}

namespace {

std::vector<EmergentNode> collect_emergent(const NarrativeGraph& g, Provider& provider) {
  std::vector<EmergentNode> out;
  std::vector<std::string> summaries;
  for (const auto& n : g.nodes) {
    if (n.designer()) continue;
    EmergentNode e{n.id, n.summary, n.label, "other", false, {}};
    for (const auto& p : n.provenance) {
      if (std::find(e.sources.begin(), e.sources.end(), p.source) == e.sources.end()) e.sources.push_back(p.source);
    }
    out.push_back(std::move(e));
    summaries.push_back(n.summary);
  }
  auto cats = categorize(summaries, provider);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].category = cats[i].first;
    out[i].category_flagged = cats[i].second;
  }
  return out;
}

}  // namespace

EmergenceReport find_emergent(const NarrativeGraph& designer, const NarrativeGraph& player, Provider& matcher,
                              const std::string& player_id) {
  NarrativeGraph gi = merge(designer, player, matcher);
  EmergenceReport report;
  report.emergent = collect_emergent(gi, matcher);
  report.per_player[player_id] = report.emergent.size();
  report.total = report.emergent.size();
  report.unique = report.emergent.size();
  for (const auto& e : report.emergent) report.categories[e.category] += 1;
  return report;
}

CorpusAnalysis analyze_corpus(const NarrativeGraph& designer,
                              const std::vector<std::pair<std::string, NarrativeGraph>>& players, Provider& provider) {
  CorpusAnalysis out;
  out.merged = designer;
  for (const auto& [id, g] : players) {
    NarrativeGraph gi = merge(designer, g, provider);
    std::size_t n = emergent_ids(gi).size();
    out.report.per_player[id] = n;
    out.report.total += n;
    out.merged = merge(out.merged, g, provider);
  }
  out.report.emergent = collect_emergent(out.merged, provider);
  out.report.unique = out.report.emergent.size();
  for (const auto& e : out.report.emergent) out.report.categories[e.category] += 1;
  return out;
}

// ---------------------------------------------------------------------------
// Import / export

std::string export_graph_json(const NarrativeGraph& graph) {
  ojson j;
  ojson nodes = ojson::array();
  for (const auto& n : graph.nodes) {
    ojson prov = ojson::array();
    for (const auto& p : n.provenance) prov.push_back(ojson{{"kind", p.kind}, {"source", p.source}, {"day", p.day}});
    nodes.push_back(ojson{{"id", n.id},
                          {"summary", n.summary},
                          {"state_label", n.label.str()},
                          {"emergent", !n.designer()},
                          {"provenance", prov}});
  }
  j["nodes"] = nodes;
  ojson edges = ojson::array();
  for (const auto& [a, b] : graph.edges) edges.push_back(ojson{{"from", a}, {"to", b}});
  j["edges"] = edges;
  j["starts"] = graph.starts;
  j["ends"] = graph.ends;
  return j.dump(2);
}

NarrativeGraph import_graph_json(std::string_view document) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw GraphParseError(std::string("graph document is not JSON: ") + e.what());
  }
  NarrativeGraph g;
  try {
    for (const auto& n : j.at("nodes")) {
      StrategyNode node;
      node.id = n.at("id").get<std::string>();
      node.summary = n.at("summary").get<std::string>();
      node.label = StateLabel::parse(n.at("state_label").get<std::string>());
      for (const auto& p : n.at("provenance")) {
        node.provenance.insert(
            Provenance{p.at("kind").get<std::string>(), p.at("source").get<std::string>(), p.at("day").get<int>()});
      }
      g.nodes.push_back(std::move(node));
    }
    for (const auto& e : j.at("edges")) g.edges.emplace(e.at("from").get<std::string>(), e.at("to").get<std::string>());
    for (const auto& s : j.at("starts")) g.starts.insert(s.get<std::string>());
    for (const auto& s : j.at("ends")) g.ends.insert(s.get<std::string>());
  } catch (const json::exception& e) {
    throw GraphParseError(std::string("graph document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw GraphParseError(std::string("graph document: ") + e.what());
  }
  try {
    g.validate();
  } catch (const GraphError& e) {
    throw GraphParseError(e.what());
  }
  return g;
}

namespace {

std::string dot_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string export_graph_dot(const NarrativeGraph& graph) {
  std::ostringstream out;
  out << "digraph narrative {\n  rankdir=LR;\n  node [shape=box, style=\"rounded,filled\"];\n";
  for (const auto& n : graph.nodes) {
    const bool emergent = !n.designer();
    out << "  \"" << dot_escape(n.id) << "\" [label=\"" << dot_escape(n.summary) << "\\n" << n.label.str()
        << "\", emergent=" << (emergent ? "true" : "false") << ", fillcolor=\""
        << (emergent ? "palegreen" : "lightblue") << "\"];\n";
  }
  for (const auto& [a, b] : graph.edges) out << "  \"" << dot_escape(a) << "\" -> \"" << dot_escape(b) << "\";\n";
  out << "}\n";
  return out.str();
}

std::string export_report_json(const EmergenceReport& report) {
  ojson j;
  ojson nodes = ojson::array();
  for (const auto& e : report.emergent) {
    ojson n{{"id", e.id}, {"summary", e.summary}, {"state_label", e.label.str()}, {"category", e.category}};
    if (e.category_flagged) n["category_flagged"] = true;
    n["sources"] = e.sources;
    nodes.push_back(n);
  }
  j["emergent"] = nodes;
  j["per_player"] = report.per_player;
  j["total"] = report.total;
  j["unique"] = report.unique;
  j["categories"] = report.categories;
  return j.dump(2);
}

}  // namespace dejaboom
