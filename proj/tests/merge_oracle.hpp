#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dejaboom/narrative.hpp"
#include "dejaboom/rule_provider.hpp"
#include "support.hpp"

namespace testing {

using namespace dejaboom;


inline const std::vector<std::string> kSummaries{
    "Ask Mrs. Thompson about the explosion",
    "Question Mrs. Thompson regarding the bomb",
    "Take water bucket at home",
    "Take the water bucket at home",
    "Solve Mad Hatter's riddle",
    "Read journal at library",
    "Defuse the bomb in storage room",
    "Hide and wait in the park",
    "Trick Moriarty into revealing information",
};
inline const std::vector<std::string> kLabels{"00", "01", "11"};

inline NarrativeGraph random_graph(testing::Rng& rng, std::size_t n, const std::string& kind, const std::string& source,
                            RuleBasedProvider* distinct = nullptr) {
  NarrativeGraph g;
  for (std::size_t i = 0; i < n; ++i) {
    StrategyNode node;
    node.id = "n" + std::to_string(i + 1);
    node.label = StateLabel::parse(rng.pick(kLabels));
    for (int attempt = 0; attempt < 50; ++attempt) {
      node.summary = rng.pick(kSummaries);
      if (!distinct) break;
      bool clash = std::any_of(g.nodes.begin(), g.nodes.end(), [&](const StrategyNode& o) {
        return o.label == node.label && distinct->similarity(o.summary, node.summary) >= 0.6;
      });
      if (!clash) break;
      node.summary = "Wander number " + std::to_string(i) + " " + source;
    }
    node.provenance.insert(Provenance{kind, source, 1 + static_cast<int>(rng.below(2))});
    g.nodes.push_back(node);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.coin(0.3)) g.edges.emplace(g.nodes[i].id, g.nodes[j].id);
    }
  }
  for (const auto& node : g.nodes) {
    bool has_in = false, has_out = false;
    for (const auto& [a, b] : g.edges) {
      has_in |= b == node.id;
      has_out |= a == node.id;
    }
    if (!has_in) g.starts.insert(node.id);
    if (!has_out) g.ends.insert(node.id);
  }
  // Positions need not follow the edges.
  for (std::size_t i = g.nodes.size(); i > 1; --i) std::swap(g.nodes[i - 1], g.nodes[rng.below(i)]);
  return g;
}

// Graph in a form that ignores the ids given to fresh nodes: a fresh node is
// keyed by the incoming node it came from.
struct Canonical {
  std::map<std::string, std::tuple<std::string, std::string, std::set<Provenance>>> nodes;
  std::set<std::pair<std::string, std::string>> edges;
  std::set<std::string> starts;
  std::set<std::string> ends;
  bool operator==(const Canonical&) const = default;
};

inline Canonical canonical(const NarrativeGraph& g, const std::function<std::string(const std::string&)>& rename) {
  Canonical c;
  for (const auto& n : g.nodes) c.nodes[rename(n.id)] = {n.summary, n.label.str(), n.provenance};
  for (const auto& [a, b] : g.edges) c.edges.emplace(rename(a), rename(b));
  for (const auto& s : g.starts) c.starts.insert(rename(s));
  for (const auto& e : g.ends) c.ends.insert(rename(e));
  return c;
}

inline bool has_cycle(const std::set<std::pair<std::string, std::string>>& edges) {
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& [a, b] : edges) adj[a].push_back(b);
  std::map<std::string, int> color;
  std::function<bool(const std::string&)> visit = [&](const std::string& u) {
    color[u] = 1;
    for (const auto& v : adj[u]) {
      if (color[v] == 1) return true;
      if (color[v] == 0 && visit(v)) return true;
    }
    color[u] = 2;
    return false;
  };
  for (const auto& [u, _] : adj) {
    if (color[u] == 0 && visit(u)) return true;
  }
  return false;
}

// Kahn's algorithm, always releasing the ready node that comes first in the
// node list.
inline std::vector<std::string> oracle_topo(const NarrativeGraph& g) {
  std::vector<std::string> order;
  std::set<std::string> placed;
  while (order.size() < g.nodes.size()) {
    for (const auto& n : g.nodes) {
      if (placed.contains(n.id)) continue;
      bool ready = std::none_of(g.edges.begin(), g.edges.end(),
                                [&](const auto& e) { return e.second == n.id && !placed.contains(e.first); });
      if (ready) {
        order.push_back(n.id);
        placed.insert(n.id);
        break;
      }
    }
  }
  return order;
}

// Brute-force merge. Every incoming node may be unified with any original
// node of equal label that the matcher scores above threshold, or kept
// fresh; unifications are one-to-one. All complete assignments are tried in
// order of preference (per node, in topological order: best score first,
// earlier position on ties, fresh last) and the first that yields a DAG is
// the answer.
inline Canonical oracle_merge(const NarrativeGraph& acc, const NarrativeGraph& in, RuleBasedProvider& matcher) {
  const double threshold = matcher.tables().matcher.threshold;
  const auto order = oracle_topo(in);
  std::vector<std::vector<std::string>> options;
  for (const auto& vid : order) {
    const StrategyNode& v = *in.find(vid);
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < acc.nodes.size(); ++i) {
      if (acc.nodes[i].label != v.label) continue;
      double s = matcher.similarity(v.summary, acc.nodes[i].summary);
      if (s >= threshold) scored.emplace_back(-s, i);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<std::string> opts;
    for (const auto& [s, i] : scored) opts.push_back(acc.nodes[i].id);
    opts.push_back("fresh:" + vid);
    options.push_back(opts);
  }

  std::vector<std::string> choice(order.size());
  std::optional<Canonical> found;
  std::set<std::string> used;
  std::function<void(std::size_t)> search = [&](std::size_t k) {
    if (found) return;
    if (k == order.size()) {
      std::map<std::string, std::string> m;
      for (std::size_t i = 0; i < order.size(); ++i) m[order[i]] = choice[i];
      std::set<std::pair<std::string, std::string>> edges = acc.edges;
      for (const auto& [a, b] : in.edges) edges.emplace(m.at(a), m.at(b));
      if (has_cycle(edges)) return;
      Canonical c = canonical(acc, [](const std::string& id) { return id; });
      c.edges = edges;
      for (const auto& vid : order) {
        const StrategyNode& v = *in.find(vid);
        const std::string& t = m.at(vid);
        if (t.starts_with("fresh:")) {
          c.nodes[t] = {v.summary, v.label.str(), v.provenance};
        } else {
          std::get<2>(c.nodes[t]).insert(v.provenance.begin(), v.provenance.end());
        }
      }
      for (const auto& s : in.starts) c.starts.insert(m.at(s));
      for (const auto& e : in.ends) c.ends.insert(m.at(e));
      found = c;
      return;
    }
    for (const auto& opt : options[k]) {
      if (!opt.starts_with("fresh:") && used.contains(opt)) continue;
      choice[k] = opt;
      used.insert(opt);
      search(k + 1);
      if (!opt.starts_with("fresh:")) used.erase(opt);
      if (found) return;
    }
  };
  search(0);
  return *found;
}

inline Canonical canonical_result(const MergeResult& r, const NarrativeGraph& acc) {
  std::map<std::string, std::string> fresh;
  for (const auto& [vid, target] : r.mapping) {
    if (!acc.find(target)) fresh[target] = "fresh:" + vid;
  }
  return canonical(r.graph, [&](const std::string& id) {
    auto it = fresh.find(id);
    return it == fresh.end() ? id : it->second;
  });
}

// One randomized merge: returns a description of the first broken
// property, or an empty string.
inline std::string merge_case_violation(std::uint64_t seed, RuleBasedProvider& p) {
  Rng rng(seed * 7919);
  const std::size_t n_acc = 1 + rng.below(7);
  const std::size_t n_in = 1 + rng.below(5);
  NarrativeGraph acc = random_graph(rng, n_acc, "designer", "d");
  NarrativeGraph in = random_graph(rng, n_in, "player", "p");
  MergeResult r = merge_graphs(acc, in, p);
  if (!r.graph.acyclic()) return "cycle";
  for (const auto& n : acc.nodes) {
    const StrategyNode* m = r.graph.find(n.id);
    if (!m || m->summary != n.summary || m->label != n.label || !m->designer() ||
        !std::includes(m->provenance.begin(), m->provenance.end(), n.provenance.begin(), n.provenance.end())) {
      return "designer node " + n.id + " not preserved";
    }
  }
  for (const auto& e : acc.edges) {
    if (!r.graph.edges.contains(e)) return "edge " + e.first + "->" + e.second + " lost";
  }
  std::set<std::string> targets;
  for (const auto& [vid, target] : r.mapping) {
    const StrategyNode& v = *in.find(vid);
    const StrategyNode* t = r.graph.find(target);
    if (!t || t->label != v.label) return "unified across labels: " + vid;
    if (!targets.insert(target).second) return "two nodes unified into " + target;
    if (acc.find(target) && p.similarity(v.summary, t->summary) < p.tables().matcher.threshold) {
      return "unified without matcher approval: " + vid;
    }
  }
  if (!(canonical_result(r, acc) == oracle_merge(acc, in, p))) return "differs from brute-force oracle";
  return "";
}

// merge(g, g) == g for a graph whose equal-label nodes are pairwise
// distinct to the matcher.
inline std::string idempotence_violation(std::uint64_t seed, RuleBasedProvider& p) {
  Rng rng(seed * 104729);
  NarrativeGraph g = random_graph(rng, 1 + rng.below(12), rng.coin() ? "designer" : "player", "g", &p);
  return merge(g, g, p) == g ? "" : "merge(g, g) != g";
}

}  // namespace testing
