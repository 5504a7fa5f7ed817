#include "dejaboom/rule_provider.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dejaboom/error.hpp"
#include "dejaboom/npc.hpp"
#include "dejaboom/text.hpp"

namespace dejaboom {

using nlohmann::json;

SegmentMode segment_mode_from_string(std::string_view text) {
  if (text == "enter") return SegmentMode::Enter;
  if (text == "talk") return SegmentMode::Talk;
  if (text == "act") return SegmentMode::Act;
  throw ConfigError("unknown segment mode '" + std::string(text) + "'");
}

std::string_view to_string(SegmentMode mode) {
  switch (mode) {
    case SegmentMode::Enter:
      return "enter";
    case SegmentMode::Talk:
      return "talk";
    case SegmentMode::Act:
      return "act";
  }
  return "act";
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open rule table " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.filename().string() + ": " + e.what());
  }
}

std::set<std::string> word_set(const json& j, const char* key) {
  std::set<std::string> out;
  if (j.contains(key)) {
    for (const auto& w : j.at(key)) out.insert(w.get<std::string>());
  }
  return out;
}

std::vector<std::vector<std::string>> cnf(const json& j) {
  std::vector<std::vector<std::string>> out;
  for (const auto& group : j) out.push_back(group.get<std::vector<std::string>>());
  return out;
}

std::string strip_trailing_punct(std::string s) {
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back()))) s.pop_back();
  return s;
}

std::string first_word(const std::string& command) { return command.substr(0, command.find(' ')); }

std::string stem(const std::string& w) {
  if (w.size() > 3 && w.back() == 's' && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is")) {
    return w.substr(0, w.size() - 1);
  }
  return w;
}

}  // namespace

RuleTables RuleTables::load(const std::filesystem::path& dir) {
  RuleTables t;
  try {
    json lex = read_json(dir / "lexicon.json");
    for (const auto& [verb, syns] : lex.at("verbs").items()) {
      std::vector<std::vector<std::string>> phrases;
      for (const auto& s : syns) phrases.push_back(text::words(s.get<std::string>()));
      t.lexicon.verbs.emplace_back(verb, std::move(phrases));
    }
    t.lexicon.bare_verbs = word_set(lex, "bare_verbs");
    t.lexicon.articles = word_set(lex, "articles");
    t.lexicon.directions = word_set(lex, "directions");
    t.lexicon.question_words = word_set(lex, "question_words");
    t.lexicon.interjections = word_set(lex, "interjections");
    t.lexicon.speech_verbs = word_set(lex, "speech_verbs");
    t.lexicon.physical_verbs = word_set(lex, "physical_verbs");
    t.lexicon.pronouns = word_set(lex, "pronouns");
    t.lexicon.inventory_verbs = word_set(lex, "inventory_verbs");
    if (lex.contains("rewrite_template")) t.rewrite_template = lex.at("rewrite_template").get<std::string>();

    for (const auto& r : read_json(dir / "phrases.json")) {
      PhraseRule rule;
      rule.id = r.at("id").get<std::string>();
      if (r.contains("location")) rule.location = r.at("location").get<std::string>();
      if (r.contains("npc")) rule.npc = r.at("npc").get<std::string>();
      if (r.contains("mode")) rule.mode = segment_mode_from_string(r.at("mode").get<std::string>());
      if (r.contains("keywords")) rule.keywords = cnf(r.at("keywords"));
      if (r.contains("verb")) rule.verb = r.at("verb").get<std::string>();
      if (r.contains("only_verbs")) rule.only_verbs = r.at("only_verbs").get<std::vector<std::string>>();
      rule.summary = r.at("summary").get<std::string>();
      t.phrases.push_back(std::move(rule));
    }

    json m = read_json(dir / "matcher.json");
    t.matcher.threshold = m.value("threshold", 0.6);
    t.matcher.stopwords = word_set(m, "stopwords");
    for (const auto& [k, v] : m.at("synonyms").items()) t.matcher.synonyms[k] = v.get<std::string>();
    for (const auto& [k, v] : m.at("entities").items()) t.matcher.entities.emplace_back(text::normalized(k), v);
    std::stable_sort(t.matcher.entities.begin(), t.matcher.entities.end(),
                     [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

    for (const auto& c : read_json(dir / "categories.json")) {
      t.categories.push_back({c.at("category").get<std::string>(), c.at("keywords").get<std::vector<std::string>>()});
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("rule tables: ") + e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------

RuleBasedProvider::RuleBasedProvider(const WorldSpec& spec, RuleTables tables, MessageTable messages)
    : RuleBasedProvider(spec, std::move(tables), std::move(messages), Options{}) {}

RuleBasedProvider::RuleBasedProvider(const WorldSpec& spec, RuleTables tables, MessageTable messages,
                                     Options options)
    : spec_(spec),
      tables_(std::move(tables)),
      messages_(messages),
      options_(std::move(options)),
      engine_(spec, std::move(messages)) {}

namespace {

struct VerbMatch {
  std::string verb;
  std::size_t consumed = 0;
};

std::optional<VerbMatch> match_verb(const Lexicon& lex, const std::vector<std::string>& w) {
  std::optional<VerbMatch> best;
  for (const auto& [verb, phrases] : lex.verbs) {
    for (const auto& p : phrases) {
      if (p.empty() || p.size() > w.size()) continue;
      if (!std::equal(p.begin(), p.end(), w.begin())) continue;
      if (lex.bare_verbs.contains(verb) && p.size() != w.size()) continue;
      if (!best || p.size() > best->consumed) best = VerbMatch{verb, p.size()};
    }
  }
  return best;
}

}  // namespace

Classification RuleBasedProvider::classify(std::string_view raw, bool at_npc) {
  const std::string t = text::trim(raw);
  const auto w = text::words(t);
  if (w.empty()) throw EmptyInputError();
  const Lexicon& lex = tables_.lexicon;

  if (auto m = match_verb(lex, w)) return {InputKind::Action, "verb:" + m->verb};
  if (t.back() == '?') return {InputKind::Words, "question_mark"};
  if (lex.question_words.contains(w[0])) return {InputKind::Words, "question_word"};
  if (lex.interjections.contains(w[0])) return {InputKind::Words, "interjection"};
  if (lex.speech_verbs.contains(w[0])) return {InputKind::Words, "speech_verb"};
  for (const auto& npc : spec_.npcs) {
    std::vector<std::string> names{npc.name};
    names.insert(names.end(), npc.aliases.begin(), npc.aliases.end());
    for (const auto& n : names) {
      auto nw = text::words(n);
      if (!nw.empty() && nw.size() <= w.size() && std::equal(nw.begin(), nw.end(), w.begin())) {
        return {InputKind::Words, "vocative"};
      }
    }
  }
  if (lex.physical_verbs.contains(w[0])) return {InputKind::Action, "physical_verb"};
  if (std::any_of(w.begin(), w.end(), [&](const auto& x) { return lex.pronouns.contains(x); })) {
    return {InputKind::Words, "pronoun"};
  }
  if (lex.directions.contains(w[0])) return {InputKind::Action, "direction"};
  return at_npc ? Classification{InputKind::Words, "default_npc"} : Classification{InputKind::Action, "default"};
}

NormalizeResult RuleBasedProvider::normalize(std::string_view raw) {
  NormalizeResult nr;
  nr.raw = std::string(raw);
  const auto w = text::words(raw);
  if (w.empty()) return nr;
  const Lexicon& lex = tables_.lexicon;

  auto m = match_verb(lex, w);
  std::size_t consumed = m ? m->consumed : 1;
  nr.verb_token = text::join({w.begin(), w.begin() + static_cast<std::ptrdiff_t>(consumed)}, " ");
  auto rest_begin = w.begin() + static_cast<std::ptrdiff_t>(consumed);
  while (rest_begin != w.end() && lex.articles.contains(*rest_begin)) ++rest_begin;
  std::vector<std::string> rest(rest_begin, w.end());
  if (!rest.empty()) nr.object_token = text::join(rest, " ");
  if (!m) return nr;

  VerbObjectCommand cmd;
  cmd.verb = m->verb;
  cmd.raw = nr.raw;
  if (nr.object_token) {
    auto id = engine_.resolve_object(*nr.object_token);
    cmd.object = id ? spec_.find_object(*id)->name : *nr.object_token;
  }
  nr.command = std::move(cmd);
  return nr;
}

std::string RuleBasedProvider::stall_line(std::string_view npc_name) const {
  return text::fill(options_.stall_line, {{"name", std::string(npc_name)}});
}

std::string RuleBasedProvider::npc_respond(const NpcContext& ctx, std::string_view utterance,
                                           const HistoryWindow&) {
  const NpcSpec* def = spec_.find_npc(ctx.npc_id);
  if (!def) return stall_line(ctx.name);
  if (ctx.arrival) return def->greeting.empty() ? def->name + " glances at you." : def->greeting;
  if (ctx.condition_met && ctx.goal_index > 0 && ctx.goal_index <= def->goals.size()) {
    return def->goals[ctx.goal_index - 1].met_response;
  }
  const std::string hay = text::normalized(utterance);
  for (const auto& topic : def->topics) {
    for (const auto& kw : topic.keywords) {
      if (text::contains_phrase(hay, kw)) return topic.response;
    }
  }
  if (ctx.goal_index < def->goals.size()) return def->goals[ctx.goal_index].unmet_response;
  return def->exhausted_response;
}

std::optional<std::string> RuleBasedProvider::inventory_request_object(const std::vector<std::string>& w) const {
  const Lexicon& lex = tables_.lexicon;
  auto it = std::find_if(w.begin(), w.end(), [&](const auto& x) { return lex.inventory_verbs.contains(x); });
  if (it == w.end()) return std::nullopt;
  ++it;
  static const std::set<std::string> kStops{"in", "into", "to", "inside", "on", "onto", "with"};
  if (it != w.end() && *it == "up") ++it;
  std::vector<std::string> phrase;
  for (; it != w.end() && !kStops.contains(*it); ++it) {
    if (phrase.empty() && lex.articles.contains(*it)) continue;
    phrase.push_back(*it);
  }
  if (phrase.empty()) return std::nullopt;
  return text::join(phrase, " ");
}

std::string RuleBasedProvider::game_feedback(const FeedbackRequest& request, const HistoryWindow&) {
  const auto w = text::words(request.raw);
  if (auto obj = inventory_request_object(w); obj && !engine_.resolve_object(*obj)) {
    return messages_.render("not_an_object", {{"object", *obj}});
  }
  if (request.agent_response) return *request.agent_response;
  return request.location_description;
}

std::string RuleBasedProvider::rewrite_failure(std::string_view raw, const ActionResult& failure,
                                               const HistoryWindow&) {
  if (!options_.rewrite_template || failure.failure_code != FailureCode::UnknownVerb) return failure.message;
  std::string what = strip_trailing_punct(text::trim(raw));
  if (!what.empty()) what[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(what[0])));
  return text::fill(tables_.rewrite_template, {{"raw", what}});
}

std::string RuleBasedProvider::summarize(std::span<const Turn> turns, std::size_t max_tokens) {
  std::vector<std::string> parts;
  for (const auto& t : turns) parts.push_back(t.speaker + ": " + t.text);
  std::string out = text::join(parts, " | ");
  const std::size_t max_chars = max_tokens * 4;
  if (out.size() > max_chars) {
    out.resize(max_chars);
    auto cut = out.find_last_of(' ');
    if (cut != std::string::npos) out.resize(cut);
  }
  return out;
}

bool RuleBasedProvider::judge(const Condition& condition, std::string_view utterance) {
  return keywords_match(condition.keywords, utterance);
}

std::string RuleBasedProvider::distill(const StrategySegment& seg) {
  const std::string texts = text::normalized(text::join(seg.player_texts, " "));
  const std::string place = text::lower(seg.location_name);
  for (const auto& rule : tables_.phrases) {
    if (rule.location && *rule.location != seg.location) continue;
    if (rule.npc && (!seg.npc || *rule.npc != *seg.npc)) continue;
    if (rule.mode && *rule.mode != seg.mode) continue;
    if (!rule.keywords.empty() && !keywords_match(rule.keywords, texts)) continue;
    std::string object;
    if (rule.verb) {
      auto it = std::find_if(seg.commands.begin(), seg.commands.end(),
                             [&](const auto& c) { return first_word(c) == *rule.verb; });
      if (it == seg.commands.end()) continue;
      auto sp = it->find(' ');
      object = sp == std::string::npos ? "" : it->substr(sp + 1);
    }
    if (!rule.only_verbs.empty()) {
      if (seg.commands.empty()) continue;
      bool all = std::all_of(seg.commands.begin(), seg.commands.end(), [&](const auto& c) {
        return std::find(rule.only_verbs.begin(), rule.only_verbs.end(), first_word(c)) != rule.only_verbs.end();
      });
      if (!all) continue;
    }
    std::string s = text::fill(rule.summary, {{"npc", seg.npc_name}, {"place", place}, {"object", object}});
    return text::capitalize(text::cap_words(s, kSummaryWordCap));
  }
  return text::capitalize(text::cap_words("Explore " + place, kSummaryWordCap));
}

std::set<std::string> RuleBasedProvider::canonical_tokens(std::string_view summary) const {
  const MatcherTable& m = tables_.matcher;
  std::string padded = " " + text::normalized(summary) + " ";
  for (const auto& [phrase, token] : m.entities) {
    const std::string probe = " " + phrase + " ";
    std::size_t pos;
    while ((pos = padded.find(probe)) != std::string::npos) padded.replace(pos, probe.size(), " " + token + " ");
  }
  std::set<std::string> out;
  for (const auto& w : text::words(padded)) {
    if (m.stopwords.contains(w)) continue;
    std::string tok;
    if (auto it = m.synonyms.find(w); it != m.synonyms.end()) {
      tok = it->second;
    } else {
      tok = stem(w);
      if (auto it2 = m.synonyms.find(tok); it2 != m.synonyms.end()) tok = it2->second;
    }
    if (!m.stopwords.contains(tok)) out.insert(tok);
  }
  return out;
}

double RuleBasedProvider::similarity(std::string_view a, std::string_view b) const {
  auto ta = canonical_tokens(a);
  auto tb = canonical_tokens(b);
  if (ta.empty() || tb.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : ta) inter += tb.contains(t) ? 1 : 0;
  return static_cast<double>(inter) / static_cast<double>(ta.size() + tb.size() - inter);
}

std::vector<std::size_t> RuleBasedProvider::match(std::string_view summary, std::span<const std::string> candidates) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double s = similarity(summary, candidates[i]);
    if (s >= tables_.matcher.threshold) scored.emplace_back(s, i);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::size_t> out;
  for (const auto& [s, i] : scored) out.push_back(i);
  return out;
}

std::string RuleBasedProvider::categorize(std::string_view summary) {
  const std::string hay = text::normalized(summary);
  for (const auto& rule : tables_.categories) {
    for (const auto& kw : rule.keywords) {
      if (text::contains_phrase(hay, kw)) return rule.category;
    }
  }
  return "other";
}

}  // namespace dejaboom
