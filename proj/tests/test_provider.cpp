#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "dejaboom/gateway.hpp"
#include "dejaboom/profiles.hpp"
#include "dejaboom/remote_provider.hpp"
#include "dejaboom/text.hpp"
#include "support.hpp"

using namespace dejaboom;
using nlohmann::json;
using testing::Reference;
using namespace std::chrono_literals;

namespace {

// A chat endpoint that answers from a script of (status, body) replies and
// repeats the last one once the script runs out.
class FakeChat {
 public:
  FakeChat() {
    server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
      std::pair<int, std::string> reply;
      std::chrono::milliseconds delay{0};
      {
        std::lock_guard lock(mu_);
        ++hits_;
        auth_ = req.get_header_value("Authorization");
        body_ = req.body;
        if (script_.size() > 1) {
          reply = script_.front();
          script_.pop_front();
        } else if (!script_.empty()) {
          reply = script_.front();
        }
        delay = delay_;
      }
      if (delay.count() > 0) std::this_thread::sleep_for(delay);
      res.status = reply.first;
      res.set_content(reply.second, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeChat() {
    server_.stop();
    thread_.join();
  }

  void reply(int status, std::string body) {
    std::lock_guard lock(mu_);
    script_.emplace_back(status, std::move(body));
  }
  void content(const std::string& text) { reply(200, json{{"content", text}}.dump()); }
  void delay(std::chrono::milliseconds d) {
    std::lock_guard lock(mu_);
    delay_ = d;
  }
  int hits() {
    std::lock_guard lock(mu_);
    return hits_;
  }
  std::string auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }
  json last_request() {
    std::lock_guard lock(mu_);
    return json::parse(body_);
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::pair<int, std::string>> script_;
  std::chrono::milliseconds delay_{0};
  int hits_ = 0;
  std::string auth_;
  std::string body_;
};

RemoteProvider remote(const FakeChat& chat, int retries = 1, std::chrono::milliseconds timeout = 2000ms) {
  RemoteConfig cfg;
  cfg.endpoint = chat.url();
  cfg.model = "test-model";
  cfg.api_key = "sk-test";
  cfg.retries = retries;
  cfg.timeout = timeout;
  cfg.backoff = 5ms;
  return RemoteProvider(cfg, PromptSet::load(testing::data_dir() / "prompts"));
}

// Rule-based answers, except that the operations named in `failing` throw.
class FaultyProvider : public RuleBasedProvider {
 public:
  FaultyProvider(std::set<std::string> failing, ProviderFault fault = ProviderFault::Unavailable)
      : RuleBasedProvider(Reference::get().spec, Reference::get().tables, Reference::get().messages),
        failing_(std::move(failing)),
        fault_(fault) {}

  std::string name() const override { return "faulty"; }
  Classification classify(std::string_view raw, bool at_npc) override {
    hit("classify");
    return RuleBasedProvider::classify(raw, at_npc);
  }
  NormalizeResult normalize(std::string_view raw) override {
    hit("normalize");
    return RuleBasedProvider::normalize(raw);
  }
  std::string npc_respond(const NpcContext& c, std::string_view u, const HistoryWindow& h) override {
    hit("npc");
    return "primary:" + RuleBasedProvider::npc_respond(c, u, h);
  }
  std::string game_feedback(const FeedbackRequest& r, const HistoryWindow& h) override {
    hit("feedback");
    return RuleBasedProvider::game_feedback(r, h);
  }
  std::string rewrite_failure(std::string_view raw, const ActionResult& f, const HistoryWindow& h) override {
    hit("rewrite");
    return RuleBasedProvider::rewrite_failure(raw, f, h);
  }
  std::string summarize(std::span<const Turn> t, std::size_t m) override {
    hit("summarize");
    return RuleBasedProvider::summarize(t, m);
  }
  bool judge(const Condition& c, std::string_view u) override {
    hit("judge");
    return RuleBasedProvider::judge(c, u);
  }
  std::string distill(const StrategySegment& s) override {
    hit("distill");
    return RuleBasedProvider::distill(s);
  }

 private:
  void hit(const std::string& op) {
    if (failing_.contains(op) || failing_.contains("*")) throw ProviderError(fault_, op + " failed");
  }
  std::set<std::string> failing_;
  ProviderFault fault_;
};

// A loopback port that nothing listens on.
int closed_port() {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

std::vector<Turn> turns_of(std::size_t n, std::size_t words) {
  std::vector<Turn> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string t;
    for (std::size_t w = 0; w < words; ++w) t += "word" + std::to_string(w) + " ";
    out.push_back({i % 2 ? "Player" : "Mrs. Thompson", t, static_cast<int>(i + 1), 1});
  }
  return out;
}

}  // namespace

TEST_SUITE("rule provider") {
  TEST_CASE("classifier fixture") {
    auto p = Reference::get().provider();
    json cases = json::parse(testing::slurp(testing::fixture_dir() / "classifier" / "commands.json"));
    REQUIRE(cases.size() >= 40);
    std::size_t correct = 0;
    for (const auto& c : cases) {
      Classification got = p->classify(c["text"].get<std::string>(), c["at_npc"].get<bool>());
      const bool ok = to_string(got.kind) == c["expected"].get<std::string>();
      if (!ok) MESSAGE("misclassified: " << c["text"].get<std::string>() << " (" << got.note << ")");
      correct += ok ? 1 : 0;
    }
    CHECK(correct == cases.size());
  }

  TEST_CASE("classify rejects empty input") {
    auto p = Reference::get().provider();
    CHECK_THROWS_AS(p->classify("   ", false), EmptyInputError);
    CHECK_THROWS_AS(p->classify("?!", true), EmptyInputError);
  }

  TEST_CASE("normalize") {
    auto p = Reference::get().provider();
    NormalizeResult n = p->normalize("Pick up the bucket");
    REQUIRE(n.recognized());
    CHECK(n.command->canonical() == "take water bucket");
    n = p->normalize("go to residential street.");
    REQUIRE(n.recognized());
    CHECK(n.command->canonical() == "go residential street");
    n = p->normalize("check inventory");
    REQUIRE(n.recognized());
    CHECK(n.command->canonical() == "inventory");
    n = p->normalize("wear the water bucket");
    CHECK_FALSE(n.recognized());
    CHECK(n.verb_token == "wear");
    CHECK(n.object_token == std::optional<std::string>("water bucket"));
  }

  TEST_CASE("inventory requests for things that do not exist") {
    const Reference& ref = Reference::get();
    auto p = ref.provider();
    FeedbackRequest req{"put the flashlight in my inventory?", "home", "Your cosy home.", std::nullopt};
    CHECK(p->game_feedback(req, {}) ==
          "The flashlight is not an object that can be added to your inventory in this game.");
    req.raw = "put the water bucket in my inventory";
    req.agent_response = "You picked up the water bucket.";
    CHECK(p->game_feedback(req, {}) == "You picked up the water bucket.");
    req.raw = "hmm";
    req.agent_response.reset();
    CHECK(p->game_feedback(req, {}) == "Your cosy home.");
  }

  TEST_CASE("failure rewrite") {
    const Reference& ref = Reference::get();
    ActionResult unknown;
    unknown.outcome = Outcome::Failure;
    unknown.failure_code = FailureCode::UnknownVerb;
    unknown.message = "You can't wear that!";
    CHECK(ref.provider(true)->rewrite_failure("Wear the water bucket.", unknown, {}) ==
          "You tried to wear the water bucket, but nothing happened.");
    CHECK(ref.provider(false)->rewrite_failure("Wear the water bucket.", unknown, {}) == "You can't wear that!");
    ActionResult other = unknown;
    other.failure_code = FailureCode::NotHere;
    other.message = "You can't go that way.";
    CHECK(ref.provider(true)->rewrite_failure("go north", other, {}) == "You can't go that way.");
  }

  TEST_CASE("matcher") {
    auto p = Reference::get().provider();
    CHECK(p->similarity("Ask Mrs. Thompson about the explosion", "Question Mrs. Thompson regarding the bomb") >= 0.6);
    CHECK(p->similarity("Take water bucket at home", "Take redstone torch in park") < 0.6);
    std::vector<std::string> cands{"Take redstone torch in park", "Question Mrs. Thompson regarding the bomb",
                                   "Ask Mrs. Thompson about the explosion"};
    auto m = p->match("Ask Mrs. Thompson about the explosion", cands);
    REQUIRE(m.size() == 2);
    CHECK(m[0] == 1);
    CHECK(m[1] == 2);
    CHECK(p->match("", cands).empty());
    CHECK(p->canonical_tokens("Take the water bucket") == std::set<std::string>{"take", "bucket"});
  }

  TEST_CASE("categories") {
    auto p = Reference::get().provider();
    CHECK(p->categorize("Trick Moriarty into revealing information") == "extracting-information-from-npcs");
    CHECK(p->categorize("Player searches for weapons at home") == "new-entity-suggestions");
    CHECK(p->categorize("Distract Merlin and steal his bomb disposal kit") == "new-defuse-methods");
    CHECK(p->categorize("Ask the Mad Hatter for a hint") == "creative-hidden-information");
    CHECK(p->categorize("Dance in the park") == "other");
  }

  TEST_CASE("distill of a lone wait") {
    auto p = Reference::get().provider();
    StrategySegment seg;
    seg.location = "home";
    seg.location_name = "Home";
    seg.commands = {"wait"};
    seg.player_texts = {"wait"};
    CHECK(p->distill(seg) == "Wait and observe");
    seg.commands = {};
    seg.player_texts = {"dance wildly"};
    CHECK(p->distill(seg) == "Explore home");
  }

  TEST_CASE("distilled summaries are capped") {
    auto p = Reference::get().provider();
    testing::Rng rng(7);
    std::vector<std::string> places{"home", "park", "library", "restaurant", "town_hall", "blacksmith"};
    std::vector<std::string> vocab{"joke", "blacksmith", "explosion", "who", "take", "wait", "steal", "stop",
                                   "bomb", "save", "strange", "help", "riddle", "hello", "the", "kit"};
    for (int i = 0; i < 300; ++i) {
      StrategySegment seg;
      seg.location = rng.pick(places);
      seg.location_name = seg.location;
      seg.mode = static_cast<SegmentMode>(rng.below(3));
      seg.npc = rng.coin() ? std::optional<std::string>(rng.pick(Reference::get().spec.npcs).id) : std::nullopt;
      seg.npc_name = seg.npc ? *seg.npc : "";
      std::string t;
      for (std::size_t k = 0, n = rng.below(12); k < n; ++k) t += rng.pick(vocab) + " ";
      seg.player_texts = {t};
      if (rng.coin()) seg.commands = {"take water bucket"};
      std::string s = p->distill(seg);
      REQUIRE_FALSE(s.empty());
      REQUIRE(text::words(s).size() <= kSummaryWordCap);
    }
  }

  TEST_CASE("judge uses the keyword sets") {
    auto p = Reference::get().provider();
    Condition c{ConditionKind::UtteranceMatches, {}, {{"joke", "pun"}}, "Is it a joke?", {}};
    CHECK(p->judge(c, "Here's a joke for you"));
    CHECK_FALSE(p->judge(c, "hello"));
  }
}

TEST_SUITE("history window") {
  TEST_CASE("below the high-water mark nothing changes") {
    auto p = Reference::get().provider();
    HistoryWindow h{turns_of(12, 3), std::nullopt};
    CHECK(summarize_history(h, 1000, *p) == h);
  }

  TEST_CASE("estimator") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("abcd") == 1);
    CHECK(estimate_tokens("abcde") == 2);
    HistoryWindow h{{{"A", "bc", 1, 1}}, std::string("abcdefgh")};
    CHECK(h.token_estimate() == 2 + 2);
  }

  // Random windows: the newest turns survive untouched, and the result fits
  // under the high-water mark whenever the recent turns alone do.
  TEST_CASE("summaries keep the recent turns and fit the budget") {
    auto p = Reference::get().provider();
    SummarizePolicy policy;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      testing::Rng rng(seed);
      HistoryWindow h{turns_of(1 + rng.below(40), 1 + rng.below(20)), std::nullopt};
      if (rng.coin(0.3)) h.summary = "Earlier the player wandered around.";
      const std::size_t budget = 50 + rng.below(400);
      HistoryWindow out = summarize_history(h, budget, *p, policy);
      const std::size_t high_water = budget * 8 / 10;
      if (h.token_estimate() <= high_water || h.turns.size() <= policy.keep_recent) {
        REQUIRE(out == h);
        continue;
      }
      REQUIRE(out.turns.size() == policy.keep_recent);
      REQUIRE(std::equal(out.turns.begin(), out.turns.end(), h.turns.end() - 10));
      HistoryWindow recent{out.turns, std::nullopt};
      if (recent.token_estimate() <= high_water) REQUIRE(out.token_estimate() <= high_water);
    }
  }
}

TEST_SUITE("remote provider") {
  TEST_CASE("request shape and both reply formats") {
    FakeChat chat;
    chat.content("words");
    RemoteProvider p = remote(chat);
    CHECK(p.classify("hello there", true).kind == InputKind::Words);
    CHECK(chat.auth() == "Bearer sk-test");
    json req = chat.last_request();
    CHECK(req["model"] == "test-model");
    REQUIRE(req["messages"].size() == 2);
    CHECK(req["messages"][0]["role"] == "system");
    CHECK(req["messages"][1]["content"].get<std::string>().find("hello there") != std::string::npos);

    FakeChat openai;
    openai.reply(200, R"({"choices":[{"message":{"role":"assistant","content":"Yes."}}]})");
    RemoteProvider q = remote(openai);
    CHECK(q.judge(Condition{}, "a joke"));
    CHECK(q.name() == "remote:test-model");
  }

  TEST_CASE("structured operations") {
    FakeChat chat;
    RemoteProvider p = remote(chat);
    chat.content("```json\n{\"verb\": \"take\", \"object\": \"water bucket\"}\n```");
    NormalizeResult n = p.normalize("grab the bucket");
    REQUIRE(n.recognized());
    CHECK(n.command->canonical() == "take water bucket");

    FakeChat m;
    m.content("[2, 0, 2, 9, \"x\"]");
    RemoteProvider pm = remote(m);
    std::vector<std::string> cands{"a", "b", "c"};
    CHECK(pm.match("a", cands) == std::vector<std::size_t>{2, 0});
    CHECK(pm.match("a", {}).empty());
    CHECK(m.hits() == 1);

    FakeChat d;
    d.content("Ask Mrs. Thompson about the explosion.");
    RemoteProvider pd = remote(d);
    CHECK(pd.distill(StrategySegment{}) == "Ask Mrs. Thompson about the explosion");

    FakeChat c;
    c.content("Category: new-defuse-methods");
    RemoteProvider pc = remote(c);
    CHECK(pc.categorize("x") == "new-defuse-methods");
  }

  TEST_CASE("malformed model output is a bad response") {
    FakeChat chat;
    chat.content("perhaps");
    RemoteProvider p = remote(chat);
    try {
      p.judge(Condition{}, "x");
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.fault() == ProviderFault::BadResponse);
      CHECK_FALSE(e.retryable());
    }
    CHECK_THROWS_AS(p.normalize("x"), ProviderError);
  }

  TEST_CASE("server errors are retried") {
    FakeChat chat;
    chat.reply(503, "{}");
    chat.content("action");
    RemoteProvider p = remote(chat, 1);
    CHECK(p.classify("go north", false).kind == InputKind::Action);
    CHECK(p.requests() == 2);
  }

  TEST_CASE("client errors are not retried") {
    FakeChat chat;
    chat.reply(400, R"({"error":"bad"})");
    RemoteProvider p = remote(chat, 3);
    try {
      p.summarize({}, 10);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.fault() == ProviderFault::BadResponse);
    }
    CHECK(chat.hits() == 1);
  }

  TEST_CASE("persistent unavailability exhausts the retries") {
    FakeChat chat;
    chat.reply(502, "{}");
    RemoteProvider p = remote(chat, 2);
    try {
      p.summarize({}, 10);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.fault() == ProviderFault::Unavailable);
    }
    CHECK(chat.hits() == 3);
  }

  TEST_CASE("slow replies time out") {
    FakeChat chat;
    chat.content("words");
    chat.delay(600ms);
    RemoteProvider p = remote(chat, 0, 150ms);
    try {
      p.classify("hello", true);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.fault() == ProviderFault::Timeout);
      CHECK(e.retryable());
    }
  }

  TEST_CASE("unreachable endpoint") {
    const int port = closed_port();
    RemoteConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/chat";
    cfg.model = "m";
    cfg.retries = 0;
    RemoteProvider p(cfg, PromptSet::load(testing::data_dir() / "prompts"));
    try {
      p.summarize({}, 10);
      FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
      CHECK(e.fault() == ProviderFault::Unavailable);
    }
  }

  TEST_CASE("configuration errors") {
    RemoteConfig cfg;
    cfg.endpoint = "localhost:9/chat";
    cfg.model = "m";
    CHECK_THROWS_AS(RemoteProvider(cfg, PromptSet{}), ConfigError);
    cfg.endpoint = "http://localhost:9/chat";
    cfg.model = "";
    CHECK_THROWS_AS(RemoteProvider(cfg, PromptSet{}), ConfigError);
  }

  TEST_CASE("prompt assets") {
    PromptSet set = PromptSet::load(testing::data_dir() / "prompts");
    for (const char* op : {"classify", "normalize", "npc", "feedback", "rewrite", "summarize", "judge", "distill",
                           "match", "categorize"}) {
      CHECK_MESSAGE(set.contains(op), op);
    }
    auto msgs = set.render("judge", {{"instruction", "Is it funny?"}, {"utterance", "knock knock"}});
    REQUIRE(msgs.size() == 2);
    CHECK(msgs[1].content.find("Is it funny?") != std::string::npos);
    CHECK(msgs[1].content.find("{{") == std::string::npos);
    CHECK_THROWS_AS(set.render("haiku", {}), ConfigError);
    CHECK_THROWS_AS(PromptSet::load(testing::data_dir() / "nope"), ConfigError);
  }
}

TEST_SUITE("gateway") {
  TEST_CASE("gameplay calls fall back") {
    const Reference& ref = Reference::get();
    FaultyProvider primary({"*"});
    auto rule = ref.provider();
    FallbackProvider gw(primary, *rule);
    CHECK(gw.classify("take bucket", false).kind == InputKind::Action);
    CHECK(gw.normalize("take bucket").recognized());
    NpcContext ctx = *build_npc_context("thompson", fresh_state(ref.spec), ref.spec);
    CHECK(gw.npc_respond(ctx, "hi", {}) == "Mrs. Thompson seems lost in thought.");
    ActionResult failure;
    failure.outcome = Outcome::Failure;
    failure.failure_code = FailureCode::UnknownVerb;
    failure.message = "You can't dance that!";
    CHECK(gw.rewrite_failure("dance", failure, {}) == "You can't dance that!");
    CHECK(gw.game_feedback({"hm", "home", "Home.", std::nullopt}, {}) == "Home.");
    CHECK(gw.judge(Condition{ConditionKind::UtteranceMatches, {}, {{"joke"}}, "", ""}, "a joke"));
    CHECK_FALSE(gw.summarize(turns_of(2, 2), 100).empty());
    CHECK(gw.fallbacks() == 7);
    CHECK(gw.name() == "faulty");
  }

  TEST_CASE("healthy primary is used") {
    const Reference& ref = Reference::get();
    FaultyProvider primary({"judge"});
    auto rule = ref.provider();
    FallbackProvider gw(primary, *rule);
    NpcContext ctx = *build_npc_context("thompson", fresh_state(ref.spec), ref.spec);
    CHECK(gw.npc_respond(ctx, "hi", {}).starts_with("primary:"));
    CHECK(gw.fallbacks() == 0);
  }

  TEST_CASE("batch operations and disabled fallback propagate") {
    const Reference& ref = Reference::get();
    FaultyProvider primary({"*"}, ProviderFault::Timeout);
    auto rule = ref.provider();
    FallbackProvider gw(primary, *rule);
    CHECK_THROWS_AS(gw.distill(StrategySegment{}), ProviderError);
    FallbackProvider strict(primary, *rule, false);
    CHECK_THROWS_AS(strict.classify("go north", false), ProviderError);
    CHECK(strict.fallbacks() == 0);
  }

  TEST_CASE("remote outage during play falls back") {
    const Reference& ref = Reference::get();
    FakeChat chat;
    chat.reply(503, "{}");
    RemoteProvider p = remote(chat, 0);
    auto rule = ref.provider();
    FallbackProvider gw(p, *rule);
    Session s = testing::play(gw, testing::script("item_route"));
    CHECK(s.status == SessionStatus::Won);
    CHECK(gw.fallbacks() > 0);
  }
}

TEST_SUITE("profiles") {
  TEST_CASE("parse") {
    auto profiles = parse_provider_profiles(R"({
      "local": {},
      "gpt": {"kind": "remote", "endpoint": "http://x/v1", "model": "m", "retries": 3, "fallback": false}
    })");
    CHECK(profiles.at("local").kind == "rule");
    CHECK(profiles.at("gpt").retries == 3);
    CHECK_FALSE(profiles.at("gpt").fallback);
    CHECK_THROWS_AS(parse_provider_profiles(R"({"x": {"kind": "oracle"}})"), ConfigError);
    CHECK_THROWS_AS(parse_provider_profiles(R"({"x": {"timeout_ms": 0}})"), ConfigError);
    CHECK_THROWS_AS(parse_provider_profiles("[]"), ConfigError);
    CHECK(default_provider_profiles().size() == 2);
  }

  TEST_CASE("stack") {
    const Reference& ref = Reference::get();
    ::unsetenv("DEJABOOM_REMOTE_ENDPOINT");
    ::unsetenv("DEJABOOM_REMOTE_MODEL");
    auto defaults = default_provider_profiles();
    CHECK_THROWS_AS(ProviderStack(defaults.at("remote"), ref.spec, ref.tables, ref.messages,
                                  testing::data_dir() / "prompts"),
                    ConfigError);
    ProviderStack rule(defaults.at("rule"), ref.spec, ref.tables, ref.messages, testing::data_dir() / "prompts");
    CHECK(rule.provider().name() == "rule");

    FakeChat chat;
    chat.content("action");
    ProviderProfile remote_profile = defaults.at("remote");
    remote_profile.endpoint = chat.url();
    remote_profile.model = "m";
    ProviderStack stack(remote_profile, ref.spec, ref.tables, ref.messages, testing::data_dir() / "prompts");
    CHECK(stack.provider().name() == "remote:m");
    CHECK(stack.provider().classify("xyzzy", true).kind == InputKind::Action);
  }
}
