#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dejaboom/action.hpp"
#include "dejaboom/error.hpp"
#include "dejaboom/narrative.hpp"
#include "dejaboom/rule_provider.hpp"
#include "dejaboom/session.hpp"
#include "dejaboom/world.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return DEJABOOM_DATA_DIR; }
inline fs::path fixture_dir() { return DEJABOOM_FIXTURE_DIR; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string as_jsonl(const std::vector<dejaboom::LogRecord>& log) {
  std::ostringstream out;
  dejaboom::write_log(out, log);
  return out.str();
}

inline std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

// The shipped world, rule tables and messages, loaded once.
struct Reference {
  dejaboom::WorldSpec spec;
  dejaboom::RuleTables tables;
  dejaboom::MessageTable messages;

  static const Reference& get() {
    static const Reference ref = [] {
      Reference r;
      r.spec = dejaboom::load_world_spec_file(data_dir() / "worlds" / "dejaboom.json");
      r.tables = dejaboom::RuleTables::load(data_dir() / "rules");
      r.messages = dejaboom::MessageTable::load(data_dir() / "failure_messages.json");
      return r;
    }();
    return ref;
  }

  std::unique_ptr<dejaboom::RuleBasedProvider> provider(bool rewrite = true) const {
    dejaboom::RuleBasedProvider::Options o;
    o.rewrite_template = rewrite;
    return std::make_unique<dejaboom::RuleBasedProvider>(spec, tables, messages, o);
  }
};

// Plays `commands` from a fresh session and returns it.
inline dejaboom::Session play(dejaboom::Provider& provider, const std::vector<std::string>& commands,
                              dejaboom::SessionOptions options = {}, const std::string& player = "tester") {
  const Reference& ref = Reference::get();
  dejaboom::SessionEngine engine(ref.spec, provider, ref.messages, options);
  dejaboom::Session s = engine.start({player, {}});
  for (const auto& c : commands) {
    if (s.status != dejaboom::SessionStatus::Running) break;
    engine.step(s, c);
  }
  return s;
}

inline std::vector<std::string> script(const std::string& name) {
  return lines_of(fixture_dir() / "scripts" / (name + ".txt"));
}

// Deterministic 64-bit generator for hand-rolled property tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9E3779B97F4A7C15ULL) {}
  std::uint64_t next() {
    s_ ^= s_ << 13;
    s_ ^= s_ >> 7;
    s_ ^= s_ << 17;
    return s_;
  }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : static_cast<std::size_t>(next() % n); }
  bool coin(double p = 0.5) { return static_cast<double>(next() % 1000000) < p * 1000000.0; }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[below(v.size())];
  }

 private:
  std::uint64_t s_;
};

}  // namespace testing
