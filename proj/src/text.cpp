#include "dejaboom/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace dejaboom::text {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char raw : s) {
    unsigned char c = static_cast<unsigned char>(raw);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (c == '\'') {
      continue;
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string normalized(std::string_view s) { return join(words(s), " "); }

bool contains_phrase(std::string_view haystack_normalized, std::string_view phrase) {
  bool prefix = !phrase.empty() && phrase.back() == '*';
  std::string needle = normalized(prefix ? phrase.substr(0, phrase.size() - 1) : phrase);
  if (needle.empty()) return false;
  std::string hay = " " + std::string(haystack_normalized) + " ";
  std::string probe = " " + needle + (prefix ? "" : " ");
  return hay.find(probe) != std::string::npos;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string capitalize(std::string_view s) {
  std::string out(s);
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string fill(std::string_view templ, const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out(templ);
  for (const auto& [key, value] : fields) {
    const std::string marker = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = out.find(marker, pos)) != std::string::npos) {
      out.replace(pos, marker.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string cap_words(std::string_view s, std::size_t max_words) {
  std::istringstream in{std::string(s)};
  std::vector<std::string> kept;
  std::string w;
  while (in >> w && kept.size() < max_words) kept.push_back(w);
  return join(kept, " ");
}

}  // namespace dejaboom::text
