#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dejaboom::text {

std::string lower(std::string_view s);
std::string trim(std::string_view s);

// Lowercased alphanumeric words; apostrophes are dropped ("dog's" -> "dogs").
std::vector<std::string> words(std::string_view s);

// Words joined by single spaces; the canonical form for phrase matching.
std::string normalized(std::string_view s);

// True if `phrase` occurs in `haystack_normalized` on word boundaries. A
// trailing '*' on the phrase turns its last word into a prefix match.
bool contains_phrase(std::string_view haystack_normalized, std::string_view phrase);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string capitalize(std::string_view s);

// Replaces {name} fields; unknown fields are left verbatim.
std::string fill(std::string_view templ, const std::vector<std::pair<std::string, std::string>>& fields);

// Keeps at most `max_words` words.
std::string cap_words(std::string_view s, std::size_t max_words);

}  // namespace dejaboom::text
