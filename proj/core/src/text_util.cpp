#include "text_util.hpp"

#include <array>
#include <charconv>

namespace vecsynth::detail {

namespace {

constexpr std::array<std::string_view, 13> kNumbers{"zero", "one", "two",   "three",  "four",   "five",  "six",
                                                   "seven", "eight", "nine", "ten", "eleven", "twelve"};

bool ends_with(std::string_view s, std::string_view tail) {
  return s.size() >= tail.size() && s.substr(s.size() - tail.size()) == tail;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

}  // namespace

std::string number_word(std::size_t n) {
  if (n < kNumbers.size()) return std::string(kNumbers[n]);
  return std::to_string(n);
}

std::optional<std::size_t> parse_count_word(std::string_view word) {
  if (word == "a" || word == "an") return 1;
  for (std::size_t i = 1; i < kNumbers.size(); ++i) {
    if (word == kNumbers[i]) return i;
  }
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), n);
  if (ec == std::errc() && ptr == word.data() + word.size() && n > 0) return n;
  return std::nullopt;
}

std::string pluralize(std::string_view noun) {
  std::string s(noun);
  if (s.empty()) return s;
  if (ends_with(s, "s") || ends_with(s, "x") || ends_with(s, "z") || ends_with(s, "ch") || ends_with(s, "sh")) {
    return s + "es";
  }
  if (s.size() > 1 && s.back() == 'y' && !is_vowel(s[s.size() - 2])) return s.substr(0, s.size() - 1) + "ies";
  return s + "s";
}

std::string singularize(std::string_view noun) {
  std::string s(noun);
  if (s.size() > 3 && ends_with(s, "ies")) return s.substr(0, s.size() - 3) + "y";
  if (s.size() > 3 && (ends_with(s, "ches") || ends_with(s, "shes") || ends_with(s, "sses") || ends_with(s, "xes"))) {
    return s.substr(0, s.size() - 2);
  }
  if (s.size() > 2 && s.back() == 's' && !ends_with(s, "ss") && !ends_with(s, "us")) return s.substr(0, s.size() - 1);
  return s;
}

std::string_view indefinite_article(std::string_view word) {
  return (!word.empty() && is_vowel(word.front())) ? "an" : "a";
}

}  // namespace vecsynth::detail
