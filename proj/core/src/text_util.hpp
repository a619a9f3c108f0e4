#pragma once

// English helpers shared by the caption template and the mock generator.

#include <optional>
#include <string>
#include <string_view>

namespace vecsynth::detail {

std::string number_word(std::size_t n);
std::optional<std::size_t> parse_count_word(std::string_view word);  // a/an/one/... twelve, digits
std::string pluralize(std::string_view noun);
std::string singularize(std::string_view noun);
std::string_view indefinite_article(std::string_view word);

}  // namespace vecsynth::detail
