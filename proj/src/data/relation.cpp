#include "vrg/data/relation.hpp"

#include <algorithm>
#include <cctype>

#include "vrg/error.hpp"

namespace vrg::data {

namespace {

Tokens split_part(std::string_view part, const char* role, std::string_view raw) {
  if (part.empty()) throw ParseError("relation '" + std::string(raw) + "': empty " + role);
  Tokens out;
  std::size_t start = 0;
  while (true) {
    const auto pos = part.find('_', start);
    const auto word = part.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (word.empty()) throw ParseError("relation '" + std::string(raw) + "': empty word in " + role);
    std::string lower(word);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::any_of(lower.begin(), lower.end(), [](unsigned char c) { return std::isspace(c); })) {
      throw ParseError("relation '" + std::string(raw) + "': whitespace in " + role);
    }
    out.push_back(std::move(lower));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string join_tokens(const Tokens& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += '_';
    s += tokens[i];
  }
  return s;
}

std::string format_relation(const Tokens& subject, const Tokens& predicate, const Tokens& object) {
  return join_tokens(subject) + "-" + join_tokens(predicate) + "-" + join_tokens(object);
}

RelationQuery tokenize_relation(std::string_view raw) {
  const auto first = raw.find('-');
  const auto second = first == std::string_view::npos ? first : raw.find('-', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos ||
      raw.find('-', second + 1) != std::string_view::npos) {
    throw ParseError("relation '" + std::string(raw) + "': expected exactly two '-' separators");
  }
  RelationQuery q;
  q.subject = split_part(raw.substr(0, first), "subject", raw);
  q.predicate = split_part(raw.substr(first + 1, second - first - 1), "predicate", raw);
  q.object = split_part(raw.substr(second + 1), "object", raw);
  q.raw = std::string(raw);
  return q;
}

}  // namespace vrg::data
