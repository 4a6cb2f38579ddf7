#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace vrg::data {

using Tokens = std::vector<std::string>;

/// A subject-predicate-object query such as "person-jump_above-bicycle".
/// Parts are separated by '-', words inside a part by '_'.
struct RelationQuery {
  Tokens subject;
  Tokens predicate;
  Tokens object;
  std::string raw;

  friend bool operator==(const RelationQuery&, const RelationQuery&) = default;
};

RelationQuery tokenize_relation(std::string_view raw);
std::string format_relation(const Tokens& subject, const Tokens& predicate, const Tokens& object);
std::string join_tokens(const Tokens& tokens);

}  // namespace vrg::data
