#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "vrg/data/relation.hpp"

namespace vrg::data {

/// Decoder target space. Indices 0-2 are <start>, <end>, <pad>.
class Vocabulary {
 public:
  static constexpr std::size_t kStart = 0;
  static constexpr std::size_t kEnd = 1;
  static constexpr std::size_t kPad = 2;

  Vocabulary();

  /// Adds every token of every query, in first-seen order.
  static Vocabulary from_relations(const std::vector<RelationQuery>& relations);

  std::size_t add(const std::string& token);
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  /// Throws DomainError naming the token when it is out of vocabulary.
  std::size_t index(const std::string& token) const;
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace vrg::data
