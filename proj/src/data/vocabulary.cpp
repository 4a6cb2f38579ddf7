#include "vrg/data/vocabulary.hpp"

#include "vrg/error.hpp"

namespace vrg::data {

Vocabulary::Vocabulary() {
  add("<start>");
  add("<end>");
  add("<pad>");
}

Vocabulary Vocabulary::from_relations(const std::vector<RelationQuery>& relations) {
  Vocabulary v;
  for (const auto& r : relations)
    for (const auto* part : {&r.subject, &r.predicate, &r.object})
      for (const auto& t : *part) v.add(t);
  return v;
}

std::size_t Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  tokens_.push_back(token);
  index_.emplace(token, tokens_.size() - 1);
  return tokens_.size() - 1;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw DomainError("token '" + token + "' is not in the vocabulary");
  return it->second;
}

}  // namespace vrg::data
