#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vrg/data/relation.hpp"

namespace vrg::data {

enum class EmbedMode { Single, Average };

/// Token -> fixed word vector. Tokens without a stored vector resolve to a
/// deterministic pseudo-random unit vector derived from (seed, token).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dimension = 300, std::uint64_t fallback_seed = 0x5eed);

  std::size_t dimension() const { return dimension_; }
  std::uint64_t fallback_seed() const { return seed_; }
  std::size_t stored_count() const { return vectors_.size(); }

  void insert(const std::string& token, std::vector<double> vec);
  bool contains(const std::string& token) const { return vectors_.count(token) != 0; }
  std::vector<double> lookup(const std::string& token) const;

  /// Reads the common "token v1 ... vD" text layout. Lines whose width differs
  /// from `dimension` are rejected.
  static EmbeddingTable load_text(const std::string& path, std::size_t dimension,
                                  std::uint64_t fallback_seed = 0x5eed);

 private:
  std::vector<double> fallback(const std::string& token) const;

  std::size_t dimension_;
  std::uint64_t seed_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

/// Single -> first token's vector; Average -> arithmetic mean over tokens.
std::vector<double> embed_tokens(const Tokens& tokens, const EmbeddingTable& table, EmbedMode mode);

}  // namespace vrg::data
