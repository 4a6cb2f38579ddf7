#include "vrg/data/embedding.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "vrg/error.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg::data {

EmbeddingTable::EmbeddingTable(std::size_t dimension, std::uint64_t fallback_seed)
    : dimension_(dimension), seed_(fallback_seed) {
  if (dimension == 0) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingTable::insert(const std::string& token, std::vector<double> vec) {
  if (vec.size() != dimension_) {
    throw DimensionError("embedding for '" + token + "' has " + std::to_string(vec.size()) +
                         " values, table dimension is " + std::to_string(dimension_));
  }
  vectors_[token] = std::move(vec);
}

std::vector<double> EmbeddingTable::lookup(const std::string& token) const {
  auto it = vectors_.find(token);
  return it != vectors_.end() ? it->second : fallback(token);
}

std::vector<double> EmbeddingTable::fallback(const std::string& token) const {
  num::Rng rng(num::derive_seed(seed_, token));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(dimension_);
  double norm = 0.0;
  for (auto& x : v) {
    x = dist(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

EmbeddingTable EmbeddingTable::load_text(const std::string& path, std::size_t dimension,
                                         std::uint64_t fallback_seed) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file " + path);
  EmbeddingTable table(dimension, fallback_seed);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    std::vector<double> vec;
    vec.reserve(dimension);
    double x;
    while (ls >> x) vec.push_back(x);
    if (!ls.eof()) throw FormatError(path + ":" + std::to_string(lineno) + ": non-numeric value");
    if (vec.size() != dimension) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dimension) +
                        " values, found " + std::to_string(vec.size()));
    }
    table.insert(token, std::move(vec));
  }
  return table;
}

std::vector<double> embed_tokens(const Tokens& tokens, const EmbeddingTable& table, EmbedMode mode) {
  if (tokens.empty()) throw DomainError("embed_tokens: empty token list");
  if (mode == EmbedMode::Single) return table.lookup(tokens.front());
  std::vector<double> acc(table.dimension(), 0.0);
  for (const auto& t : tokens) {
    const auto v = table.lookup(t);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  for (auto& x : acc) x /= static_cast<double>(tokens.size());
  return acc;
}

}  // namespace vrg::data
