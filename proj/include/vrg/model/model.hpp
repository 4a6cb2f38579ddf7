#pragma once

#include <cstdint>
#include <string>

#include "vrg/data/dataset.hpp"
#include "vrg/data/embedding.hpp"
#include "vrg/data/vocabulary.hpp"
#include "vrg/decoder/decoder.hpp"
#include "vrg/encoder/encoder.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg {

struct ModelConfig {
  enc::EncoderConfig encoder;
  dec::DecoderConfig decoder;
  double dropout = 0.2;
  std::string embedding_path;  // empty: deterministic fallback vectors only
  std::uint64_t embedding_seed = 0x5eed;
};

/// Encoder + reconstruction decoder sharing one parameter set.
class Model {
 public:
  Model(ModelConfig config, data::Vocabulary vocab, data::EmbeddingTable table, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const data::Vocabulary& vocabulary() const { return vocab_; }
  const data::EmbeddingTable& embeddings() const { return table_; }
  num::ParameterSet& parameters() { return params_; }
  const num::ParameterSet& parameters() const { return params_; }

  struct Pass {
    enc::EncoderOutput encoder;
    dec::Reconstruction reconstruction;
  };

  /// `dropout` null means evaluation mode.
  Pass forward(num::Tape& tape, const data::VideoFeatures& video, const data::RelationQuery& query,
               num::Rng* dropout = nullptr) const;

  /// Per-token reconstruction loss; fills `grads` when non-null.
  double loss(const data::VideoFeatures& video, const data::RelationQuery& query, num::Rng* dropout = nullptr,
              num::Gradients* grads = nullptr) const;

  /// Evaluation-mode attention maps.
  enc::AttentionMaps attend(const data::VideoFeatures& video, const data::RelationQuery& query) const;

  /// Writes `path` (parameter checkpoint) and `path + ".cfg"` (config + vocabulary).
  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  ModelConfig config_;
  data::Vocabulary vocab_;
  data::EmbeddingTable table_;
  num::ParameterSet params_;
};

/// Builds the embedding table a config describes.
data::EmbeddingTable make_embedding_table(const ModelConfig& config);

}  // namespace vrg
