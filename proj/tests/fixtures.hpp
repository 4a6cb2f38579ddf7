#pragma once

#include <random>
#include <string>
#include <vector>

#include "vrg/data/relation.hpp"
#include "vrg/data/video_features.hpp"
#include "vrg/data/vocabulary.hpp"
#include "vrg/model/model.hpp"

namespace fixtures {

inline vrg::ModelConfig tiny_config() {
  vrg::ModelConfig cfg;
  auto& e = cfg.encoder;
  e.frames = 6;
  e.clip_length = 3;
  e.regions = 4;
  e.appearance_dim = 6;
  e.region_dim = 8;
  e.word_dim = 10;
  e.word_embed_dim = 8;
  e.hidden = 16;
  e.attention_dim = 8;
  cfg.decoder.hidden = 16;
  cfg.decoder.token_embed_dim = 8;
  cfg.dropout = 0.2;
  return cfg;
}

inline const std::vector<std::string>& tiny_relations() {
  static const std::vector<std::string> rels{"dog-left-car", "person-move_toward-ball", "car-above-dog",
                                             "ball-away-person"};
  return rels;
}

/// 3 reserved tokens plus 9 words.
inline vrg::data::Vocabulary tiny_vocabulary() {
  std::vector<vrg::data::RelationQuery> qs;
  for (const auto& r : tiny_relations()) qs.push_back(vrg::data::tokenize_relation(r));
  return vrg::data::Vocabulary::from_relations(qs);
}

inline vrg::data::VideoFeatures random_video(const vrg::enc::EncoderConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  vrg::data::VideoFeatures v;
  v.video_id = "rand" + std::to_string(seed);
  v.frame_width = 64;
  v.frame_height = 64;
  v.total_frames = static_cast<std::uint32_t>(cfg.frames * 10);
  v.regions_per_frame = cfg.regions;
  v.appearance_dim = cfg.appearance_dim;
  for (std::size_t i = 0; i < cfg.frames; ++i) v.sampled_frame_indices.push_back(static_cast<std::uint32_t>(i * 10));
  for (std::size_t r = 0; r < cfg.frames * cfg.regions; ++r) {
    vrg::data::RegionProposal p;
    const double x = 48 * u(rng), y = 48 * u(rng);
    p.box = {x, y, x + 4 + 12 * u(rng), y + 4 + 12 * u(rng)};
    for (std::size_t k = 0; k < cfg.appearance_dim; ++k) p.appearance.push_back(2 * u(rng) - 1);
    v.regions.push_back(std::move(p));
  }
  return v;
}

inline vrg::Model tiny_model(std::uint64_t seed, vrg::ModelConfig cfg = tiny_config()) {
  auto table = vrg::make_embedding_table(cfg);
  return vrg::Model(cfg, tiny_vocabulary(), std::move(table), seed);
}

}  // namespace fixtures
