#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrg/data/bbox.hpp"

namespace vrg::data {

struct RegionProposal {
  BBox box;
  std::vector<double> appearance;
};

/// Per-frame region proposals for the N uniformly sampled frames of a video.
/// `regions` is frame-major: region j of sampled frame i is regions[i*M + j].
struct VideoFeatures {
  std::string video_id;
  double frame_width = 0.0;
  double frame_height = 0.0;
  std::uint32_t total_frames = 0;
  std::vector<std::uint32_t> sampled_frame_indices;
  std::size_t regions_per_frame = 0;
  std::size_t appearance_dim = 0;
  std::vector<RegionProposal> regions;

  std::size_t frame_count() const { return sampled_frame_indices.size(); }
  const RegionProposal& region(std::size_t frame, std::size_t j) const {
    return regions[frame * regions_per_frame + j];
  }
  RegionProposal& region(std::size_t frame, std::size_t j) { return regions[frame * regions_per_frame + j]; }

  /// Throws FormatError on any violated invariant.
  void validate() const;
};

// Binary layout (little-endian): "VRGV", u32 version, u32 N, u32 M, u32 d_app,
// f32 W, f32 H, u32 total_frames, N × u32 sampled indices, then N·M records of
// 4 × f32 box followed by d_app × f32 appearance.

inline constexpr std::uint32_t kFeatureVersion = 1;

struct LoadedVideo {
  VideoFeatures video;
  std::size_t clamped_boxes = 0;
};

std::vector<unsigned char> encode_video_features(const VideoFeatures& video);
LoadedVideo decode_video_features(const std::vector<unsigned char>& bytes, const std::string& video_id,
                                  const std::string& context = "features");

void save_video_features(const std::string& path, const VideoFeatures& video);
LoadedVideo load_video_features(const std::string& path, const std::string& video_id = "");

}  // namespace vrg::data
