#include "vrg/data/video_features.hpp"

#include <cmath>

#include "vrg/binary_io.hpp"
#include "vrg/error.hpp"

namespace vrg::data {

void VideoFeatures::validate() const {
  const auto n = sampled_frame_indices.size();
  if (n == 0) throw FormatError(video_id + ": no sampled frames");
  if (regions_per_frame == 0) throw FormatError(video_id + ": zero regions per frame");
  if (!(frame_width > 0.0) || !(frame_height > 0.0)) throw FormatError(video_id + ": non-positive frame size");
  if (regions.size() != n * regions_per_frame) {
    throw FormatError(video_id + ": expected " + std::to_string(n * regions_per_frame) + " regions, found " +
                      std::to_string(regions.size()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sampled_frame_indices[i] >= total_frames) {
      throw FormatError(video_id + ": sampled frame " + std::to_string(sampled_frame_indices[i]) +
                        " outside [0, " + std::to_string(total_frames) + ")");
    }
    if (i > 0 && sampled_frame_indices[i] <= sampled_frame_indices[i - 1]) {
      throw FormatError(video_id + ": sampled frame indices not strictly increasing");
    }
  }
  for (const auto& r : regions) {
    if (!r.box.valid()) throw FormatError(video_id + ": invalid box");
    if (r.appearance.size() != appearance_dim) {
      throw FormatError(video_id + ": appearance dimension " + std::to_string(r.appearance.size()) +
                        " differs from declared " + std::to_string(appearance_dim));
    }
    for (double v : r.appearance)
      if (!std::isfinite(v)) throw FormatError(video_id + ": non-finite appearance value");
  }
}

std::vector<unsigned char> encode_video_features(const VideoFeatures& video) {
  video.validate();
  io::ByteWriter w;
  w.put_bytes("VRGV");
  w.put<std::uint32_t>(kFeatureVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.frame_count()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.regions_per_frame));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(video.appearance_dim));
  w.put<float>(static_cast<float>(video.frame_width));
  w.put<float>(static_cast<float>(video.frame_height));
  w.put<std::uint32_t>(video.total_frames);
  for (auto idx : video.sampled_frame_indices) w.put<std::uint32_t>(idx);
  for (const auto& r : video.regions) {
    for (double v : {r.box.x_min, r.box.y_min, r.box.x_max, r.box.y_max}) w.put<float>(static_cast<float>(v));
    for (double v : r.appearance) w.put<float>(static_cast<float>(v));
  }
  return w.bytes();
}

LoadedVideo decode_video_features(const std::vector<unsigned char>& bytes, const std::string& video_id,
                                  const std::string& context) {
  io::ByteReader r(bytes, context);
  if (r.get_bytes(4) != "VRGV") throw FormatError(context + ": bad magic, expected VRGV");
  const auto version = r.get<std::uint32_t>();
  if (version != kFeatureVersion) throw FormatError(context + ": unsupported version " + std::to_string(version));

  LoadedVideo out;
  VideoFeatures& v = out.video;
  v.video_id = video_id;
  const auto n = r.get<std::uint32_t>();
  v.regions_per_frame = r.get<std::uint32_t>();
  v.appearance_dim = r.get<std::uint32_t>();
  v.frame_width = r.get<float>();
  v.frame_height = r.get<float>();
  v.total_frames = r.get<std::uint32_t>();
  if (n == 0 || v.regions_per_frame == 0) throw FormatError(context + ": header declares an empty grid");

  const std::size_t record = (4 + v.appearance_dim) * sizeof(float);
  const std::size_t expected = r.position() + n * sizeof(std::uint32_t) + n * v.regions_per_frame * record;
  if (bytes.size() != expected) {
    throw FormatError(context + ": expected " + std::to_string(expected) + " bytes for N=" + std::to_string(n) +
                      " M=" + std::to_string(v.regions_per_frame) + " d_app=" + std::to_string(v.appearance_dim) +
                      ", file has " + std::to_string(bytes.size()));
  }

  v.sampled_frame_indices.resize(n);
  for (auto& idx : v.sampled_frame_indices) idx = r.get<std::uint32_t>();
  v.regions.resize(static_cast<std::size_t>(n) * v.regions_per_frame);
  for (auto& reg : v.regions) {
    reg.box.x_min = r.get<float>();
    reg.box.y_min = r.get<float>();
    reg.box.x_max = r.get<float>();
    reg.box.y_max = r.get<float>();
    reg.appearance.resize(v.appearance_dim);
    for (auto& a : reg.appearance) a = r.get<float>();
    if (clamp_to_frame(reg.box, v.frame_width, v.frame_height)) ++out.clamped_boxes;
  }
  v.validate();
  return out;
}

void save_video_features(const std::string& path, const VideoFeatures& video) {
  io::write_file(path, encode_video_features(video));
}

LoadedVideo load_video_features(const std::string& path, const std::string& video_id) {
  return decode_video_features(io::read_file(path), video_id, path);
}

}  // namespace vrg::data
