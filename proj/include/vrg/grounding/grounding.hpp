#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vrg/data/bbox.hpp"
#include "vrg/data/dataset.hpp"
#include "vrg/data/trajectory.hpp"
#include "vrg/data/video_features.hpp"
#include "vrg/encoder/encoder.hpp"

namespace vrg {
class Model;
}

namespace vrg::grounding {

/// Kept frames merge into one segment while their original-frame distance is at most this.
inline constexpr std::int64_t kGroupGap = 10;
/// Allowed range of the linking distance D.
inline constexpr double kMinLinkDistance = 1.0;
inline constexpr double kMaxLinkDistance = 10.0;

/// β_i = β_l1[i] + β_l2[i / L] (0-based), one entry per sampled frame.
std::vector<double> fuse_temporal(const std::vector<double>& beta_frame, const std::vector<double>& beta_clip,
                                  std::size_t clip_length);

/// Positions (into the sampled-frame list) of one candidate segment, strictly increasing.
using CandidateSegment = std::vector<std::size_t>;

/// Keeps frames with β_i ≥ σ and groups them by original-frame gap. Falls back to
/// the single argmax frame when nothing survives.
std::vector<CandidateSegment> threshold_segments(const std::vector<double>& beta, double sigma,
                                                 const std::vector<std::uint32_t>& frame_indices,
                                                 std::int64_t max_gap = kGroupGap);

/// α_p + α_q + IoU(box_p, box_q) / D.
double link_score(double alpha_p, double alpha_q, const data::BBox& box_p, const data::BBox& box_q, double distance);

/// One sampled frame of a segment as the linker sees it.
struct LinkFrame {
  std::int64_t frame = 0;  // original-frame index
  std::vector<double> alpha;
  std::vector<data::BBox> boxes;
};

struct LinkPath {
  std::vector<std::size_t> regions;  // chosen region per frame
  double score = 0.0;                // mean link score; 2·α_max for a single frame
};

/// Dynamic programming over region choices. Ties go to the lower region index,
/// resolved from the last frame backwards.
LinkPath viterbi_link(const std::vector<LinkFrame>& frames);

/// Linear interpolation between anchor boxes onto every original frame of the span.
data::Trajectory interpolate(const std::vector<std::int64_t>& frames, const std::vector<data::BBox>& boxes);

struct GroundingResult {
  std::string video_id;
  std::string relation;
  data::Trajectory subject;
  data::Trajectory object;
  double score = 0.0;
  std::vector<std::size_t> frames;  // kept sampled-frame positions
  std::vector<std::size_t> subject_regions;
  std::vector<std::size_t> object_regions;
};

/// Links one segment for both entities and scores it by the mean of the two path scores.
GroundingResult link_segment(const enc::AttentionMaps& maps, const data::VideoFeatures& video,
                             const CandidateSegment& segment);

/// Everything after the encoder: fuse, threshold, link each segment, keep the best.
/// The clip length is N / H of the maps.
GroundingResult ground_from_maps(const enc::AttentionMaps& maps, const data::VideoFeatures& video, double sigma);

GroundingResult ground(const Model& model, const data::VideoFeatures& video, const data::RelationQuery& query,
                       double sigma);

/// One result per sample, in sample order.
std::vector<GroundingResult> ground_all(const Model& model, const std::vector<data::VideoRelationSample>& samples,
                                        double sigma, std::size_t jobs = 1);

// Text layout: header "vrg-results 1", then one tab-separated line per result:
// video_id, relation, start, end, score, subject boxes, object boxes (space-separated x1 y1 x2 y2 per frame).
void write_results(const std::string& path, const std::vector<GroundingResult>& results);
std::vector<GroundingResult> read_results(const std::string& path);

}  // namespace vrg::grounding
