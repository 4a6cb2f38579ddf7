#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vrg/data/relation.hpp"
#include "vrg/data/trajectory.hpp"
#include "vrg/data/video_features.hpp"

namespace vrg::data {

/// One manifest row: `video_id <TAB> feature path <TAB> relation [<TAB> gt path]`.
/// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  std::string video_id;
  std::string feature_path;
  std::string relation;
  std::string gt_path;  // empty when absent
};

std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// A ground-truth relation instance: paired subject/object trajectories.
struct RelationInstance {
  Trajectory subject;
  Trajectory object;
};

/// Ground truth for one video, keyed by relation string.
using GroundTruth = std::map<std::string, std::vector<RelationInstance>>;

// Text layout: header "vrg-gt 1", then one line per trajectory:
// `<relation> <instance> <subject|object> <start> <end> x1 y1 x2 y2 ...`.
GroundTruth read_ground_truth(const std::string& path);
void write_ground_truth(const std::string& path, const GroundTruth& gt);

struct VideoRelationSample {
  std::string video_id;
  RelationQuery query;
  std::shared_ptr<const VideoFeatures> features;
  /// Evaluation only. Never populated on the training path.
  std::optional<std::vector<RelationInstance>> ground_truth;
};

struct LoadOptions {
  bool with_ground_truth = false;
};

/// Loads every manifest row; feature files shared by several rows are read once.
std::vector<VideoRelationSample> load_samples(const std::string& manifest_path, LoadOptions options = {});

/// Copies of the samples with ground truth removed.
std::vector<VideoRelationSample> strip_ground_truth(std::vector<VideoRelationSample> samples);

std::string resolve_path(const std::string& base_file, const std::string& path);

}  // namespace vrg::data
