#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vrg/data/dataset.hpp"
#include "vrg/grounding/grounding.hpp"

namespace vrg::eval {

struct MetricConfig {
  std::vector<double> spatial_thresholds{0.3, 0.5, 0.7};
  double temporal_threshold = 0.5;

  /// Throws ConfigError unless every threshold lies in (0, 1].
  void validate() const;
};

double spatial_iou(const data::BBox& a, const data::BBox& b);

/// Frames of the temporal intersection whose boxes reach sIoU ≥ tau, divided by
/// the length of the temporal union.
double trajectory_overlap(const data::Trajectory& pred, const data::Trajectory& gt, double tau);

struct PairJudgement {
  bool subject = false;
  bool object = false;
  bool relation = false;  // subject and object both hit the same instance

  friend bool operator==(const PairJudgement&, const PairJudgement&) = default;
};

PairJudgement judge_pair(const grounding::GroundingResult& result, const std::vector<data::RelationInstance>& gt,
                         double tau, double temporal_threshold = 0.5);

using PairKey = std::pair<std::string, std::string>;  // (video_id, relation)
using GroundTruthIndex = std::map<PairKey, std::vector<data::RelationInstance>>;

/// Collects the ground truth carried by loaded samples. Throws FormatError for a
/// sample without any.
GroundTruthIndex index_ground_truth(const std::vector<data::VideoRelationSample>& samples);

struct AccuracyReport {
  std::vector<double> thresholds;
  std::vector<double> acc_s, acc_o, acc_r;  // one entry per threshold
  double average_s = 0.0, average_o = 0.0, average_r = 0.0;
  std::size_t samples = 0;
};

/// Throws DomainError when a result has no ground-truth entry.
AccuracyReport accuracy(const std::vector<grounding::GroundingResult>& results, const GroundTruthIndex& gt,
                        const MetricConfig& config = {});

/// Table layout: one row per measure, one column per threshold plus Average, in percent.
std::string format_report(const AccuracyReport& report);
/// One JSON object per line: {"tau":..,"acc_s":..,"acc_o":..,"acc_r":..,"samples":..}, last line tau "average".
std::string report_records(const AccuracyReport& report);

/// Test samples whose full triplet never occurs in training while each of its
/// subject, predicate and object does.
std::vector<data::VideoRelationSample> zero_shot_split(const std::vector<data::RelationQuery>& train_relations,
                                                       const std::vector<data::VideoRelationSample>& test);

/// Predicate membership in the static and dynamic lists of the VidVRD taxonomy.
/// Multi-word predicates are matched with their words joined by spaces.
bool is_static_predicate(const data::Tokens& predicate);
bool is_dynamic_predicate(const data::Tokens& predicate);

enum class PredicateKind { Static, Dynamic };
std::vector<data::VideoRelationSample> filter_predicates(const std::vector<data::VideoRelationSample>& samples,
                                                         PredicateKind kind);

/// Random attention maps pushed through the grounding pipeline: one result per sample.
std::vector<grounding::GroundingResult> random_baseline(const std::vector<data::VideoRelationSample>& samples,
                                                        std::size_t clip_length, double sigma, std::uint64_t seed);

}  // namespace vrg::eval
