#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vrg/data/dataset.hpp"
#include "vrg/data/video_features.hpp"

namespace vrg::synth {

enum class Motion { Linear, Sinusoidal };

/// Geometric predicate thresholds, written to dataset.meta.
struct OracleThresholds {
  double center_gap = 10.0;     // px between centers for left/right/above/beneath
  double area_ratio = 1.5;      // larger/smaller
  double speed = 1.0;           // px per frame along the line between centers
  std::size_t min_span = 3;     // frames
};

struct SceneSpec {
  std::uint64_t seed = 0;
  double canvas = 256.0;
  std::size_t frames = 24;
  std::size_t min_entities = 3;
  std::size_t max_entities = 6;
  std::vector<std::string> categories{"person", "dog", "car", "ball", "horse", "bicycle"};
  double distractor_probability = 0.5;
  double appearance_noise = 0.1;
  double max_speed = 2.0;           // px per frame, per axis, linear motion
  double max_amplitude = 20.0;      // px, sinusoidal drift
  double min_period = 24.0;         // frames, sinusoidal drift; periods span [min, 3·min]
  std::size_t regions = 6;          // M
  bool shuffle_slots = false;       // false: entities keep their slot, fillers follow
  std::size_t appearance_dim = 8;   // ≥ categories + 1; the extra slot flags clutter
  /// Predicates offered as queries. The oracle also knows larger, smaller and chase.
  std::vector<std::string> query_predicates{"left", "right", "above", "beneath", "move_toward", "move_away"};
  std::size_t queries_per_scene = 2;
  OracleThresholds thresholds;

  /// Throws ConfigError on an inconsistent spec.
  void validate() const;
};

struct Entity {
  std::size_t id = 0;
  std::string category;
  Motion motion = Motion::Linear;
  std::vector<data::BBox> boxes;  // one per frame
};

struct OracleRelation {
  std::size_t subject = 0;
  std::string predicate;
  std::size_t object = 0;
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;

  friend bool operator==(const OracleRelation&, const OracleRelation&) = default;
};

struct Scene {
  data::VideoFeatures video;
  std::vector<Entity> entities;
  std::vector<OracleRelation> relations;
  bool has_distractor = false;
};

/// Every predicate the oracle evaluates.
const std::vector<std::string>& oracle_predicates();

/// Per-frame truth of `predicate` for subject a and object b.
std::vector<bool> predicate_track(const std::string& predicate, const std::vector<data::BBox>& a,
                                  const std::vector<data::BBox>& b, const OracleThresholds& th);

/// Maximal runs of true frames of at least `min_span` frames, as [start, end] pairs.
std::vector<std::pair<std::int64_t, std::int64_t>> maximal_spans(const std::vector<bool>& holds, std::size_t min_span);

/// All oracle relations among the given entities.
std::vector<OracleRelation> oracle_relations(const std::vector<Entity>& entities, const OracleThresholds& th);

Scene generate_scene(const SceneSpec& spec, const std::string& video_id = "scene");

/// "subject-predicate-object" using category names.
std::string relation_string(const Scene& scene, const OracleRelation& r);

/// Ground-truth instances of one triplet in a scene.
std::vector<data::RelationInstance> instances_of(const Scene& scene, const std::string& relation);

struct EmitOptions {
  std::size_t count = 0;
  std::size_t test_count = 0;          // last scenes by index go to test
  double zero_shot_fraction = 0.0;     // of test rows
  std::size_t jobs = 1;
};

struct EmitResult {
  std::string manifest;        // all rows
  std::string train_manifest;
  std::string test_manifest;
  std::vector<std::string> zero_shot_rows;  // "video_id<TAB>relation" of the constructed unseen test rows
};

/// Writes features/, gt/, scenes/ sidecars, manifest.tsv, train.tsv, test.tsv and dataset.meta.
EmitResult emit_dataset(const SceneSpec& spec, const EmitOptions& options, const std::string& out_dir);

}  // namespace vrg::synth
