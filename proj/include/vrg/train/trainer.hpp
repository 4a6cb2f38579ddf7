#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vrg/data/dataset.hpp"
#include "vrg/model/model.hpp"

namespace vrg::train {

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch = 32;
  std::size_t max_epochs = 20;
  double dropout = 0.2;
  std::size_t patience = 3;
  std::uint64_t seed = 0;
  bool use_msg = true;
  bool use_clip = true;
  bool use_tau = true;
  bool use_predicate = true;
  double validation_fraction = 0.1;
  double clip_norm = 5.0;
  std::size_t jobs = 1;
  std::string checkpoint_path;  // empty: keep the best weights in memory only
  std::string log_path;         // empty: no log file

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

struct TrainReport {
  std::vector<double> train_loss;       // per epoch
  std::vector<double> validation_loss;  // per epoch
  std::size_t best_epoch = 0;           // 0-based
  std::string checkpoint_path;
  double wall_seconds = 0.0;
  std::size_t train_samples = 0, validation_samples = 0;
};

struct TrainResult {
  Model model;  // best-epoch weights
  TrainReport report;
};

/// Applies the ablation flags and dropout of `config` to a model configuration.
ModelConfig apply_flags(ModelConfig model_config, const TrainConfig& config);

/// Seeded partition by video_id. Throws DomainError when a side would be empty.
std::pair<std::vector<data::VideoRelationSample>, std::vector<data::VideoRelationSample>> validation_split(
    const std::vector<data::VideoRelationSample>& samples, double fraction, std::uint64_t seed);

using LogSink = std::function<void(const std::string&)>;

/// Reconstruction training with early stopping on validation loss. Ground truth is
/// stripped before anything else happens.
TrainResult train(const std::vector<data::VideoRelationSample>& samples, const TrainConfig& config,
                  const ModelConfig& model_config, const LogSink& log = {});

/// Mean evaluation-mode loss over samples.
double mean_loss(const Model& model, const std::vector<data::VideoRelationSample>& samples, std::size_t jobs = 1);

inline const std::vector<double>& default_sigma_grid() {
  static const std::vector<double> g{0.01, 0.02, 0.03, 0.04, 0.05};
  return g;
}

struct SigmaSearch {
  double best = 0.0;
  std::vector<double> grid;
  std::vector<double> acc_r;  // Average Acc_R per grid value
};

/// σ maximizing Average Acc_R on GT-bearing validation samples; ties go to the smaller σ.
SigmaSearch search_sigma(const Model& model, const std::vector<data::VideoRelationSample>& validation,
                         std::vector<double> grid = default_sigma_grid(), std::size_t jobs = 1);

}  // namespace vrg::train
