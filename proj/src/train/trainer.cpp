#include "vrg/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <set>

#include "vrg/error.hpp"
#include "vrg/eval/metrics.hpp"
#include "vrg/grounding/grounding.hpp"
#include "vrg/numerics/adam.hpp"
#include "vrg/numerics/checkpoint.hpp"
#include "vrg/util/parallel.hpp"

namespace vrg::train {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train: lr must be positive");
  if (batch == 0) throw ConfigError("train: batch must be at least 1");
  if (max_epochs == 0) throw ConfigError("train: max_epochs must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must lie in [0, 1)");
  if (patience == 0) throw ConfigError("train: patience must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("train: validation fraction must lie in (0, 1)");
  }
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be positive");
}

ModelConfig apply_flags(ModelConfig mc, const TrainConfig& config) {
  mc.encoder.use_msg = config.use_msg;
  mc.encoder.use_clip = config.use_clip;
  mc.encoder.use_tau = config.use_tau;
  mc.encoder.use_predicate = config.use_predicate;
  mc.dropout = config.dropout;
  return mc;
}

std::pair<std::vector<data::VideoRelationSample>, std::vector<data::VideoRelationSample>> validation_split(
    const std::vector<data::VideoRelationSample>& samples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw DomainError("validation_split: fraction must lie in (0, 1)");
  std::vector<std::string> videos;
  std::set<std::string> seen;
  for (const auto& s : samples) {
    if (seen.insert(s.video_id).second) videos.push_back(s.video_id);
  }
  std::sort(videos.begin(), videos.end());
  num::Rng rng(num::derive_seed(seed, "validation-split"));
  std::shuffle(videos.begin(), videos.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(videos.size())));
  if (n_val == 0 || n_val >= videos.size()) {
    throw DomainError("validation_split: " + std::to_string(videos.size()) + " video(s) cannot be split at fraction " +
                      std::to_string(fraction));
  }
  const std::set<std::string> val_ids(videos.begin(), videos.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::pair<std::vector<data::VideoRelationSample>, std::vector<data::VideoRelationSample>> out;
  for (const auto& s : samples) (val_ids.count(s.video_id) ? out.second : out.first).push_back(s);
  return out;
}

double mean_loss(const Model& model, const std::vector<data::VideoRelationSample>& samples, std::size_t jobs) {
  if (samples.empty()) return 0.0;
  std::vector<double> losses(samples.size());
  util::parallel_for(samples.size(), jobs,
                     [&](std::size_t i) { losses[i] = model.loss(*samples[i].features, samples[i].query); });
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(samples.size());
}

namespace {

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string log_line(std::size_t epoch, const char* split, double loss) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu %s %.17g %s", epoch, split, loss, timestamp().c_str());
  return buf;
}

}  // namespace

TrainResult train(const std::vector<data::VideoRelationSample>& samples, const TrainConfig& config,
                  const ModelConfig& model_config, const LogSink& log) {
  config.validate();
  if (samples.empty()) throw DomainError("train: no samples");
  const auto start = std::chrono::steady_clock::now();
  const auto stripped = data::strip_ground_truth(samples);
  auto [train_set, val_set] = validation_split(stripped, config.validation_fraction, config.seed);

  std::vector<data::RelationQuery> queries;
  for (const auto& s : stripped) queries.push_back(s.query);
  const auto mc = apply_flags(model_config, config);
  Model model(mc, data::Vocabulary::from_relations(queries), make_embedding_table(mc),
              num::derive_seed(config.seed, "model"));

  std::ofstream log_file;
  if (!config.log_path.empty()) {
    log_file.open(config.log_path, std::ios::trunc);
    if (!log_file) throw FormatError("cannot write " + config.log_path);
  }
  auto emit = [&](const std::string& line) {
    if (log_file) log_file << line << '\n' << std::flush;
    if (log) log(line);
  };

  TrainReport report;
  report.train_samples = train_set.size();
  report.validation_samples = val_set.size();
  report.checkpoint_path = config.checkpoint_path;
  num::AdamState adam;
  adam.hyper.lr = config.lr;
  num::ParameterSet best = model.parameters();
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    num::Rng shuffle_rng(num::derive_seed(config.seed, "shuffle/" + std::to_string(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    for (std::size_t b0 = 0, step = 0; b0 < order.size(); b0 += config.batch, ++step) {
      const std::size_t bn = std::min(config.batch, order.size() - b0);
      std::vector<double> losses(bn);
      std::vector<num::Gradients> grads(bn);
      util::parallel_for(bn, config.jobs, [&](std::size_t k) {
        const auto& s = train_set[order[b0 + k]];
        num::Rng drop(num::derive_seed(config.seed, "dropout/" + std::to_string(epoch) + "/" + std::to_string(b0 + k)));
        losses[k] = model.loss(*s.features, s.query, &drop, &grads[k]);
      });
      num::Gradients total;
      double batch_loss = 0.0;
      for (std::size_t k = 0; k < bn; ++k) {
        if (!std::isfinite(losses[k])) {
          throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + " step " +
                             std::to_string(step) + " (" + train_set[order[b0 + k]].video_id + " " +
                             train_set[order[b0 + k]].query.raw + ")");
        }
        num::accumulate(total, grads[k], 1.0 / static_cast<double>(bn));
        batch_loss += losses[k];
      }
      epoch_loss += batch_loss;
      num::clip_global_norm(total, config.clip_norm);
      num::adam_update(model.parameters(), total, adam);
    }
    epoch_loss /= static_cast<double>(order.size());
    const double val = mean_loss(model, val_set, config.jobs);
    if (!std::isfinite(val)) throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    report.train_loss.push_back(epoch_loss);
    report.validation_loss.push_back(val);
    emit(log_line(epoch, "train", epoch_loss));
    emit(log_line(epoch, "validation", val));

    if (val < best_val) {
      best_val = val;
      report.best_epoch = epoch;
      best = model.parameters();
      since_best = 0;
      if (!config.checkpoint_path.empty()) model.save(config.checkpoint_path);
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  num::assign_parameters(model.parameters(), best);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(model), std::move(report)};
}

SigmaSearch search_sigma(const Model& model, const std::vector<data::VideoRelationSample>& validation,
                         std::vector<double> grid, std::size_t jobs) {
  if (grid.empty()) throw DomainError("search_sigma: empty grid");
  std::sort(grid.begin(), grid.end());
  const auto gt = eval::index_ground_truth(validation);
  std::vector<enc::AttentionMaps> maps(validation.size());
  util::parallel_for(validation.size(), jobs, [&](std::size_t i) {
    maps[i] = model.attend(*validation[i].features, validation[i].query);
  });
  SigmaSearch out;
  out.grid = grid;
  double best = -1.0;
  for (double sigma : grid) {
    std::vector<grounding::GroundingResult> results(validation.size());
    util::parallel_for(validation.size(), jobs, [&](std::size_t i) {
      results[i] = grounding::ground_from_maps(maps[i], *validation[i].features, sigma);
      results[i].relation = validation[i].query.raw;
    });
    const double acc = eval::accuracy(results, gt).average_r;
    out.acc_r.push_back(acc);
    if (acc > best) {
      best = acc;
      out.best = sigma;
    }
  }
  return out;
}

}  // namespace vrg::train
