#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "vrg/eval/metrics.hpp"
#include "vrg/model/model.hpp"
#include "vrg/train/trainer.hpp"

namespace vrg::cli {

struct Settings {
  ModelConfig model;
  train::TrainConfig train;
  eval::MetricConfig metric;
  double sigma = 0.04;
  std::set<std::string> explicit_keys;  // keys set by a file or a flag

  Settings();
};

/// Sets one flat key. Throws ConfigError naming an unknown key or a bad value.
void set_key(Settings& settings, const std::string& key, const std::string& value);

/// Defaults overridden by the key=value lines of `path`; an empty path gives the defaults.
/// Blank lines and lines starting with '#' are skipped.
Settings load_config(const std::string& path);

/// Ablation switches applied after file and flag values. --no-clip lowers σ to 0.0001
/// unless σ was given explicitly.
void apply_ablations(Settings& settings, bool no_msg, bool no_clip, bool no_tau, bool co_occur);

/// Keys accepted by set_key, in documentation order.
const std::vector<std::string>& config_keys();

/// Entry point behind the vrg executable. Exit code 0 on success, 1 on a usage error,
/// 2 on a runtime error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vrg::cli
