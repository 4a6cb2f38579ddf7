#include "vrg/data/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "vrg/error.hpp"

namespace vrg::data {

namespace fs = std::filesystem;

bool Trajectory::valid() const {
  if (end_frame < start_frame) return false;
  if (static_cast<std::int64_t>(boxes.size()) != length()) return false;
  for (const auto& b : boxes)
    if (!b.valid()) return false;
  return true;
}

std::string resolve_path(const std::string& base_file, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_file).parent_path() / p).string();
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 4) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected 3 or 4 tab-separated fields, found " +
                        std::to_string(fields.size()));
    }
    ManifestEntry e{fields[0], fields[1], fields[2], fields.size() == 4 ? fields[3] : ""};
    if (e.video_id.empty() || e.feature_path.empty() || e.relation.empty()) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": empty required field");
    }
    tokenize_relation(e.relation);
    out.push_back(std::move(e));
  }
  return out;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest " + path);
  out << "# video_id\tfeatures\trelation\tground_truth\n";
  for (const auto& e : entries) {
    out << e.video_id << '\t' << e.feature_path << '\t' << e.relation;
    if (!e.gt_path.empty()) out << '\t' << e.gt_path;
    out << '\n';
  }
}

GroundTruth read_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open ground truth " + path);
  std::string line;
  if (!std::getline(in, line) || line != "vrg-gt 1") throw FormatError(path + ": missing 'vrg-gt 1' header");

  // relation -> instance id -> partially filled instance
  std::map<std::string, std::map<std::size_t, std::pair<std::optional<Trajectory>, std::optional<Trajectory>>>>
      partial;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string relation, role;
    std::size_t instance = 0;
    Trajectory t;
    if (!(ls >> relation >> instance >> role >> t.start_frame >> t.end_frame)) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": malformed trajectory header");
    }
    if (t.end_frame < t.start_frame) throw FormatError(path + ":" + std::to_string(lineno) + ": end before start");
    for (std::int64_t f = t.start_frame; f <= t.end_frame; ++f) {
      BBox b;
      if (!(ls >> b.x_min >> b.y_min >> b.x_max >> b.y_max)) {
        throw FormatError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.length()) +
                          " boxes");
      }
      t.boxes.push_back(b);
    }
    std::string extra;
    if (ls >> extra) throw FormatError(path + ":" + std::to_string(lineno) + ": trailing values");
    if (!t.valid()) throw FormatError(path + ":" + std::to_string(lineno) + ": invalid trajectory");
    auto& slot = partial[relation][instance];
    if (role == "subject") {
      slot.first = std::move(t);
    } else if (role == "object") {
      slot.second = std::move(t);
    } else {
      throw FormatError(path + ":" + std::to_string(lineno) + ": unknown role '" + role + "'");
    }
  }

  GroundTruth gt;
  for (auto& [relation, instances] : partial) {
    for (auto& [id, pair] : instances) {
      if (!pair.first || !pair.second) {
        throw FormatError(path + ": instance " + std::to_string(id) + " of " + relation +
                          " lacks a subject or object trajectory");
      }
      gt[relation].push_back({std::move(*pair.first), std::move(*pair.second)});
    }
  }
  return gt;
}

void write_ground_truth(const std::string& path, const GroundTruth& gt) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write ground truth " + path);
  out << "vrg-gt 1\n";
  for (const auto& [relation, instances] : gt) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
      for (const auto& [role, traj] : {std::pair<const char*, const Trajectory*>{"subject", &instances[i].subject},
                                       {"object", &instances[i].object}}) {
        out << relation << ' ' << i << ' ' << role << ' ' << traj->start_frame << ' ' << traj->end_frame;
        for (const auto& b : traj->boxes) {
          out << ' ' << fmt_double(b.x_min) << ' ' << fmt_double(b.y_min) << ' ' << fmt_double(b.x_max) << ' '
              << fmt_double(b.y_max);
        }
        out << '\n';
      }
    }
  }
}

std::vector<VideoRelationSample> load_samples(const std::string& manifest_path, LoadOptions options) {
  const auto entries = read_manifest(manifest_path);
  std::unordered_map<std::string, std::shared_ptr<const VideoFeatures>> cache;
  std::unordered_map<std::string, GroundTruth> gt_cache;
  std::vector<VideoRelationSample> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    const auto feat_path = resolve_path(manifest_path, e.feature_path);
    auto& feat = cache[feat_path];
    if (!feat) feat = std::make_shared<VideoFeatures>(load_video_features(feat_path, e.video_id).video);

    VideoRelationSample s;
    s.video_id = e.video_id;
    s.query = tokenize_relation(e.relation);
    s.features = feat;
    if (options.with_ground_truth) {
      if (e.gt_path.empty()) throw FormatError(manifest_path + ": no ground truth listed for " + e.video_id);
      const auto gt_path = resolve_path(manifest_path, e.gt_path);
      auto it = gt_cache.find(gt_path);
      if (it == gt_cache.end()) it = gt_cache.emplace(gt_path, read_ground_truth(gt_path)).first;
      auto rit = it->second.find(e.relation);
      if (rit == it->second.end() || rit->second.empty()) {
        throw FormatError(gt_path + ": no instances for relation " + e.relation);
      }
      s.ground_truth = rit->second;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<VideoRelationSample> strip_ground_truth(std::vector<VideoRelationSample> samples) {
  for (auto& s : samples) s.ground_truth.reset();
  return samples;
}

}  // namespace vrg::data
