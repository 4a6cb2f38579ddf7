#include "vrg/eval/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "vrg/error.hpp"
#include "vrg/numerics/parameters.hpp"

namespace vrg::eval {

void MetricConfig::validate() const {
  if (spatial_thresholds.empty()) throw ConfigError("metric: no spatial thresholds");
  for (double t : spatial_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("metric: spatial threshold " + std::to_string(t) + " not in (0, 1]");
  }
  if (!(temporal_threshold > 0.0 && temporal_threshold <= 1.0)) {
    throw ConfigError("metric: temporal threshold not in (0, 1]");
  }
}

double spatial_iou(const data::BBox& a, const data::BBox& b) { return data::iou(a, b); }

double trajectory_overlap(const data::Trajectory& pred, const data::Trajectory& gt, double tau) {
  const auto lo = std::max(pred.start_frame, gt.start_frame);
  const auto hi = std::min(pred.end_frame, gt.end_frame);
  const auto inter = std::max<std::int64_t>(0, hi - lo + 1);
  const auto uni = pred.length() + gt.length() - inter;
  if (uni <= 0) return 0.0;
  std::int64_t hits = 0;
  for (auto f = lo; f <= hi; ++f) hits += spatial_iou(pred.at(f), gt.at(f)) >= tau;
  return static_cast<double>(hits) / static_cast<double>(uni);
}

PairJudgement judge_pair(const grounding::GroundingResult& result, const std::vector<data::RelationInstance>& gt,
                         double tau, double temporal_threshold) {
  if (gt.empty()) throw DomainError("judge_pair: no ground-truth instances for " + result.video_id);
  PairJudgement j;
  for (const auto& inst : gt) {
    const bool s = trajectory_overlap(result.subject, inst.subject, tau) > temporal_threshold;
    const bool o = trajectory_overlap(result.object, inst.object, tau) > temporal_threshold;
    j.subject = j.subject || s;
    j.object = j.object || o;
    j.relation = j.relation || (s && o);
  }
  return j;
}

GroundTruthIndex index_ground_truth(const std::vector<data::VideoRelationSample>& samples) {
  GroundTruthIndex index;
  for (const auto& s : samples) {
    if (!s.ground_truth) throw FormatError("sample " + s.video_id + " " + s.query.raw + " carries no ground truth");
    index[{s.video_id, s.query.raw}] = *s.ground_truth;
  }
  return index;
}

AccuracyReport accuracy(const std::vector<grounding::GroundingResult>& results, const GroundTruthIndex& gt,
                        const MetricConfig& config) {
  config.validate();
  AccuracyReport rep;
  rep.thresholds = config.spatial_thresholds;
  rep.samples = results.size();
  const auto t = rep.thresholds.size();
  std::vector<std::size_t> hs(t, 0), ho(t, 0), hr(t, 0);
  for (const auto& r : results) {
    auto it = gt.find({r.video_id, r.relation});
    if (it == gt.end()) throw DomainError("no ground truth for " + r.video_id + " / " + r.relation);
    for (std::size_t k = 0; k < t; ++k) {
      const auto j = judge_pair(r, it->second, rep.thresholds[k], config.temporal_threshold);
      hs[k] += j.subject;
      ho[k] += j.object;
      hr[k] += j.relation;
    }
  }
  const double n = results.empty() ? 1.0 : static_cast<double>(results.size());
  for (std::size_t k = 0; k < t; ++k) {
    rep.acc_s.push_back(static_cast<double>(hs[k]) / n);
    rep.acc_o.push_back(static_cast<double>(ho[k]) / n);
    rep.acc_r.push_back(static_cast<double>(hr[k]) / n);
    rep.average_s += rep.acc_s.back() / static_cast<double>(t);
    rep.average_o += rep.acc_o.back() / static_cast<double>(t);
    rep.average_r += rep.acc_r.back() / static_cast<double>(t);
  }
  return rep;
}

std::string format_report(const AccuracyReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << std::left << std::setw(8) << "" << std::right;
  for (double tau : report.thresholds) {
    std::ostringstream h;
    h << "sIoU=" << tau;
    out << std::setw(12) << h.str();
  }
  out << std::setw(12) << "Average" << '\n';
  auto line = [&](const char* name, const std::vector<double>& v, double avg) {
    out << std::left << std::setw(8) << name << std::right;
    for (double x : v) out << std::setw(12) << 100.0 * x;
    out << std::setw(12) << 100.0 * avg << '\n';
  };
  line("Acc_S", report.acc_s, report.average_s);
  line("Acc_O", report.acc_o, report.average_o);
  line("Acc_R", report.acc_r, report.average_r);
  out << "samples " << report.samples << '\n';
  return out.str();
}

std::string report_records(const AccuracyReport& report) {
  std::string out;
  for (std::size_t k = 0; k < report.thresholds.size(); ++k) {
    nlohmann::json j{{"tau", report.thresholds[k]},
                     {"acc_s", report.acc_s[k]},
                     {"acc_o", report.acc_o[k]},
                     {"acc_r", report.acc_r[k]},
                     {"samples", report.samples}};
    out += j.dump() + '\n';
  }
  nlohmann::json avg{{"tau", "average"},
                     {"acc_s", report.average_s},
                     {"acc_o", report.average_o},
                     {"acc_r", report.average_r},
                     {"samples", report.samples}};
  out += avg.dump() + '\n';
  return out;
}

std::vector<data::VideoRelationSample> zero_shot_split(const std::vector<data::RelationQuery>& train_relations,
                                                       const std::vector<data::VideoRelationSample>& test) {
  std::set<std::string> triplets, subjects, predicates, objects;
  for (const auto& q : train_relations) {
    triplets.insert(data::format_relation(q.subject, q.predicate, q.object));
    subjects.insert(data::join_tokens(q.subject));
    predicates.insert(data::join_tokens(q.predicate));
    objects.insert(data::join_tokens(q.object));
  }
  // Components are pooled by role-free word so "dog" seen as an object counts for a subject too.
  std::set<std::string> entities = subjects;
  entities.insert(objects.begin(), objects.end());
  std::vector<data::VideoRelationSample> out;
  for (const auto& s : test) {
    const auto& q = s.query;
    if (triplets.count(data::format_relation(q.subject, q.predicate, q.object))) continue;
    if (!entities.count(data::join_tokens(q.subject)) || !predicates.count(data::join_tokens(q.predicate)) ||
        !entities.count(data::join_tokens(q.object))) {
      continue;
    }
    out.push_back(s);
  }
  return out;
}

namespace {

const std::set<std::string>& static_predicates() {
  static const std::set<std::string> s{
      "above",        "beneath",        "left",        "right",       "front",          "behind",
      "taller",       "larger",         "next to",     "inside",      "hold",           "bite",
      "lie above",    "lie beneath",    "lie left",    "lie right",   "lie inside",     "lie next to",
      "lie with",     "stand above",    "stand beneath", "stand left", "stand right",   "stand front",
      "stand behind", "stand next to",  "stand inside", "sit above",  "sit left",       "sit right",
      "sit front",    "sit behind",     "sit next to", "sit inside",  "stop above",     "stop beneath",
      "stop left",    "stop right",     "stop front",  "stop behind", "stop next to",   "stop with"};
  return s;
}

const std::set<std::string>& dynamic_predicates() {
  static const std::set<std::string> s{
      "swim behind", "walk away",    "fly behind",   "creep behind", "move left",    "touch",        "follow",
      "move away",   "walk with",    "move next to", "creep above",  "fall off",     "run with",     "swim front",
      "walk next to", "kick",        "creep right",  "watch",        "swim with",    "fly away",     "creep beneath",
      "run past",    "jump right",   "fly toward",   "creep left",   "run next to",  "jump front",   "jump beneath",
      "past",        "jump toward",  "walk beneath", "run away",     "run above",    "walk right",   "away",
      "move right",  "fly right",    "run front",    "run toward",   "jump past",    "jump above",   "move with",
      "swim beneath", "walk past",   "run right",    "creep away",   "move toward",  "feed",         "run left",
      "fly front",   "walk behind",  "fly above",    "fly next to",  "fight",        "walk above",   "jump behind",
      "fly with",    "jump next to", "run behind",   "move behind",  "swim right",   "swim next to", "move past",
      "pull",        "walk left",    "ride",         "move beneath", "toward",       "jump left",    "creep toward",
      "fly left",    "walk toward",  "chase",        "creep next to", "fly past",    "move front",   "run beneath",
      "creep front", "creep past",   "play",         "move above",   "faster",       "walk front",   "drive",
      "swim left",   "jump away",    "jump with"};
  return s;
}

std::string spaced(const data::Tokens& t) {
  std::string s;
  for (const auto& w : t) s += (s.empty() ? "" : " ") + w;
  return s;
}

}  // namespace

bool is_static_predicate(const data::Tokens& predicate) { return static_predicates().count(spaced(predicate)) != 0; }
bool is_dynamic_predicate(const data::Tokens& predicate) { return dynamic_predicates().count(spaced(predicate)) != 0; }

std::vector<data::VideoRelationSample> filter_predicates(const std::vector<data::VideoRelationSample>& samples,
                                                         PredicateKind kind) {
  std::vector<data::VideoRelationSample> out;
  for (const auto& s : samples) {
    const bool keep = kind == PredicateKind::Static ? is_static_predicate(s.query.predicate)
                                                    : is_dynamic_predicate(s.query.predicate);
    if (keep) out.push_back(s);
  }
  return out;
}

std::vector<grounding::GroundingResult> random_baseline(const std::vector<data::VideoRelationSample>& samples,
                                                        std::size_t clip_length, double sigma, std::uint64_t seed) {
  std::vector<grounding::GroundingResult> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto& v = *s.features;
    const auto n = v.frame_count();
    const auto m = v.regions_per_frame;
    if (clip_length == 0 || n % clip_length != 0) throw DimensionError("random baseline: clip length does not divide N");
    num::Rng rng(num::derive_seed(seed, "random-baseline/" + s.video_id + "/" + s.query.raw));
    std::exponential_distribution<double> e(1.0);
    auto simplex = [&](std::size_t rows, std::size_t cols) {
      num::Tensor t({rows, cols}, 0.0);
      for (std::size_t r = 0; r < rows; ++r) {
        double z = 0.0;
        for (std::size_t c = 0; c < cols; ++c) z += (t.at(r, c) = e(rng));
        for (std::size_t c = 0; c < cols; ++c) t.at(r, c) /= z;
      }
      return t;
    };
    enc::AttentionMaps maps;
    maps.alpha_subject = simplex(n, m);
    maps.alpha_object = simplex(n, m);
    maps.beta_frame = simplex(1, n);
    maps.beta_clip = simplex(1, n / clip_length);
    auto r = grounding::ground_from_maps(maps, v, sigma);
    r.relation = s.query.raw;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vrg::eval
