#include "vrg/grounding/grounding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vrg/error.hpp"
#include "vrg/model/model.hpp"
#include "vrg/util/parallel.hpp"

namespace vrg::grounding {

std::vector<double> fuse_temporal(const std::vector<double>& beta_frame, const std::vector<double>& beta_clip,
                                  std::size_t clip_length) {
  if (clip_length == 0 || beta_frame.size() != beta_clip.size() * clip_length) {
    throw DimensionError("fuse_temporal: " + std::to_string(beta_frame.size()) + " frame weights do not split into " +
                         std::to_string(beta_clip.size()) + " clips of length " + std::to_string(clip_length));
  }
  std::vector<double> beta(beta_frame.size());
  for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = beta_frame[i] + beta_clip[i / clip_length];
  return beta;
}

std::vector<CandidateSegment> threshold_segments(const std::vector<double>& beta, double sigma,
                                                 const std::vector<std::uint32_t>& frame_indices,
                                                 std::int64_t max_gap) {
  if (beta.size() != frame_indices.size()) throw DimensionError("threshold_segments: beta/frame count mismatch");
  if (beta.empty()) throw DomainError("threshold_segments: no frames");
  if (!(sigma >= 0.0)) throw DomainError("threshold_segments: sigma must be non-negative");
  std::vector<CandidateSegment> segments;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] < sigma) continue;
    if (segments.empty() || static_cast<std::int64_t>(frame_indices[i]) -
                                    static_cast<std::int64_t>(frame_indices[segments.back().back()]) >
                                max_gap) {
      segments.emplace_back();
    }
    segments.back().push_back(i);
  }
  if (segments.empty()) {
    const auto best = std::max_element(beta.begin(), beta.end()) - beta.begin();
    segments.push_back({static_cast<std::size_t>(best)});
  }
  return segments;
}

double link_score(double alpha_p, double alpha_q, const data::BBox& box_p, const data::BBox& box_q, double distance) {
  if (!(distance >= kMinLinkDistance && distance <= kMaxLinkDistance)) {
    throw DomainError("link_score: distance " + std::to_string(distance) + " outside [1, 10]");
  }
  return alpha_p + alpha_q + data::iou(box_p, box_q) / distance;
}

LinkPath viterbi_link(const std::vector<LinkFrame>& frames) {
  if (frames.empty()) throw DomainError("viterbi_link: empty segment");
  for (const auto& f : frames) {
    if (f.alpha.empty() || f.alpha.size() != f.boxes.size()) throw DimensionError("viterbi_link: bad frame");
  }
  LinkPath path;
  if (frames.size() == 1) {
    const auto& a = frames[0].alpha;
    const auto best = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
    path.regions = {best};
    path.score = 2.0 * a[best];
    return path;
  }

  std::vector<double> delta(frames[0].alpha.size(), 0.0);
  std::vector<std::vector<std::size_t>> back(frames.size());
  for (std::size_t t = 1; t < frames.size(); ++t) {
    const auto& prev = frames[t - 1];
    const auto& cur = frames[t];
    const double dist = static_cast<double>(cur.frame - prev.frame);
    std::vector<double> next(cur.alpha.size(), -std::numeric_limits<double>::infinity());
    back[t].assign(cur.alpha.size(), 0);
    for (std::size_t j = 0; j < cur.alpha.size(); ++j) {
      for (std::size_t i = 0; i < prev.alpha.size(); ++i) {
        const double v = delta[i] + link_score(prev.alpha[i], cur.alpha[j], prev.boxes[i], cur.boxes[j], dist);
        if (v > next[j]) {
          next[j] = v;
          back[t][j] = i;
        }
      }
    }
    delta = std::move(next);
  }

  std::size_t state = static_cast<std::size_t>(std::max_element(delta.begin(), delta.end()) - delta.begin());
  path.score = delta[state] / static_cast<double>(frames.size() - 1);
  path.regions.assign(frames.size(), 0);
  for (std::size_t t = frames.size(); t-- > 0;) {
    path.regions[t] = state;
    if (t > 0) state = back[t][state];
  }
  return path;
}

data::Trajectory interpolate(const std::vector<std::int64_t>& frames, const std::vector<data::BBox>& boxes) {
  if (frames.empty() || frames.size() != boxes.size()) {
    throw DomainError("interpolate: need one box per anchor frame and at least one anchor");
  }
  for (std::size_t k = 1; k < frames.size(); ++k) {
    if (frames[k] <= frames[k - 1]) throw DomainError("interpolate: anchor frames are not strictly increasing");
  }
  data::Trajectory traj;
  traj.start_frame = frames.front();
  traj.end_frame = frames.back();
  traj.boxes.reserve(static_cast<std::size_t>(traj.length()));
  auto lerp = [](double a, double b, double t) {
    const double v = (1.0 - t) * a + t * b;
    return std::clamp(v, std::min(a, b), std::max(a, b));
  };
  traj.boxes.push_back(boxes.front());
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const auto& b0 = boxes[k];
    const auto& b1 = boxes[k + 1];
    const double span = static_cast<double>(frames[k + 1] - frames[k]);
    for (std::int64_t f = frames[k] + 1; f < frames[k + 1]; ++f) {
      const double t = static_cast<double>(f - frames[k]) / span;
      traj.boxes.push_back({lerp(b0.x_min, b1.x_min, t), lerp(b0.y_min, b1.y_min, t), lerp(b0.x_max, b1.x_max, t),
                            lerp(b0.y_max, b1.y_max, t)});
    }
    traj.boxes.push_back(b1);
  }
  return traj;
}

namespace {

std::vector<LinkFrame> link_frames(const num::Tensor& alpha, const data::VideoFeatures& video,
                                   const CandidateSegment& segment) {
  std::vector<LinkFrame> frames;
  for (auto pos : segment) {
    LinkFrame f;
    f.frame = video.sampled_frame_indices.at(pos);
    for (std::size_t j = 0; j < video.regions_per_frame; ++j) {
      f.alpha.push_back(alpha.at(pos, j));
      f.boxes.push_back(video.region(pos, j).box);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

data::Trajectory build_trajectory(const data::VideoFeatures& video, const CandidateSegment& segment,
                                  const std::vector<std::size_t>& regions) {
  std::vector<std::int64_t> frames;
  std::vector<data::BBox> boxes;
  for (std::size_t k = 0; k < segment.size(); ++k) {
    frames.push_back(video.sampled_frame_indices[segment[k]]);
    boxes.push_back(video.region(segment[k], regions[k]).box);
  }
  auto traj = interpolate(frames, boxes);
  for (auto& b : traj.boxes) data::clamp_to_frame(b, video.frame_width, video.frame_height);
  return traj;
}

std::vector<double> row(const num::Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

GroundingResult link_segment(const enc::AttentionMaps& maps, const data::VideoFeatures& video,
                             const CandidateSegment& segment) {
  const auto subj = viterbi_link(link_frames(maps.alpha_subject, video, segment));
  const auto obj = viterbi_link(link_frames(maps.alpha_object, video, segment));
  GroundingResult r;
  r.video_id = video.video_id;
  r.score = 0.5 * (subj.score + obj.score);
  r.frames = segment;
  r.subject_regions = subj.regions;
  r.object_regions = obj.regions;
  r.subject = build_trajectory(video, segment, subj.regions);
  r.object = build_trajectory(video, segment, obj.regions);
  return r;
}

GroundingResult ground_from_maps(const enc::AttentionMaps& maps, const data::VideoFeatures& video, double sigma) {
  const auto n = maps.beta_frame.size();
  const auto h = maps.beta_clip.size();
  if (h == 0 || n % h != 0) throw DimensionError("ground: frame attention does not split into clips");
  if (n != video.frame_count()) throw DimensionError("ground: attention covers a different number of frames");
  const auto beta = fuse_temporal(row(maps.beta_frame), row(maps.beta_clip), n / h);
  const auto segments = threshold_segments(beta, sigma, video.sampled_frame_indices);
  GroundingResult best;
  bool have = false;
  for (const auto& seg : segments) {
    auto r = link_segment(maps, video, seg);
    if (!have || r.score > best.score) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

GroundingResult ground(const Model& model, const data::VideoFeatures& video, const data::RelationQuery& query,
                       double sigma) {
  auto r = ground_from_maps(model.attend(video, query), video, sigma);
  r.relation = query.raw;
  return r;
}

std::vector<GroundingResult> ground_all(const Model& model, const std::vector<data::VideoRelationSample>& samples,
                                        double sigma, std::size_t jobs) {
  std::vector<GroundingResult> out(samples.size());
  util::parallel_for(samples.size(), jobs,
                     [&](std::size_t i) { out[i] = ground(model, *samples[i].features, samples[i].query, sigma); });
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_boxes(std::ostream& out, const data::Trajectory& t) {
  bool first = true;
  for (const auto& b : t.boxes) {
    for (double v : {b.x_min, b.y_min, b.x_max, b.y_max}) {
      if (!first) out << ' ';
      out << format_double(v);
      first = false;
    }
  }
}

std::vector<data::BBox> parse_boxes(const std::string& field, std::int64_t expected, const std::string& where) {
  std::istringstream in(field);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw ParseError(where + ": bad number '" + tok + "'");
    vals.push_back(v);
  }
  if (static_cast<std::int64_t>(vals.size()) != 4 * expected) {
    throw ParseError(where + ": expected " + std::to_string(4 * expected) + " coordinates, got " +
                     std::to_string(vals.size()));
  }
  std::vector<data::BBox> boxes;
  for (std::size_t i = 0; i < vals.size(); i += 4) boxes.push_back({vals[i], vals[i + 1], vals[i + 2], vals[i + 3]});
  return boxes;
}

}  // namespace

void write_results(const std::string& path, const std::vector<GroundingResult>& results) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out << "vrg-results 1\n";
  for (const auto& r : results) {
    out << r.video_id << '\t' << r.relation << '\t' << r.subject.start_frame << '\t' << r.subject.end_frame << '\t'
        << format_double(r.score) << '\t';
    put_boxes(out, r.subject);
    out << '\t';
    put_boxes(out, r.object);
    out << '\n';
  }
  if (!out) throw FormatError("short write to " + path);
}

std::vector<GroundingResult> read_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "vrg-results 1") throw FormatError(path + ": missing 'vrg-results 1' header");
  std::vector<GroundingResult> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() != 7) throw ParseError(where + ": expected 7 tab-separated fields");
    GroundingResult r;
    r.video_id = fields[0];
    r.relation = fields[1];
    try {
      r.subject.start_frame = r.object.start_frame = std::stoll(fields[2]);
      r.subject.end_frame = r.object.end_frame = std::stoll(fields[3]);
      r.score = std::stod(fields[4]);
    } catch (const std::exception&) {
      throw ParseError(where + ": bad span or score");
    }
    if (r.subject.end_frame < r.subject.start_frame) throw ParseError(where + ": span ends before it starts");
    r.subject.boxes = parse_boxes(fields[5], r.subject.length(), where);
    r.object.boxes = parse_boxes(fields[6], r.object.length(), where);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace vrg::grounding
