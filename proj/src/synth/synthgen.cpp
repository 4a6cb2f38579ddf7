#include "vrg/synth/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "vrg/error.hpp"
#include "vrg/numerics/parameters.hpp"
#include "vrg/util/parallel.hpp"

namespace vrg::synth {

namespace fs = std::filesystem;

void SceneSpec::validate() const {
  if (!(canvas >= 64.0)) throw ConfigError("synth: canvas must be at least 64 px");
  if (frames < thresholds.min_span) throw ConfigError("synth: fewer frames than the minimum span");
  if (categories.size() < 2) throw ConfigError("synth: need at least two categories");
  if (max_entities < 2) throw DomainError("synth: a scene needs at least two entities to hold a relation");
  if (min_entities < 2 || min_entities > max_entities) throw ConfigError("synth: bad entity count range");
  if (max_entities > regions) throw ConfigError("synth: more entities than region slots");
  if (max_entities > categories.size() + 1) throw ConfigError("synth: not enough categories for the entity count");
  if (appearance_dim < categories.size() + 1) throw ConfigError("synth: appearance_dim must exceed the category count");
  if (!(distractor_probability >= 0.0 && distractor_probability <= 1.0)) {
    throw ConfigError("synth: distractor probability outside [0, 1]");
  }
  if (!(appearance_noise >= 0.0)) throw ConfigError("synth: negative appearance noise");
  if (!(max_speed >= 0.0) || !(max_amplitude >= 0.0) || !(min_period > 0.0)) throw ConfigError("synth: bad motion range");
  if (2.0 * max_amplitude + 56.0 > canvas) throw ConfigError("synth: sinusoidal amplitude does not fit the canvas");
  if (query_predicates.empty() || queries_per_scene == 0) throw ConfigError("synth: no queries requested");
  const auto& known = oracle_predicates();
  for (const auto& p : query_predicates) {
    if (std::find(known.begin(), known.end(), p) == known.end()) throw ConfigError("synth: unknown predicate " + p);
  }
}

const std::vector<std::string>& oracle_predicates() {
  static const std::vector<std::string> p{"left",    "right",       "above",     "beneath", "larger",
                                          "smaller", "move_toward", "move_away", "chase"};
  return p;
}

namespace {

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

data::BBox round_box(const data::BBox& b) { return {f32(b.x_min), f32(b.y_min), f32(b.x_max), f32(b.y_max)}; }

// Velocity of a box centre at frame t; the last frame reuses the previous step.
std::pair<double, double> velocity(const std::vector<data::BBox>& boxes, std::size_t t) {
  const std::size_t n = boxes.size();
  if (n < 2) return {0.0, 0.0};
  const std::size_t from = t + 1 < n ? t : t - 1;
  return {boxes[from + 1].center_x() - boxes[from].center_x(), boxes[from + 1].center_y() - boxes[from].center_y()};
}

}  // namespace

std::vector<bool> predicate_track(const std::string& predicate, const std::vector<data::BBox>& a,
                                  const std::vector<data::BBox>& b, const OracleThresholds& th) {
  if (a.size() != b.size()) throw DimensionError("predicate_track: tracks differ in length");
  std::vector<bool> out(a.size(), false);
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double dx = b[t].center_x() - a[t].center_x();
    const double dy = b[t].center_y() - a[t].center_y();
    bool v = false;
    if (predicate == "left") {
      v = dx > th.center_gap;
    } else if (predicate == "right") {
      v = -dx > th.center_gap;
    } else if (predicate == "above") {
      v = dy > th.center_gap;
    } else if (predicate == "beneath") {
      v = -dy > th.center_gap;
    } else if (predicate == "larger") {
      v = a[t].area() > th.area_ratio * b[t].area();
    } else if (predicate == "smaller") {
      v = b[t].area() > th.area_ratio * a[t].area();
    } else if (predicate == "move_toward" || predicate == "move_away" || predicate == "chase") {
      const double dist = std::hypot(dx, dy);
      if (dist > 0.0) {
        const auto [vax, vay] = velocity(a, t);
        const double along = (vax * dx + vay * dy) / dist;
        if (predicate == "move_toward") {
          v = along > th.speed;
        } else if (predicate == "move_away") {
          v = along < -th.speed;
        } else {
          const auto [vbx, vby] = velocity(b, t);
          v = along > th.speed && (vbx * dx + vby * dy) / dist > th.speed;
        }
      }
    } else {
      throw DomainError("predicate_track: unknown predicate " + predicate);
    }
    out[t] = v;
  }
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> maximal_spans(const std::vector<bool>& holds,
                                                                  std::size_t min_span) {
  std::vector<std::pair<std::int64_t, std::int64_t>> spans;
  std::size_t t = 0;
  while (t < holds.size()) {
    if (!holds[t]) {
      ++t;
      continue;
    }
    std::size_t e = t;
    while (e + 1 < holds.size() && holds[e + 1]) ++e;
    if (e - t + 1 >= min_span) spans.emplace_back(static_cast<std::int64_t>(t), static_cast<std::int64_t>(e));
    t = e + 1;
  }
  return spans;
}

std::vector<OracleRelation> oracle_relations(const std::vector<Entity>& entities, const OracleThresholds& th) {
  std::vector<OracleRelation> out;
  for (const auto& a : entities) {
    for (const auto& b : entities) {
      if (a.id == b.id) continue;
      for (const auto& p : oracle_predicates()) {
        for (auto [s, e] : maximal_spans(predicate_track(p, a.boxes, b.boxes, th), th.min_span)) {
          out.push_back({a.id, p, b.id, s, e});
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<data::BBox> simulate(const SceneSpec& spec, Motion motion, num::Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double W = spec.canvas;
  const double w = 24.0 + 32.0 * u(rng), h = 24.0 + 32.0 * u(rng);
  std::vector<data::BBox> boxes;
  boxes.reserve(spec.frames);
  auto place = [&](double cx, double cy) {
    return round_box({cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2});
  };
  if (motion == Motion::Linear) {
    double cx = w / 2 + (W - w) * u(rng), cy = h / 2 + (W - h) * u(rng);
    const bool still = u(rng) < 0.25;
    const double vmax = spec.max_speed;
    double vx = still ? 0.0 : vmax * (2.0 * u(rng) - 1.0), vy = still ? 0.0 : vmax * (2.0 * u(rng) - 1.0);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      boxes.push_back(place(cx, cy));
      cx += vx;
      cy += vy;
      if (cx < w / 2 || cx > W - w / 2) {
        vx = -vx;
        cx = std::clamp(cx, w / 2, W - w / 2);
      }
      if (cy < h / 2 || cy > W - h / 2) {
        vy = -vy;
        cy = std::clamp(cy, h / 2, W - h / 2);
      }
    }
  } else {
    const double ax = spec.max_amplitude * (0.25 + 0.75 * u(rng)), ay = spec.max_amplitude * (0.25 + 0.75 * u(rng));
    const double period = spec.min_period * (1.0 + 2.0 * u(rng)), phase = 2.0 * std::numbers::pi * u(rng);
    const double cx0 = w / 2 + ax + (W - w - 2 * ax) * u(rng);
    const double cy0 = h / 2 + ay + (W - h - 2 * ay) * u(rng);
    for (std::size_t t = 0; t < spec.frames; ++t) {
      const double s = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
      const double c = std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / period + phase);
      boxes.push_back(place(cx0 + ax * s, cy0 + ay * c));
    }
  }
  return boxes;
}

std::vector<double> appearance(const SceneSpec& spec, std::size_t slot, num::Rng& rng) {
  std::normal_distribution<double> noise(0.0, spec.appearance_noise);
  std::vector<double> v(spec.appearance_dim, 0.0);
  v[slot] = 1.0;
  for (auto& x : v) x = f32(x + (spec.appearance_noise > 0.0 ? noise(rng) : 0.0));
  return v;
}

std::size_t category_index(const SceneSpec& spec, const std::string& name) {
  return static_cast<std::size_t>(std::find(spec.categories.begin(), spec.categories.end(), name) -
                                  spec.categories.begin());
}

bool has_query(const SceneSpec& spec, const std::vector<Entity>& entities, const std::vector<OracleRelation>& rels) {
  for (const auto& r : rels) {
    if (entities[r.subject].category == entities[r.object].category) continue;
    if (std::find(spec.query_predicates.begin(), spec.query_predicates.end(), r.predicate) !=
        spec.query_predicates.end()) {
      return true;
    }
  }
  return false;
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, const std::string& video_id) {
  spec.validate();
  num::Rng rng(num::derive_seed(spec.seed, "scene"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 200; ++attempt) {
    Scene scene;
    scene.has_distractor = u(rng) < spec.distractor_probability;
    std::uniform_int_distribution<std::size_t> count(spec.min_entities, spec.max_entities);
    std::size_t n = count(rng);
    if (!scene.has_distractor) n = std::min(n, spec.categories.size());

    auto cats = spec.categories;
    std::shuffle(cats.begin(), cats.end(), rng);
    std::vector<std::string> chosen;
    if (scene.has_distractor) {
      chosen.push_back(cats[0]);
      chosen.push_back(cats[0]);
      for (std::size_t k = 1; chosen.size() < n; ++k) chosen.push_back(cats[k]);
    } else {
      chosen.assign(cats.begin(), cats.begin() + static_cast<std::ptrdiff_t>(n));
    }
    for (std::size_t e = 0; e < n; ++e) {
      Entity ent;
      ent.id = e;
      ent.category = chosen[e];
      ent.motion = u(rng) < 0.5 ? Motion::Linear : Motion::Sinusoidal;
      ent.boxes = simulate(spec, ent.motion, rng);
      scene.entities.push_back(std::move(ent));
    }
    scene.relations = oracle_relations(scene.entities, spec.thresholds);
    if (!has_query(spec, scene.entities, scene.relations)) continue;

    auto& v = scene.video;
    v.video_id = video_id;
    v.frame_width = v.frame_height = spec.canvas;
    v.total_frames = static_cast<std::uint32_t>(spec.frames);
    v.regions_per_frame = spec.regions;
    v.appearance_dim = spec.appearance_dim;
    std::normal_distribution<double> jitter(0.0, 1.0);
    const std::size_t clutter_slot = spec.categories.size();
    for (std::size_t t = 0; t < spec.frames; ++t) {
      v.sampled_frame_indices.push_back(static_cast<std::uint32_t>(t));
      std::vector<data::RegionProposal> slots;
      for (const auto& ent : scene.entities) {
        slots.push_back({ent.boxes[t], appearance(spec, category_index(spec, ent.category), rng)});
      }
      while (slots.size() < spec.regions) {
        data::RegionProposal p;
        if (u(rng) < 0.5) {
          const auto& src = scene.entities[static_cast<std::size_t>(u(rng) * static_cast<double>(n)) % n];
          const auto& b = src.boxes[t];
          const double sw = 0.15 * b.width(), sh = 0.15 * b.height();
          data::BBox j{b.x_min + sw * jitter(rng), b.y_min + sh * jitter(rng), b.x_max + sw * jitter(rng),
                       b.y_max + sh * jitter(rng)};
          data::clamp_to_frame(j, spec.canvas, spec.canvas);
          if (j.x_max - j.x_min < 4.0 || j.y_max - j.y_min < 4.0) j = b;
          p.box = round_box(j);
          p.appearance = appearance(spec, category_index(spec, src.category), rng);
        } else {
          const double w = 16.0 + 48.0 * u(rng), h = 16.0 + 48.0 * u(rng);
          const double x = (spec.canvas - w) * u(rng), y = (spec.canvas - h) * u(rng);
          p.box = round_box({x, y, x + w, y + h});
          p.appearance = appearance(spec, clutter_slot, rng);
        }
        slots.push_back(std::move(p));
      }
      if (spec.shuffle_slots) std::shuffle(slots.begin(), slots.end(), rng);
      for (auto& s : slots) v.regions.push_back(std::move(s));
    }
    return scene;
  }
  throw DomainError("synth: no admissible scene after 200 attempts for seed " + std::to_string(spec.seed));
}

std::string relation_string(const Scene& scene, const OracleRelation& r) {
  return scene.entities.at(r.subject).category + "-" + r.predicate + "-" + scene.entities.at(r.object).category;
}

std::vector<data::RelationInstance> instances_of(const Scene& scene, const std::string& relation) {
  std::vector<data::RelationInstance> out;
  for (const auto& r : scene.relations) {
    if (relation_string(scene, r) != relation) continue;
    data::RelationInstance inst;
    for (auto* part : {&inst.subject, &inst.object}) {
      const auto& ent = scene.entities[part == &inst.subject ? r.subject : r.object];
      part->start_frame = r.start_frame;
      part->end_frame = r.end_frame;
      part->boxes.assign(ent.boxes.begin() + r.start_frame, ent.boxes.begin() + r.end_frame + 1);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

namespace {

std::string scene_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%05zu", i);
  return buf;
}

// Candidate query triplets of a scene, distractor-category triplets first, each group shuffled.
std::vector<std::string> candidates(const SceneSpec& spec, const Scene& scene, num::Rng& rng) {
  std::map<std::string, std::size_t> count;
  for (const auto& e : scene.entities) ++count[e.category];
  std::set<std::string> preferred, rest;
  for (const auto& r : scene.relations) {
    const auto& sc = scene.entities[r.subject].category;
    const auto& oc = scene.entities[r.object].category;
    if (sc == oc) continue;
    if (std::find(spec.query_predicates.begin(), spec.query_predicates.end(), r.predicate) ==
        spec.query_predicates.end()) {
      continue;
    }
    const auto rel = relation_string(scene, r);
    (count[sc] > 1 || count[oc] > 1 ? preferred : rest).insert(rel);
  }
  std::vector<std::string> a(preferred.begin(), preferred.end()), b(rest.begin(), rest.end());
  std::shuffle(a.begin(), a.end(), rng);
  std::shuffle(b.begin(), b.end(), rng);
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

void write_sidecar(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "video " << scene.video.video_id << (scene.has_distractor ? " distractor" : "") << '\n';
  for (const auto& e : scene.entities) {
    const auto& b0 = e.boxes.front();
    const auto& b1 = e.boxes.back();
    out << "entity " << e.id << ' ' << e.category << ' ' << (e.motion == Motion::Linear ? "linear" : "sinusoidal")
        << " size " << b0.width() << 'x' << b0.height() << " from " << b0.center_x() << ',' << b0.center_y() << " to "
        << b1.center_x() << ',' << b1.center_y() << '\n';
  }
  for (const auto& r : scene.relations) {
    out << "relation " << scene.entities[r.subject].category << '#' << r.subject << ' ' << r.predicate << ' '
        << scene.entities[r.object].category << '#' << r.object << " frames " << r.start_frame << '-' << r.end_frame
        << '\n';
  }
  if (!out) throw FormatError("short write to " + path);
}

std::set<std::string> entity_words(const std::set<std::string>& triplets) {
  std::set<std::string> words;
  for (const auto& t : triplets) {
    const auto q = data::tokenize_relation(t);
    words.insert(data::join_tokens(q.subject));
    words.insert(data::join_tokens(q.object));
  }
  return words;
}

std::set<std::string> predicate_words(const std::set<std::string>& triplets) {
  std::set<std::string> words;
  for (const auto& t : triplets) words.insert(data::join_tokens(data::tokenize_relation(t).predicate));
  return words;
}

}  // namespace

EmitResult emit_dataset(const SceneSpec& spec, const EmitOptions& options, const std::string& out_dir) {
  spec.validate();
  if (options.count == 0) throw DomainError("emit_dataset: count must be at least 1");
  if (options.test_count > options.count) throw DomainError("emit_dataset: more test scenes than scenes");
  if (!(options.zero_shot_fraction >= 0.0 && options.zero_shot_fraction < 1.0)) {
    throw DomainError("emit_dataset: zero-shot fraction outside [0, 1)");
  }
  if (options.zero_shot_fraction > 0.0 && options.test_count == 0) {
    throw DomainError("emit_dataset: zero-shot rows need a test split");
  }
  const fs::path root(out_dir);
  std::error_code ec;
  for (const char* sub : {"features", "gt", "scenes"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw FormatError("cannot create " + (root / sub).string() + ": " + ec.message());
  }

  const std::size_t n = options.count;
  std::vector<Scene> scenes(n);
  util::parallel_for(n, options.jobs, [&](std::size_t i) {
    SceneSpec s = spec;
    s.seed = num::derive_seed(spec.seed, "scene/" + std::to_string(i));
    scenes[i] = generate_scene(s, scene_id(i));
    data::save_video_features((root / "features" / (scene_id(i) + ".vrgv")).string(), scenes[i].video);
    write_sidecar((root / "scenes" / (scene_id(i) + ".txt")).string(), scenes[i]);
  });

  num::Rng rng(num::derive_seed(spec.seed, "queries"));
  std::vector<std::vector<std::string>> cand(n);
  for (std::size_t i = 0; i < n; ++i) cand[i] = candidates(spec, scenes[i], rng);
  const std::size_t first_test = n - options.test_count;
  const std::size_t q = spec.queries_per_scene;

  std::set<std::string> held_out;
  if (options.zero_shot_fraction > 0.0) {
    std::set<std::string> test_triplets;
    for (std::size_t i = first_test; i < n; ++i) test_triplets.insert(cand[i].begin(), cand[i].end());
    std::vector<std::string> pool(test_triplets.begin(), test_triplets.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto h = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(options.zero_shot_fraction * static_cast<double>(pool.size()))));
    held_out.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(h, pool.size())));
  }

  std::vector<std::vector<std::string>> rows(n);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < first_test; ++i) {
    for (const auto& c : cand[i]) {
      if (rows[i].size() == q) break;
      if (held_out.count(c)) continue;
      rows[i].push_back(c);
      seen.insert(c);
    }
  }
  const auto known_entities = entity_words(seen);
  const auto known_predicates = predicate_words(seen);
  for (auto it = held_out.begin(); it != held_out.end();) {
    const auto rq = data::tokenize_relation(*it);
    const bool ok = known_entities.count(data::join_tokens(rq.subject)) &&
                    known_entities.count(data::join_tokens(rq.object)) &&
                    known_predicates.count(data::join_tokens(rq.predicate));
    it = ok ? std::next(it) : held_out.erase(it);
  }

  // Test rows: only seen triplets and held-out ones, with exactly round(f·R) held-out rows.
  std::vector<std::vector<std::string>> seen_c(n), unseen_c(n);
  std::vector<std::size_t> quota(n, 0), lo(n, 0), hi(n, 0);
  std::size_t total = 0, min_unseen = 0, max_unseen = 0;
  for (std::size_t i = first_test; i < n; ++i) {
    for (const auto& c : cand[i]) {
      if (seen.count(c)) {
        seen_c[i].push_back(c);
      } else if (held_out.count(c)) {
        unseen_c[i].push_back(c);
      }
    }
    quota[i] = std::min(q, seen_c[i].size() + unseen_c[i].size());
    lo[i] = quota[i] > seen_c[i].size() ? quota[i] - seen_c[i].size() : 0;
    hi[i] = std::min(quota[i], unseen_c[i].size());
    total += quota[i];
    min_unseen += lo[i];
    max_unseen += hi[i];
  }
  const auto target = static_cast<std::size_t>(std::llround(options.zero_shot_fraction * static_cast<double>(total)));
  if (target < min_unseen || target > max_unseen) {
    throw DomainError("emit_dataset: cannot place " + std::to_string(target) + " zero-shot rows among " +
                      std::to_string(total) + " test rows (feasible " + std::to_string(min_unseen) + "-" +
                      std::to_string(max_unseen) + ")");
  }
  std::vector<std::size_t> take(lo);
  std::size_t placed = min_unseen;
  for (std::size_t i = first_test; i < n && placed < target; ++i) {
    const auto extra = std::min(hi[i] - take[i], target - placed);
    take[i] += extra;
    placed += extra;
  }

  EmitResult result;
  for (std::size_t i = first_test; i < n; ++i) {
    for (std::size_t k = 0; k < take[i]; ++k) {
      rows[i].push_back(unseen_c[i][k]);
      result.zero_shot_rows.push_back(scene_id(i) + "\t" + unseen_c[i][k]);
    }
    for (std::size_t k = 0; k < quota[i] - take[i]; ++k) rows[i].push_back(seen_c[i][k]);
  }

  std::vector<data::ManifestEntry> all, train, test;
  for (std::size_t i = 0; i < n; ++i) {
    data::GroundTruth gt;
    for (const auto& rel : rows[i]) gt[rel] = instances_of(scenes[i], rel);
    const auto id = scene_id(i);
    data::write_ground_truth((root / "gt" / (id + ".gt")).string(), gt);
    for (const auto& rel : rows[i]) {
      data::ManifestEntry e{id, "features/" + id + ".vrgv", rel, "gt/" + id + ".gt"};
      all.push_back(e);
      (i < first_test ? train : test).push_back(e);
    }
  }
  result.manifest = (root / "manifest.tsv").string();
  result.train_manifest = (root / "train.tsv").string();
  result.test_manifest = (root / "test.tsv").string();
  data::write_manifest(result.manifest, all);
  data::write_manifest(result.train_manifest, train);
  data::write_manifest(result.test_manifest, test);

  std::ofstream meta(root / "dataset.meta");
  if (!meta) throw FormatError("cannot write " + (root / "dataset.meta").string());
  meta << "seed=" << spec.seed << "\ncount=" << n << "\ntest_count=" << options.test_count << "\nframes=" << spec.frames
       << "\nregions=" << spec.regions << "\nappearance_dim=" << spec.appearance_dim << "\ncanvas=" << spec.canvas
       << "\ndistractor_probability=" << spec.distractor_probability << "\nappearance_noise=" << spec.appearance_noise
       << "\nshuffle_slots=" << spec.shuffle_slots << "\nmax_speed=" << spec.max_speed << "\nmax_amplitude=" << spec.max_amplitude
       << "\nmin_period=" << spec.min_period << "\ncenter_gap=" << spec.thresholds.center_gap << "\narea_ratio=" << spec.thresholds.area_ratio
       << "\nspeed=" << spec.thresholds.speed << "\nmin_span=" << spec.thresholds.min_span
       << "\nzero_shot_fraction=" << options.zero_shot_fraction << "\nzero_shot_rows=" << result.zero_shot_rows.size()
       << "\ntrain_rows=" << train.size() << "\ntest_rows=" << test.size() << "\ncategories=";
  for (std::size_t k = 0; k < spec.categories.size(); ++k) meta << (k ? " " : "") << spec.categories[k];
  meta << "\nquery_predicates=";
  for (std::size_t k = 0; k < spec.query_predicates.size(); ++k) meta << (k ? " " : "") << spec.query_predicates[k];
  meta << '\n';
  for (const auto& z : result.zero_shot_rows) meta << "zero_shot=" << z << '\n';
  if (!meta) throw FormatError("short write to dataset.meta");
  return result;
}

}  // namespace vrg::synth
