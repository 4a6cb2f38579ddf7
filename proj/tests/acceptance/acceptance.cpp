#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "../fixtures.hpp"
#include "../metric_fixtures.hpp"
#include "../viterbi_oracle.hpp"
#include "vrg/cli/cli.hpp"
#include "vrg/grounding/grounding.hpp"
#include "vrg/numerics/adam.hpp"
#include "vrg/numerics/gradcheck.hpp"
#include "vrg/synth/synthgen.hpp"

using namespace vrg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string synthetic_config() { return std::string(VRG_SOURCE_DIR) + "/configs/synthetic.cfg"; }

std::string cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) {
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    throw std::runtime_error("vrg " + joined + "exited " + std::to_string(code) + ": " + err.str());
  }
  return out.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sigma_of(const std::string& train_output) {
  const auto at = train_output.find("\nsigma ");
  if (at == std::string::npos) throw std::runtime_error("train printed no sigma");
  const auto from = at + 7;
  return train_output.substr(from, train_output.find('\n', from) - from);
}

struct Scores {
  double s = 0, o = 0, r = 0;
  std::size_t samples = 0;
};

Scores evaluate(std::vector<std::string> args, const std::string& json) {
  args.insert(args.begin(), "eval");
  args.push_back("--json");
  args.push_back(json);
  cli(args);
  std::ifstream in(json);
  Scores sc;
  for (std::string line; std::getline(in, line);) {
    const auto j = nlohmann::json::parse(line);
    if (j["tau"] == "average") {
      sc.s = j["acc_s"];
      sc.o = j["acc_o"];
      sc.r = j["acc_r"];
      sc.samples = j["samples"];
    }
  }
  return sc;
}

// ---------------------------------------------------------------------------------------------

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  auto model = fixtures::tiny_model(17);
  const auto video = fixtures::random_video(model.config().encoder, 18);
  const auto q = data::tokenize_relation("person-move_toward-ball");
  num::LossFn fn = [&](const num::ParameterSet& p, num::Gradients* g) {
    model.parameters() = p;
    return model.loss(video, q, nullptr, g);
  };
  num::ParameterSet params = model.parameters();
  const auto rep = num::grad_check(fn, params, 1e-5);
  const double secs = seconds_since(t0);
  return {rep.max_rel_error < 1e-4 && secs < 60.0,
          fmt("vocab %zu, %zu coordinates, max rel error %.3e at %s[%zu] (analytic %.3e, numeric %.3e); "
              "max abs error %.2e; %zu coordinates with |g| >= 1e-6 have max rel error %.2e; %.1f s",
              model.vocabulary().size(), rep.coordinates, rep.max_rel_error, rep.worst_parameter.c_str(),
              rep.worst_index, rep.worst_analytic, rep.worst_numeric, rep.max_abs_error, rep.resolved_coordinates,
              rep.max_resolved_rel_error, secs)};
}

Outcome viterbi_oracle() {
  const auto t0 = Clock::now();
  std::size_t instances = 0, path_mismatch = 0, score_mismatch = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; instances < 200; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> kd(1, 7), md(1, 6);
    const std::size_t k = kd(rng), m = md(rng);
    if (std::pow(static_cast<double>(m), static_cast<double>(k)) > 5000) continue;
    const auto frames = oracle::random_frames(rng, k, m, seed % 3 == 0);
    ++instances;
    const auto dp = grounding::viterbi_link(frames);
    const auto bf = k == 1 ? grounding::LinkPath{} : oracle::brute_force(frames);
    if (k == 1) {
      // one frame: the argmax region, scored as twice its weight
      const auto& a = frames[0].alpha;
      const auto best = static_cast<std::size_t>(std::max_element(a.begin(), a.end()) - a.begin());
      path_mismatch += dp.regions != std::vector<std::size_t>{best};
      const double d = std::abs(dp.score - 2.0 * a[best]);
      worst = std::max(worst, d);
      score_mismatch += d > 1e-12;
      continue;
    }
    path_mismatch += dp.regions != bf.regions;
    const double d = std::abs(dp.score - bf.score);
    worst = std::max(worst, d);
    score_mismatch += d > 1e-12;
  }
  const double secs = seconds_since(t0);
  return {path_mismatch == 0 && score_mismatch == 0 && secs < 30.0,
          fmt("%zu instances, %zu path mismatches, %zu score mismatches, max |dp - brute| %.1e, %.2f s", instances,
              path_mismatch, score_mismatch, worst, secs)};
}

Outcome metric_oracle() {
  std::size_t bad_overlap = 0, bad_judge = 0;
  double worst = 0.0;
  const auto oc = fixtures::overlap_cases();
  for (const auto& c : oc) {
    const double d = std::abs(eval::trajectory_overlap(c.pred, c.gt, c.tau) - c.expected);
    worst = std::max(worst, d);
    if (d > 1e-12) {
      ++bad_overlap;
      std::cerr << "  overlap case '" << c.name << "' off by " << d << '\n';
    }
  }
  const auto jc = fixtures::judge_cases();
  for (const auto& c : jc) {
    const auto j = eval::judge_pair(c.result, c.gt, 0.5);
    if (j.subject != c.expected.subject || j.object != c.expected.object || j.relation != c.expected.relation) {
      ++bad_judge;
      std::cerr << "  judge case '" << c.name << "' disagrees\n";
    }
  }
  return {bad_overlap == 0 && bad_judge == 0 && oc.size() + jc.size() >= 10,
          fmt("%zu overlap cases (max error %.1e, %zu wrong), %zu judge cases (%zu wrong)", oc.size(), worst,
              bad_overlap, jc.size(), bad_judge)};
}

Outcome interpolation_exactness() {
  using data::BBox;
  const auto mid = grounding::interpolate({1, 3}, {{0, 0, 10, 10}, {20, 20, 30, 30}});
  const bool example = mid.at(2) == BBox{10, 10, 20, 20} && mid.at(1) == BBox{0, 0, 10, 10} &&
                       mid.at(3) == BBox{20, 20, 30, 30};
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 500.0);
  std::uniform_int_distribution<std::int64_t> start(0, 1000), gap(1, 40);
  std::size_t endpoint_bad = 0, monotone_bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto f0 = start(rng), f1 = f0 + gap(rng);
    BBox a{u(rng), u(rng), 0, 0}, b{u(rng), u(rng), 0, 0};
    a.x_max = a.x_min + 1 + u(rng);
    a.y_max = a.y_min + 1 + u(rng);
    b.x_max = b.x_min + 1 + u(rng);
    b.y_max = b.y_min + 1 + u(rng);
    const auto t = grounding::interpolate({f0, f1}, {a, b});
    if (!(t.at(f0) == a) || !(t.at(f1) == b) || t.length() != f1 - f0 + 1) ++endpoint_bad;
    auto coord = [](const BBox& x, int c) { return c == 0 ? x.x_min : c == 1 ? x.y_min : c == 2 ? x.x_max : x.y_max; };
    bool ok = true;
    for (int c = 0; c < 4; ++c) {
      const double lo = std::min(coord(a, c), coord(b, c)), hi = std::max(coord(a, c), coord(b, c));
      const double dir = coord(b, c) - coord(a, c);
      for (auto f = f0; f <= f1; ++f) {
        const double v = coord(t.at(f), c);
        ok = ok && v >= lo && v <= hi;
        if (f > f0) {
          const double step = v - coord(t.at(f - 1), c);
          ok = ok && (dir >= 0 ? step >= 0 : step <= 0);
          // equal frame steps give equal increments up to rounding
          const double ideal = dir / static_cast<double>(f1 - f0);
          ok = ok && std::abs(step - ideal) <= 1e-9 * (1.0 + std::abs(hi));
        }
      }
    }
    monotone_bad += !ok;
  }
  return {example && endpoint_bad == 0 && monotone_bad == 0,
          fmt("midpoint example %s; 1000 anchor pairs: %zu endpoint failures, %zu affine/monotone failures",
              example ? "exact" : "WRONG", endpoint_bad, monotone_bad)};
}

Outcome normalization_suite() {
  std::size_t bad_sum = 0, bad_fuse = 0;
  double worst = 0.0;
  auto check_rows = [&](const num::Tensor& t) {
    for (std::size_t i = 0; i < t.rows(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < t.cols(); ++j) s += t.at(i, j);
      worst = std::max(worst, std::abs(s - 1.0));
      bad_sum += std::abs(s - 1.0) > 1e-9;
    }
  };
  const auto& rels = fixtures::tiny_relations();
  for (std::uint64_t draw = 0; draw < 100; ++draw) {
    auto mc = fixtures::tiny_config();
    mc.encoder.use_msg = draw % 2 == 0;
    mc.encoder.use_predicate = draw % 5 != 0;
    const auto model = fixtures::tiny_model(1000 + draw, mc);
    const auto video = fixtures::random_video(mc.encoder, 2000 + draw);
    const auto maps = model.attend(video, data::tokenize_relation(rels[draw % rels.size()]));
    check_rows(maps.alpha_subject);
    check_rows(maps.alpha_object);
    check_rows(maps.beta_frame);
    check_rows(maps.beta_clip);
    const auto bf = maps.beta_frame.data();
    const auto bc = maps.beta_clip.data();
    const std::vector<double> f(bf.begin(), bf.end()), c(bc.begin(), bc.end());
    const auto fused = grounding::fuse_temporal(f, c, mc.encoder.clip_length);
    for (std::size_t i = 0; i < f.size(); ++i) bad_fuse += fused[i] != f[i] + c[i / mc.encoder.clip_length];
  }
  return {bad_sum == 0 && bad_fuse == 0,
          fmt("100 draws: max |sum - 1| %.1e (%zu rows outside 1e-9), %zu fused values differ from the broadcast sum",
              worst, bad_sum, bad_fuse)};
}

Outcome overfit_sanity() {
  const auto settings = cli::load_config(synthetic_config());
  synth::SceneSpec spec;
  spec.seed = 6;
  const auto scene = synth::generate_scene(spec, "overfit");
  std::string rel;
  for (const auto& r : scene.relations) {
    const auto& a = scene.entities[r.subject];
    const auto& b = scene.entities[r.object];
    if (a.category != b.category && r.predicate != "larger" && r.predicate != "smaller" && r.predicate != "chase") {
      rel = synth::relation_string(scene, r);
      break;
    }
  }
  const auto q = data::tokenize_relation(rel);
  Model model(settings.model, data::Vocabulary::from_relations({q}), make_embedding_table(settings.model), 3);
  num::AdamState st;
  st.hyper.lr = 1e-2;
  const double first = model.loss(scene.video, q);
  for (int step = 0; step < 200; ++step) {
    num::Gradients g;
    model.loss(scene.video, q, nullptr, &g);
    num::clip_global_norm(g, settings.train.clip_norm);
    num::adam_update(model.parameters(), g, st);
  }
  const double last = model.loss(scene.video, q);
  return {last < 0.1, fmt("'%s': per-token loss %.4f -> %.2e after 200 Adam steps (lr 1e-2)", rel.c_str(), first, last)};
}

// The benchmark of the end-to-end and ablation criteria: 500 training scenes, 100 held out.
struct Benchmark {
  std::string dir, data, full_results, sigma;
  double gen_train_seconds = 0.0;
};

const std::string kBenchSeed = "20";

Benchmark prepare_benchmark(const std::string& work) {
  Benchmark b;
  b.dir = work + "/benchmark";
  b.data = b.dir + "/data";
  b.full_results = b.dir + "/full.tsv";
  const auto stamp = b.dir + "/done";
  const std::string key = read_file(synthetic_config()) + "seed " + kBenchSeed + "\n";
  if (fs::exists(stamp) && read_file(stamp) == key) {
    std::ifstream in(b.dir + "/sigma");
    in >> b.sigma;
    std::ifstream t(b.dir + "/seconds");
    t >> b.gen_train_seconds;
    return b;
  }
  fs::remove_all(b.dir);
  fs::create_directories(b.dir);
  const auto t0 = Clock::now();
  cli({"gen", "--out", b.data, "--count", "600", "--test-count", "100", "--seed", kBenchSeed});
  const auto out = cli({"train", "--config", synthetic_config(), "--manifest", b.data + "/train.tsv", "--out",
                        b.dir + "/full.ckpt", "--search-sigma", "--log", b.dir + "/full.log"});
  b.sigma = sigma_of(out);
  cli({"ground", "--config", synthetic_config(), "--model", b.dir + "/full.ckpt", "--manifest", b.data + "/test.tsv",
       "--out", b.full_results, "--sigma", b.sigma});
  b.gen_train_seconds = seconds_since(t0);
  std::ofstream(b.dir + "/sigma") << b.sigma;
  std::ofstream(b.dir + "/seconds") << b.gen_train_seconds;
  std::ofstream(stamp) << key;
  return b;
}

Outcome end_to_end(const std::string& work) {
  const auto b = prepare_benchmark(work);
  const auto t0 = Clock::now();
  const auto full = evaluate({"--results", b.full_results, "--manifest", b.data + "/test.tsv"}, b.dir + "/full.jsonl");
  const auto rnd = evaluate({"--random-baseline", "--config", synthetic_config(), "--sigma", b.sigma, "--manifest",
                             b.data + "/test.tsv"},
                            b.dir + "/random.jsonl");
  const double secs = b.gen_train_seconds + seconds_since(t0);
  return {full.r >= 0.5 && rnd.r < 0.15 && secs < 1200.0,
          fmt("%zu test pairs, sigma %s: Average Acc_S %.3f Acc_O %.3f Acc_R %.3f (need >= 0.50); random baseline "
              "Acc_R %.3f (need < 0.15); %.0f s",
              full.samples, b.sigma.c_str(), full.s, full.o, full.r, rnd.r, secs)};
}

std::string distractor_manifest(const std::string& data) {
  std::vector<data::ManifestEntry> keep;
  for (const auto& e : data::read_manifest(data + "/test.tsv")) {
    std::ifstream side(data + "/scenes/" + e.video_id + ".txt");
    std::string first;
    std::getline(side, first);
    if (first.find(" distractor") != std::string::npos) keep.push_back(e);
  }
  const auto path = data + "/test_distractor.tsv";
  data::write_manifest(path, keep);
  return path;
}

Outcome ablation_ordering(const std::string& work) {
  const auto b = prepare_benchmark(work);
  const auto dist = distractor_manifest(b.data);
  std::map<std::string, Scores> all, distract;
  all["full"] = evaluate({"--results", b.full_results, "--manifest", b.data + "/test.tsv"}, b.dir + "/full.jsonl");
  distract["full"] = evaluate({"--results", b.full_results, "--manifest", dist}, b.dir + "/full_d.jsonl");
  for (const std::string flag : {"--no-msg", "--no-tau", "--co-occur"}) {
    const auto name = flag.substr(2);
    const auto ckpt = b.dir + "/" + name + ".ckpt";
    const auto out = cli({"train", "--config", synthetic_config(), flag, "--manifest", b.data + "/train.tsv", "--out",
                          ckpt, "--search-sigma", "--log", b.dir + "/" + name + ".log"});
    const auto res = b.dir + "/" + name + ".tsv";
    cli({"ground", "--config", synthetic_config(), "--model", ckpt, "--manifest", b.data + "/test.tsv", "--out", res,
         "--sigma", sigma_of(out)});
    all[name] = evaluate({"--results", res, "--manifest", b.data + "/test.tsv"}, b.dir + "/" + name + ".jsonl");
    distract[name] = evaluate({"--results", res, "--manifest", dist}, b.dir + "/" + name + "_d.jsonl");
  }
  const double gap_msg = all["full"].r - all["no-msg"].r;
  const double gap_tau = all["full"].r - all["no-tau"].r;
  const bool co = distract["co-occur"].r < distract["full"].r;
  return {gap_msg >= 0.05 && gap_tau >= 0.10 && co,
          fmt("Acc_R full %.3f, no-msg %.3f (gap %+.3f, need >= 0.05), no-tau %.3f (gap %+.3f, need >= 0.10); "
              "distractor scenes (%zu pairs): full %.3f vs co-occur %.3f",
              all["full"].r, all["no-msg"].r, gap_msg, all["no-tau"].r, gap_tau, distract["full"].samples,
              distract["full"].r, distract["co-occur"].r)};
}

Outcome zero_shot(const std::string& work) {
  const auto dir = work + "/zeroshot";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto data = dir + "/data";
  cli({"gen", "--out", data, "--count", "600", "--test-count", "100", "--zero-shot", "0.2", "--seed", "21"});

  std::set<std::string> constructed;
  {
    std::ifstream meta(data + "/dataset.meta");
    for (std::string line; std::getline(meta, line);) {
      if (line.rfind("zero_shot=", 0) == 0) constructed.insert(line.substr(10));
    }
  }
  const auto test = data::load_samples(data + "/test.tsv");
  std::vector<data::RelationQuery> train_q;
  for (const auto& e : data::read_manifest(data + "/train.tsv")) train_q.push_back(data::tokenize_relation(e.relation));
  std::set<std::string> picked;
  for (const auto& s : eval::zero_shot_split(train_q, test)) picked.insert(s.video_id + "\t" + s.query.raw);
  const bool exact = picked == constructed && !constructed.empty();
  const double fraction = static_cast<double>(constructed.size()) / static_cast<double>(test.size());

  const auto out = cli({"train", "--config", synthetic_config(), "--manifest", data + "/train.tsv", "--out",
                        dir + "/model.ckpt", "--search-sigma"});
  const auto sigma = sigma_of(out);
  cli({"ground", "--config", synthetic_config(), "--model", dir + "/model.ckpt", "--manifest", data + "/test.tsv",
       "--out", dir + "/results.tsv", "--sigma", sigma});
  const auto model = evaluate({"--results", dir + "/results.tsv", "--manifest", data + "/test.tsv", "--zero-shot",
                               data + "/train.tsv"},
                              dir + "/zs.jsonl");
  const auto rnd = evaluate({"--random-baseline", "--config", synthetic_config(), "--sigma", sigma, "--manifest",
                             data + "/test.tsv", "--zero-shot", data + "/train.tsv"},
                            dir + "/zs_random.jsonl");
  return {exact && model.r > rnd.r,
          fmt("%zu of %zu test rows unseen (%.3f); split selects %s; zero-shot Acc_R %.3f vs random %.3f",
              constructed.size(), test.size(), fraction, exact ? "exactly the constructed set" : "A DIFFERENT SET",
              model.r, rnd.r)};
}

Outcome determinism(const std::string& work) {
  const auto dir = work + "/determinism";
  fs::remove_all(dir);
  std::vector<std::string> results, reports, checkpoints;
  for (int run = 0; run < 2; ++run) {
    const auto d = dir + "/run" + std::to_string(run);
    cli({"gen", "--out", d + "/data", "--count", "40", "--test-count", "10", "--seed", "33"});
    cli({"train", "--config", synthetic_config(), "--epochs", "3", "--seed", "8", "--manifest", d + "/data/train.tsv",
         "--out", d + "/model.ckpt"});
    cli({"ground", "--config", synthetic_config(), "--model", d + "/model.ckpt", "--manifest", d + "/data/test.tsv",
         "--out", d + "/results.tsv"});
    evaluate({"--results", d + "/results.tsv", "--manifest", d + "/data/test.tsv"}, d + "/report.jsonl");
    results.push_back(read_file(d + "/results.tsv"));
    reports.push_back(read_file(d + "/report.jsonl"));
    checkpoints.push_back(read_file(d + "/model.ckpt"));
  }
  const bool same = results[0] == results[1] && reports[0] == reports[1] && checkpoints[0] == checkpoints[1];
  return {same && !results[0].empty(),
          fmt("results (%zu bytes), report and checkpoint %s across two seeded runs", results[0].size(),
              same ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  std::string work = "acceptance_work";
  app.add_option("--criterion", only, "run only these criteria (1-10)");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient integrity", gradient_integrity},
      {"viterbi oracle", viterbi_oracle},
      {"metric oracle", metric_oracle},
      {"interpolation exactness", interpolation_exactness},
      {"normalization", normalization_suite},
      {"overfit sanity", overfit_sanity},
      {"end-to-end synthetic grounding", [&] { return end_to_end(work); }},
      {"ablation ordering", [&] { return ablation_ordering(work); }},
      {"zero-shot split", [&] { return zero_shot(work); }},
      {"determinism", [&] { return determinism(work); }},
  };
  fs::create_directories(work);
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), n) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    all = all && o.pass;
    std::cout << "criterion " << n << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  return all ? 0 : 1;
}
