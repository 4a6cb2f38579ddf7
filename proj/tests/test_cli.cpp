#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vrg/cli/cli.hpp"
#include "vrg/error.hpp"
#include "vrg/grounding/grounding.hpp"

using namespace vrg;
using namespace vrg::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run vrg_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("vrg_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

std::string write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const char* kSmallModel =
    "frames=24\nclip_length=4\nregions=6\nappearance_dim=8\nregion_dim=8\nword_dim=8\nword_embed_dim=8\n"
    "hidden=12\nattention_dim=8\ntoken_embed_dim=8\nmax_epochs=2\nbatch=8\nlr=0.003\n";

}  // namespace

TEST_CASE("full-scale defaults") {
  const auto s = load_config("");
  CHECK(s.model.encoder.frames == 120);
  CHECK(s.model.encoder.clip_length == 12);
  CHECK(s.model.encoder.clips() == 10);
  CHECK(s.model.encoder.regions == 40);
  CHECK(s.train.lr == 1e-4);
  CHECK(s.train.batch == 32);
  CHECK(s.train.dropout == 0.2);
  CHECK(s.model.dropout == 0.2);
  CHECK(s.sigma == 0.04);
  CHECK(s.metric.spatial_thresholds == std::vector<double>{0.3, 0.5, 0.7});
}

TEST_CASE("config file and overrides") {
  const auto dir = scratch("config");
  const auto path = write_file(dir + "/a.cfg", "# comment\n\nlr = 0.01\nhidden=64\nspatial_thresholds=0.5, 0.6\n");
  auto s = load_config(path);
  CHECK(s.train.lr == 0.01);
  CHECK(s.model.encoder.hidden == 64);
  CHECK(s.model.decoder.hidden == 64);
  CHECK(s.metric.spatial_thresholds == std::vector<double>{0.5, 0.6});
  CHECK(s.explicit_keys.count("lr"));

  try {
    load_config(write_file(dir + "/b.cfg", "lr=1\nlearning_rate=2\n"));
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("learning_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(write_file(dir + "/c.cfg", "batch=eight\n")), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir + "/d.cfg", "batch\n")), ConfigError);
  CHECK_THROWS_AS(load_config(dir + "/missing.cfg"), FormatError);
  for (const auto& k : config_keys()) CHECK_FALSE(k.empty());
}

TEST_CASE("ablation switches") {
  auto s = load_config("");
  apply_ablations(s, false, true, false, false);
  CHECK_FALSE(s.train.use_clip);
  CHECK(s.sigma == 0.0001);

  s = load_config("");
  set_key(s, "sigma", "0.03");
  apply_ablations(s, true, true, true, true);
  CHECK(s.sigma == 0.03);
  CHECK_FALSE(s.train.use_msg);
  CHECK_FALSE(s.train.use_tau);
  CHECK_FALSE(s.train.use_predicate);
}

TEST_CASE("usage errors exit 1") {
  CHECK(vrg_run({}).code == 1);
  CHECK(vrg_run({"bogus"}).code == 1);
  CHECK(vrg_run({"gen", "--count", "3"}).code == 1);
  const auto r = vrg_run({"train", "--manifest", "x", "--out", "y", "--set", "colour=red"});
  CHECK(r.code == 1);
  CHECK(r.err.find("colour") != std::string::npos);
  CHECK(vrg_run({"eval", "--manifest", "m"}).code == 1);
}

TEST_CASE("runtime errors exit 2") {
  const auto r = vrg_run({"ground", "--model", "/nonexistent/model", "--manifest", "/nonexistent/m.tsv", "--out", "x"});
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());
}

TEST_CASE("pipeline from generation to evaluation") {
  const auto dir = scratch("pipe");
  const auto cfg = write_file(dir + "/small.cfg", kSmallModel);
  auto r = vrg_run({"gen", "--out", dir + "/data", "--count", "12", "--test-count", "4", "--seed", "2"});
  REQUIRE(r.code == 0);

  r = vrg_run({"train", "--config", cfg, "--manifest", dir + "/data/train.tsv", "--out", dir + "/m.ckpt", "--seed",
               "5", "--search-sigma", "--log", dir + "/train.log"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\nsigma ") != std::string::npos);
  CHECK(fs::exists(dir + "/m.ckpt"));

  r = vrg_run({"ground", "--config", cfg, "--model", dir + "/m.ckpt", "--manifest", dir + "/data/test.tsv", "--out",
               dir + "/a.tsv"});
  REQUIRE(r.code == 0);
  r = vrg_run({"ground", "--config", cfg, "--model", dir + "/m.ckpt", "--manifest", dir + "/data/test.tsv", "--out",
               dir + "/b.tsv", "--jobs", "3"});
  REQUIRE(r.code == 0);
  CHECK(slurp(dir + "/a.tsv") == slurp(dir + "/b.tsv"));

  r = vrg_run({"eval", "--results", dir + "/a.tsv", "--manifest", dir + "/data/test.tsv", "--json", dir + "/r.jsonl"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("Acc_R") != std::string::npos);
  CHECK(r.out.find("Average") != std::string::npos);
  CHECK(fs::exists(dir + "/r.jsonl"));

  r = vrg_run({"eval", "--random-baseline", "--config", cfg, "--manifest", dir + "/data/test.tsv"});
  CHECK(r.code == 0);
  CHECK(vrg_run({"eval", "--results", dir + "/a.tsv", "--manifest", dir + "/data/test.tsv", "--static-only"}).code == 0);
  CHECK(vrg_run({"eval", "--results", dir + "/a.tsv", "--manifest", dir + "/data/test.tsv", "--dynamic-only"}).code ==
        0);
  CHECK(vrg_run({"eval", "--results", dir + "/a.tsv", "--manifest", dir + "/data/test.tsv", "--static-only",
                 "--dynamic-only"})
            .code == 1);
}

TEST_CASE("ground truth submitted as results scores 100%") {
  const auto dir = scratch("gt");
  REQUIRE(vrg_run({"gen", "--out", dir, "--count", "6", "--seed", "4"}).code == 0);
  const auto samples = data::load_samples(dir + "/manifest.tsv", {true});
  std::vector<grounding::GroundingResult> res;
  for (const auto& s : samples) {
    grounding::GroundingResult g;
    g.video_id = s.video_id;
    g.relation = s.query.raw;
    g.subject = s.ground_truth->front().subject;
    g.object = s.ground_truth->front().object;
    res.push_back(g);
  }
  grounding::write_results(dir + "/gt.tsv", res);
  const auto r = vrg_run({"eval", "--results", dir + "/gt.tsv", "--manifest", dir + "/manifest.tsv"});
  REQUIRE(r.code == 0);
  const auto row = r.out.substr(r.out.find("Acc_R"));
  CHECK(row.substr(0, row.find('\n')).find("100.00") != std::string::npos);

  // a prediction missing from the file counts as a miss
  res.pop_back();
  grounding::write_results(dir + "/partial.tsv", res);
  const auto p = vrg_run({"eval", "--results", dir + "/partial.tsv", "--manifest", dir + "/manifest.tsv"});
  REQUIRE(p.code == 0);
  const auto prow = p.out.substr(p.out.find("Acc_R"));
  CHECK(prow.substr(0, prow.find('\n')).find("100.00") == std::string::npos);
}
