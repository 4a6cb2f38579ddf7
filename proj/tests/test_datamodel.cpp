#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "vrg/binary_io.hpp"
#include "vrg/data/bbox.hpp"
#include "vrg/data/dataset.hpp"
#include "vrg/data/embedding.hpp"
#include "vrg/data/relation.hpp"
#include "vrg/data/video_features.hpp"
#include "vrg/data/vocabulary.hpp"
#include "vrg/error.hpp"

using namespace vrg;
using namespace vrg::data;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "vrg_datamodel_test";
  fs::create_directories(dir);
  return dir / name;
}

VideoFeatures small_video(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  VideoFeatures v;
  v.video_id = "v" + std::to_string(seed);
  v.frame_width = 64;
  v.frame_height = 48;
  v.total_frames = 40;
  v.sampled_frame_indices = {0, 10, 20, 30};
  v.regions_per_frame = 3;
  v.appearance_dim = 5;
  for (std::size_t i = 0; i < 12; ++i) {
    RegionProposal r;
    const float x = 30.0f * u(rng), y = 20.0f * u(rng);
    r.box = {x, y, x + 10.0f * u(rng), y + 10.0f * u(rng)};
    for (int k = 0; k < 5; ++k) r.appearance.push_back(u(rng));
    v.regions.push_back(r);
  }
  return v;
}

}  // namespace

TEST_CASE("geometry feature examples") {
  auto a = geometry_feature({0, 0, 100, 100}, 100, 100);
  CHECK(a == std::array<double, 5>{0, 0, 1, 1, 1});
  auto b = geometry_feature({25, 25, 75, 75}, 100, 100);
  CHECK(b == std::array<double, 5>{0.25, 0.25, 0.75, 0.75, 0.25});
  auto c = geometry_feature({10, 10, 10, 10}, 100, 100);
  CHECK(c == std::array<double, 5>{0.1, 0.1, 0.1, 0.1, 0});
  CHECK_THROWS_AS(geometry_feature({0, 0, 1, 1}, 0, 100), DomainError);
}

TEST_CASE("geometry feature stays in the unit cube for in-frame boxes") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double W = 1 + 500 * u(rng), H = 1 + 500 * u(rng);
    double x1 = W * u(rng), x2 = W * u(rng), y1 = H * u(rng), y2 = H * u(rng);
    auto f = geometry_feature({std::min(x1, x2), std::min(y1, y2), std::max(x1, x2), std::max(y1, y2)}, W, H);
    for (double v : f) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("iou and clamping") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(iou({1, 1, 1, 1}, {1, 1, 1, 1}) == 0.0);
  BBox b{-5, 3, 70, 40};
  CHECK(clamp_to_frame(b, 64, 48));
  CHECK(b == BBox{0, 3, 64, 40});
  CHECK_FALSE(clamp_to_frame(b, 64, 48));
}

TEST_CASE("tokenize relation examples") {
  auto q = tokenize_relation("person-jump_above-bicycle");
  CHECK(q.subject == Tokens{"person"});
  CHECK(q.predicate == Tokens{"jump", "above"});
  CHECK(q.object == Tokens{"bicycle"});
  auto d = tokenize_relation("dog-walk_left-turtle");
  CHECK(d.predicate == Tokens{"walk", "left"});
  CHECK(d.object == Tokens{"turtle"});
  CHECK(tokenize_relation("Red_Panda-Sit_Above-Car").subject == Tokens{"red", "panda"});
}

TEST_CASE("tokenize relation errors name the bad part") {
  try {
    tokenize_relation("person--car");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("predicate") != std::string::npos);
  }
  CHECK_THROWS_AS(tokenize_relation("person-ride"), ParseError);
  CHECK_THROWS_AS(tokenize_relation("a-b-c-d"), ParseError);
  CHECK_THROWS_AS(tokenize_relation("a-b_-c"), ParseError);
}

TEST_CASE("format then tokenize is the identity") {
  for (const char* raw : {"person-jump_above-bicycle", "giant_panda-lie_next_to-red_panda", "a-b-c"}) {
    auto q = tokenize_relation(raw);
    CHECK(format_relation(q.subject, q.predicate, q.object) == raw);
    CHECK(q.raw == raw);
  }
}

TEST_CASE("embedding lookups") {
  EmbeddingTable table(4);
  table.insert("dog", {1, 2, 3, 4});
  CHECK(embed_tokens({"dog"}, table, EmbedMode::Single) == std::vector<double>{1, 2, 3, 4});
  CHECK(embed_tokens({"dog", "dog"}, table, EmbedMode::Average) == std::vector<double>{1, 2, 3, 4});
  CHECK(embed_tokens({"dog", "cat"}, table, EmbedMode::Single) == std::vector<double>{1, 2, 3, 4});

  auto u1 = table.lookup("zebra");
  auto u2 = EmbeddingTable(4).lookup("zebra");
  CHECK(u1 == u2);
  double norm = 0.0;
  for (double v : u1) norm += v * v;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0));
  CHECK(table.lookup("zebra") != table.lookup("horse"));
  CHECK(EmbeddingTable(4, 1).lookup("zebra") != u1);
  CHECK_THROWS(table.insert("bad", {1, 2}));
}

TEST_CASE("embedding text file loads") {
  const auto path = scratch("emb.txt").string();
  {
    std::ofstream out(path);
    out << "dog 1 0 0\ncat 0 1 0.5\n";
  }
  auto t = EmbeddingTable::load_text(path, 3);
  CHECK(t.stored_count() == 2);
  CHECK(t.lookup("cat") == std::vector<double>{0, 1, 0.5});
  {
    std::ofstream out(path);
    out << "dog 1 0\n";
  }
  CHECK_THROWS(EmbeddingTable::load_text(path, 3));
}

TEST_CASE("vocabulary reserves the first three indices") {
  Vocabulary v = Vocabulary::from_relations({tokenize_relation("dog-left-car"), tokenize_relation("car-left-dog")});
  CHECK(v.token(0) == "<start>");
  CHECK(v.token(1) == "<end>");
  CHECK(v.token(2) == "<pad>");
  CHECK(v.size() == 6);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(v.index(v.token(i)) == i);
  try {
    v.index("horse");
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("horse") != std::string::npos);
  }
}

TEST_CASE("video features round trip bitwise") {
  const auto v = small_video(3);
  const auto bytes = encode_video_features(v);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "VRGV");
  auto back = decode_video_features(bytes, v.video_id);
  CHECK(back.clamped_boxes == 0);
  CHECK(back.video.sampled_frame_indices == v.sampled_frame_indices);
  CHECK(back.video.frame_width == v.frame_width);
  for (std::size_t i = 0; i < v.regions.size(); ++i) {
    CHECK(back.video.regions[i].box == v.regions[i].box);
    CHECK(back.video.regions[i].appearance == v.regions[i].appearance);
  }
  CHECK(encode_video_features(back.video) == bytes);

  const auto path = scratch("v.vrgv").string();
  save_video_features(path, v);
  CHECK(load_video_features(path, v.video_id).video.regions.size() == 12);
}

TEST_CASE("truncated feature file names expected and actual sizes") {
  auto bytes = encode_video_features(small_video(4));
  const auto full = bytes.size();
  bytes.resize(full - 7);
  try {
    decode_video_features(bytes, "x");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(std::to_string(full)) != std::string::npos);
    CHECK(msg.find(std::to_string(full - 7)) != std::string::npos);
  }
}

TEST_CASE("feature header validation") {
  auto v = small_video(5);
  auto bytes = encode_video_features(v);
  auto bad_magic = bytes;
  bad_magic[1] = 'Z';
  CHECK_THROWS_AS(decode_video_features(bad_magic, "x"), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK_THROWS_AS(decode_video_features(bad_version, "x"), FormatError);
  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_video_features(extra, "x"), FormatError);

  auto unordered = v;
  unordered.sampled_frame_indices = {0, 20, 10, 30};
  CHECK_THROWS_AS(decode_video_features(encode_video_features(unordered), "x"), FormatError);
  auto out_of_range = v;
  out_of_range.sampled_frame_indices = {0, 10, 20, 40};
  CHECK_THROWS_AS(decode_video_features(encode_video_features(out_of_range), "x"), FormatError);
  auto short_app = v;
  short_app.regions[4].appearance.pop_back();
  CHECK_THROWS(encode_video_features(short_app));
}

TEST_CASE("out-of-frame box is clamped with one warning") {
  auto v = small_video(6);
  v.regions[2].box = {50, 10, 80, 20};
  auto loaded = decode_video_features(encode_video_features(v), "x");
  CHECK(loaded.clamped_boxes == 1);
  CHECK(loaded.video.regions[2].box.x_max == 64);
}

TEST_CASE("manifest and ground truth round trip") {
  const auto dir = scratch("ds");
  fs::create_directories(dir);
  const auto v = small_video(7);
  save_video_features((dir / "a.vrgv").string(), v);

  GroundTruth gt;
  RelationInstance inst;
  inst.subject = {10, 12, {{1, 2, 3, 4}, {1.5, 2, 3.25, 4}, {0.1, 0.2, 0.3, 0.4}}};
  inst.object = {10, 12, {{5, 5, 9, 9}, {5, 5, 9, 9}, {5, 5, 9, 9}}};
  gt["dog-left-car"] = {inst, inst};
  write_ground_truth((dir / "a.gt").string(), gt);
  auto gt2 = read_ground_truth((dir / "a.gt").string());
  REQUIRE(gt2.count("dog-left-car") == 1);
  CHECK(gt2["dog-left-car"].size() == 2);
  CHECK(gt2["dog-left-car"][1].subject == inst.subject);

  write_manifest((dir / "m.tsv").string(), {{"a", "a.vrgv", "dog-left-car", "a.gt"},
                                           {"a", "a.vrgv", "car-right-dog", ""}});
  auto rows = read_manifest((dir / "m.tsv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].gt_path.empty());

  auto train = load_samples((dir / "m.tsv").string());
  REQUIRE(train.size() == 2);
  CHECK_FALSE(train[0].ground_truth.has_value());
  CHECK(train[0].features == train[1].features);

  CHECK_THROWS_AS(load_samples((dir / "m.tsv").string(), {true}), FormatError);
  write_manifest((dir / "e.tsv").string(), {{"a", "a.vrgv", "dog-left-car", "a.gt"}});
  auto evals = load_samples((dir / "e.tsv").string(), {true});
  REQUIRE(evals[0].ground_truth.has_value());
  CHECK(evals[0].ground_truth->size() == 2);
  CHECK_FALSE(strip_ground_truth(evals)[0].ground_truth.has_value());
}

TEST_CASE("manifest rejects malformed relations") {
  const auto path = scratch("bad.tsv").string();
  {
    std::ofstream out(path);
    out << "a\ta.vrgv\tdog--car\n";
  }
  CHECK_THROWS_AS(read_manifest(path), ParseError);
}

TEST_CASE("trajectory validity") {
  Trajectory t{3, 5, {{0, 0, 1, 1}, {0, 0, 1, 1}, {0, 0, 1, 1}}};
  CHECK(t.valid());
  CHECK(t.length() == 3);
  t.boxes.pop_back();
  CHECK_FALSE(t.valid());
}
