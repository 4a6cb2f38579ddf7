#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "vrg/decoder/decoder.hpp"
#include "vrg/error.hpp"
#include "vrg/numerics/adam.hpp"
#include "vrg/numerics/gradcheck.hpp"

using namespace vrg;
using namespace vrg::dec;

TEST_CASE("target sequence layout") {
  auto vocab = data::Vocabulary::from_relations({data::tokenize_relation("person-jump_above-bicycle")});
  const auto q = data::tokenize_relation("person-jump_above-bicycle");
  const auto full = target_sequence(q, vocab, true);
  CHECK(full == std::vector<std::size_t>{vocab.index("person"), vocab.index("jump"), vocab.index("above"),
                                         vocab.index("bicycle"), data::Vocabulary::kEnd});
  const auto co = target_sequence(q, vocab, false);
  CHECK(co == std::vector<std::size_t>{vocab.index("person"), vocab.index("bicycle"), data::Vocabulary::kEnd});
  CHECK_THROWS_AS(target_sequence(data::tokenize_relation("person-ride-horse"), vocab), DomainError);
}

TEST_CASE("untrained loss is close to ln V per token") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto model = fixtures::tiny_model(seed);
    const auto video = fixtures::random_video(model.config().encoder, seed + 40);
    const double loss = model.loss(video, data::tokenize_relation("person-move_toward-ball"));
    const double ln_v = std::log(static_cast<double>(model.vocabulary().size()));
    CHECK(loss == doctest::Approx(ln_v).epsilon(0.1));
  }
}

TEST_CASE("saturated output bias drives the loss to zero") {
  auto model = fixtures::tiny_model(2);
  auto& p = model.parameters();
  p.get("dec.out.W").fill(0.0);
  auto& b = p.get("dec.out.b");
  b.fill(0.0);
  b[data::Vocabulary::kEnd] = 1000.0;
  Tape t;
  auto rec = reconstruction_loss(t, p, model.config().decoder, t.constant(Tensor({1, 16}, 0.1)),
                                 {data::Vocabulary::kEnd});
  CHECK(rec.loss.value()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rec.loss.value()[0] >= 0.0);
}

TEST_CASE("loss is strictly positive and each step is a distribution") {
  auto model = fixtures::tiny_model(3);
  const auto video = fixtures::random_video(model.config().encoder, 3);
  Tape t;
  auto pass = model.forward(t, video, data::tokenize_relation("dog-left-car"));
  CHECK(pass.reconstruction.loss.value()[0] > 0.0);
  CHECK(pass.reconstruction.logits.size() == 4);
  for (auto logits : pass.reconstruction.logits) {
    const auto p = num::softmax_rows(logits).value();
    double s = 0.0;
    for (double v : p.data()) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("feat_v gradient passes finite differences") {
  auto model = fixtures::tiny_model(4);
  num::ParameterSet probe;
  num::Rng rng(5);
  probe.add("feat_v", num::uniform_init({1, 16}, 4, rng));
  const auto& vocab = model.vocabulary();
  const auto target = target_sequence(data::tokenize_relation("person-move_toward-ball"), vocab);
  num::LossFn fn = [&](const num::ParameterSet& p, num::Gradients* g) {
    Tape t;
    Var fv = t.parameter(p, "feat_v");
    auto rec = reconstruction_loss(t, model.parameters(), model.config().decoder, fv, target);
    if (g) {
      t.backward(rec.loss);
      *g = t.parameter_gradients();
    }
    return rec.loss.value()[0];
  };
  auto report = num::grad_check(fn, probe, 1e-5);
  CAPTURE(report.worst_analytic);
  CAPTURE(report.worst_numeric);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("a single sample is memorized within 50 steps") {
  auto model = fixtures::tiny_model(6);
  const auto video = fixtures::random_video(model.config().encoder, 6);
  const auto q = data::tokenize_relation("person-move_toward-ball");
  num::AdamState st;
  st.hyper.lr = 3e-2;
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    num::Gradients g;
    last = model.loss(video, q, nullptr, &g);
    if (step == 0) first = last;
    num::clip_global_norm(g, 5.0);
    num::adam_update(model.parameters(), g, st);
  }
  last = model.loss(video, q);
  CHECK(last < first);
  CHECK(last < 0.1);
}

TEST_CASE("greedy decode reproduces a memorized relation") {
  auto model = fixtures::tiny_model(7);
  const auto video = fixtures::random_video(model.config().encoder, 7);
  const auto q = data::tokenize_relation("dog-left-car");
  num::AdamState st;
  st.hyper.lr = 1e-2;
  for (int step = 0; step < 80; ++step) {
    num::Gradients g;
    model.loss(video, q, nullptr, &g);
    num::adam_update(model.parameters(), g, st);
  }
  Tape t;
  auto out = model.forward(t, video, q);
  auto decoded = greedy_decode(model.parameters(), model.config().decoder, out.encoder.graph.feat_v.value());
  std::vector<std::string> words;
  for (auto i : decoded) words.push_back(model.vocabulary().token(i));
  CHECK(words == std::vector<std::string>{"dog", "left", "car"});
}

TEST_CASE("model save and load round trip") {
  auto mc = fixtures::tiny_config();
  mc.encoder.use_clip = false;
  auto model = fixtures::tiny_model(8, mc);
  const auto path = (std::filesystem::temp_directory_path() / "vrg_model_test.vrgw").string();
  model.save(path);
  auto back = Model::load(path);
  CHECK(back.vocabulary().tokens() == model.vocabulary().tokens());
  CHECK_FALSE(back.config().encoder.use_clip);
  CHECK(back.config().encoder.hidden == 16);
  for (const auto& n : model.parameters().names()) CHECK(back.parameters().get(n) == model.parameters().get(n));
  const auto video = fixtures::random_video(mc.encoder, 9);
  const auto q = data::tokenize_relation("car-above-dog");
  CHECK(back.loss(video, q) == model.loss(video, q));
}

TEST_CASE("dropout is active only with a mask stream") {
  auto model = fixtures::tiny_model(9);
  const auto video = fixtures::random_video(model.config().encoder, 9);
  const auto q = data::tokenize_relation("car-above-dog");
  num::Rng a(1), b(1);
  const double train_a = model.loss(video, q, &a);
  const double train_b = model.loss(video, q, &b);
  CHECK(train_a == train_b);
  CHECK(train_a != model.loss(video, q));
}
