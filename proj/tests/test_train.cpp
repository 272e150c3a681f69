#include <doctest.h>

#include <cmath>
#include <set>

#include "model_fixtures.hpp"
#include "mvdroid/checkpoint.hpp"
#include "mvdroid/metrics.hpp"
#include "mvdroid/train.hpp"

using namespace mvd;

namespace {

TrainConfig quick_train(std::size_t epochs) {
  TrainConfig t;
  t.max_epochs = epochs;
  t.batch_size = 8;
  t.patience = epochs;
  t.learning_rate = 1e-2;
  return t;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("classifier with zero parameters is undecided") {
  ad::ParameterStore<double> store;
  std::mt19937_64 rng(1);
  Classifier<double> clf(store, 7, {6, 4}, 0.2, rng);
  for (auto& p : store.all()) p.tensor.mutable_value().setZero();
  const auto out = clf(fx::random_tensor<double>(rng, {7}), false, rng);
  CHECK(out.value()[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out.value()[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("classifier outputs are distributions") {
  ad::ParameterStore<float> store;
  std::mt19937_64 rng(2);
  Classifier<float> clf(store, 10, {8, 6, 4}, 0.2, rng);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = fx::random_tensor<float>(rng, {10}, -5, 5);
    for (bool training : {false, true}) {
      const auto p = clf(x, training, rng).value();
      CHECK(std::abs(p.sum() - 1.0f) < 1e-6f);
      CHECK(p.minCoeff() >= 0.0f);
      CHECK(p.maxCoeff() <= 1.0f);
    }
  }
  CHECK_THROWS_WITH_AS(clf(fx::random_tensor<float>(rng, {9}), false, rng), doctest::Contains("ShapeMismatch"),
                       Error);
}

TEST_CASE("probability of class 0 grows with the logit gap") {
  double last = 0;
  for (double gap : {0.0, 1.0, 4.0, 16.0}) {
    const auto p = ad::softmax(ad::Tensor<double>::from({2}, ad::Vec<double>{{gap, 0.0}})).value();
    CHECK(p[0] >= last);
    last = p[0];
  }
  CHECK(last > 0.999999);
}

TEST_CASE("cross entropy on the classifier contract") {
  const auto ce = [](ad::Vec<double> p, ad::Vec<double> l) {
    return ad::cross_entropy(ad::Tensor<double>::from({2}, std::move(p)), l).item();
  };
  // both outputs clamped 1e-7 away from the target
  const double perfect = ce(ad::Vec<double>{{1.0, 0.0}}, ad::Vec<double>{{1.0, 0.0}});
  CHECK(perfect == doctest::Approx(-2 * std::log1p(-1e-7)).epsilon(1e-12));
  CHECK(perfect <= 2e-7 + 1e-13);
  CHECK(ce(ad::Vec<double>{{0.5, 0.5}}, ad::Vec<double>{{1.0, 0.0}}) == doctest::Approx(2 * std::log(2.0)));
  CHECK(ce(ad::Vec<double>{{0.3, 0.7}}, ad::Vec<double>{{1.0, 0.0}}) ==
        doctest::Approx(ce(ad::Vec<double>{{0.7, 0.3}}, ad::Vec<double>{{0.0, 1.0}})));
}

TEST_CASE("early stopping waits exactly patience epochs") {
  SUBCASE("monotonically worse") {
    EarlyStopping s(20);
    std::size_t stopped = 0;
    for (std::size_t e = 1; e <= 100 && !stopped; ++e)
      if (s.update(e, static_cast<double>(e))) stopped = e;
    CHECK(s.best_epoch() == 1);
    CHECK(stopped == 21);
  }
  SUBCASE("improves until epoch 7") {
    EarlyStopping s(20);
    std::size_t stopped = 0;
    for (std::size_t e = 1; e <= 100 && !stopped; ++e)
      if (s.update(e, e <= 7 ? 10.0 - static_cast<double>(e) : 5.0)) stopped = e;
    CHECK(s.best_epoch() == 7);
    CHECK(s.best_loss() == 3.0);
    CHECK(stopped == 27);
  }
  SUBCASE("ties are not improvements") {
    EarlyStopping s(2);
    CHECK_FALSE(s.update(1, 1.0));
    CHECK_FALSE(s.update(2, 1.0));
    CHECK_FALSE(s.improved());
    CHECK(s.update(3, 1.0));
  }
}

TEST_CASE("metrics from confusion counts") {
  // tp=3, fp=1, fn=1, tn=5
  std::vector<int> labels, preds;
  auto add = [&](int l, int p, int n) {
    for (int i = 0; i < n; ++i) {
      labels.push_back(l);
      preds.push_back(p);
    }
  };
  add(1, 1, 3);
  add(0, 1, 1);
  add(1, 0, 1);
  add(0, 0, 5);
  const Metrics m = evaluate(labels, preds);
  CHECK(m.tp == 3);
  CHECK(m.fp == 1);
  CHECK(m.fn == 1);
  CHECK(m.tn == 5);
  CHECK(m.count() == labels.size());
  CHECK(*m.precision == doctest::Approx(0.75));
  CHECK(*m.recall == doctest::Approx(0.75));
  CHECK(*m.accuracy == doctest::Approx(0.8));
  CHECK(*m.f1 == doctest::Approx(0.75));

  const std::vector<int> truth{1, 0, 1, 0};
  const Metrics perfect = evaluate(truth, truth);
  CHECK(*perfect.accuracy == 1.0);
  CHECK(*perfect.f1 == 1.0);

  const std::vector<int> none{0, 0, 0, 0};
  const Metrics silent = evaluate(truth, none);
  CHECK_FALSE(silent.precision.has_value());
  CHECK(*silent.recall == 0.0);
  CHECK_FALSE(silent.f1.has_value());
  const std::string json = to_json(EvalReport{silent, {}, {}});
  CHECK(json.find("precision") == std::string::npos);
  CHECK(json.find("\"recall\": 0.0") != std::string::npos);

  const Metrics benign_only = evaluate(none, none);
  CHECK_FALSE(benign_only.recall.has_value());
  CHECK(*benign_only.accuracy == 1.0);
}

TEST_CASE("confusion counts always add up") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> bit(0, 1), len(1, 40);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> l(static_cast<std::size_t>(len(rng))), p(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) {
      l[i] = bit(rng);
      p[i] = bit(rng);
    }
    const Metrics m = evaluate(l, p);
    CHECK(m.count() == l.size());
    if (m.precision && m.recall && *m.precision + *m.recall > 0)
      CHECK(*m.f1 == doctest::Approx(2 * *m.precision * *m.recall / (*m.precision + *m.recall)));
  }
}

TEST_CASE("aut trapezoids") {
  CHECK(std::abs(aut(std::vector<double>{1.0, 0.5}) - 0.75) < 1e-12);
  CHECK(std::abs(aut(std::vector<double>{0.9, 0.8, 1.0}) - 0.875) < 1e-12);
  for (std::size_t n = 2; n <= 12; ++n)
    for (double c : {0.0, 0.3, 0.7, 0.91, 1.0}) CHECK(aut(std::vector<double>(n, c)) == c);
  CHECK_THROWS_WITH_AS(aut(std::vector<double>{0.5}), doctest::Contains("TooFewSlots"), Error);
  CHECK_THROWS_WITH_AS(aut(std::vector<double>{}), doctest::Contains("TooFewSlots"), Error);
}

TEST_CASE("slotted evaluation") {
  const std::vector<int> labels{1, 0, 1, 0, 1, 0, 1, 0};
  const std::vector<int> preds{1, 0, 0, 0, 1, 1, 1, 0};
  SUBCASE("one year gives metrics only") {
    const std::vector<int> slots(8, 2019);
    const EvalReport r = evaluate_slots(labels, preds, slots);
    CHECK(r.per_slot.empty());
    CHECK(r.aut.empty());
    CHECK(to_json(r).find("aut") == std::string::npos);
  }
  SUBCASE("four years give four slots") {
    const std::vector<int> slots{2019, 2019, 2020, 2020, 2021, 2021, 2022, 2022};
    const EvalReport r = evaluate_slots(labels, preds, slots);
    REQUIRE(r.per_slot.size() == 4);
    CHECK(r.per_slot[0].slot == 2019);
    CHECK(r.per_slot[3].slot == 2022);
    // accuracies per slot: 1, 0.5, 0.5, 1
    CHECK(r.aut.at("accuracy") == doctest::Approx((0.75 + 0.5 + 0.75) / 3));
    // slot 2020 predicts no positives, so precision has no AUT
    CHECK(r.aut.count("precision") == 0);
    CHECK(r.overall.count() == 8);
  }
}

TEST_CASE("stratified split keeps class ratios") {
  std::vector<int> labels;
  for (int i = 0; i < 50; ++i) labels.push_back(i < 30 ? 0 : 1);
  const auto [train, val] = stratified_split(labels, 0.2, 3);
  CHECK(val.size() == 10);
  CHECK(train.size() == 40);
  CHECK(std::count_if(val.begin(), val.end(), [&](auto i) { return labels[i] == 1; }) == 4);
  CHECK(std::is_sorted(train.begin(), train.end()));
  std::set<std::size_t> all(train.begin(), train.end());
  all.insert(val.begin(), val.end());
  CHECK(all.size() == 50);
  CHECK(stratified_split(labels, 0.2, 3) == stratified_split(labels, 0.2, 3));
  CHECK(stratified_split(labels, 0.0, 3).second.empty());
}

TEST_CASE("history csv") {
  const std::string csv = history_csv({{1, 0.5, 0.25, 1.0}});
  CHECK(csv == "epoch,train_loss,val_loss,val_acc\n1,0.5,0.25,1\n");
}

TEST_CASE("checkpoint codec") {
  Checkpoint c{"seed = 3\n", {{"a.w", {2, 3}, {1, 2, 3, 4, 5, 6}}, {"b", {}, {-0.5f}}}};
  const Bytes b = encode_checkpoint(c);
  const Checkpoint back = decode_checkpoint(b);
  CHECK(back.config_text == c.config_text);
  REQUIRE(back.arrays.size() == 2);
  CHECK(back.arrays[0].shape == ad::Shape{2, 3});
  CHECK(back.arrays[0].values == c.arrays[0].values);
  CHECK(back.arrays[1].values == c.arrays[1].values);

  Bytes magic = b;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_checkpoint(magic), doctest::Contains("BadMagic"), Error);
  Bytes flipped = b;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK_THROWS_WITH_AS(decode_checkpoint(flipped), doctest::Contains("ChecksumMismatch"), Error);
  CHECK_THROWS_WITH_AS(decode_checkpoint(ByteSpan(b).first(b.size() - 3)), doctest::Contains("TruncatedFile"),
                       Error);
}

TEST_CASE("restore checks names and shapes") {
  Model<float> a(fx::tiny_config(), 1), b(fx::tiny_config(), 2);
  restore(b.params(), snapshot(a.params()));
  CHECK(encode_checkpoint({"", snapshot(a.params())}) == encode_checkpoint({"", snapshot(b.params())}));

  auto arrays = snapshot(a.params());
  arrays[0].name = "nope";
  CHECK_THROWS_WITH_AS(restore(b.params(), arrays), doctest::Contains("ShapeMismatch"), Error);
  arrays = snapshot(a.params());
  arrays.pop_back();
  CHECK_THROWS_WITH_AS(restore(b.params(), arrays), doctest::Contains("ShapeMismatch"), Error);
}

TEST_CASE("training rejects degenerate datasets") {
  Model<float> m(fx::tiny_config(), 1);
  auto data = fx::separable_examples<float>(2, fx::tiny_config());
  CHECK_THROWS_WITH_AS(train_model(m, {}, {}, quick_train(1), 1), doctest::Contains("EmptyDataset"), Error);
  std::vector<Example<float>> one_class;
  for (const auto& e : data)
    if (e.label == 1) one_class.push_back(e);
  CHECK_THROWS_WITH_AS(train_model(m, one_class, {}, quick_train(1), 1), doctest::Contains("SingleClassDataset"),
                       Error);
  TrainConfig zero = quick_train(1);
  zero.batch_size = 0;
  CHECK_THROWS_WITH_AS(train_model(m, data, {}, zero, 1), doctest::Contains("BadConfig"), Error);
}

TEST_CASE("eight separable samples are fit exactly") {
  const ModelConfig cfg = fx::tiny_config();
  const auto data = fx::separable_examples<float>(4, cfg);
  Model<float> m(cfg, 11);
  TrainConfig t = quick_train(200);
  t.learning_rate = 1e-3;
  std::size_t reached = 0;
  const auto r = train_model(m, data, {}, t, 11, [&](const EpochRecord& rec) {
    if (!reached && rec.val_acc == 1.0) reached = rec.epoch;
  });
  CHECK(reached > 0);
  CHECK(reached <= 200);
  CHECK(measure(m, data).accuracy == 1.0);

  // one full batch, no dropout: eval loss never rises across 10 epochs
  const auto& h = r.history;
  for (std::size_t i = 0; i + 10 < h.size(); ++i) {
    CAPTURE(i);
    CHECK(h[i + 10].val_loss <= h[i].val_loss + 1e-6);
  }
}

TEST_CASE("training is deterministic per seed and ends on the best epoch") {
  const ModelConfig cfg = fx::tiny_config();
  const auto data = fx::separable_examples<float>(4, cfg);
  const auto run = [&](std::uint64_t seed) {
    Model<float> m(cfg, seed);
    TrainConfig t = quick_train(15);
    t.batch_size = 3;
    const auto r = train_model(m, data, {}, t, seed);
    CHECK(measure(m, data).loss == doctest::Approx(r.history[r.best_epoch - 1].val_loss).epsilon(1e-6));
    return encode_checkpoint({"", snapshot(m.params())});
  };
  const Bytes a = run(4), b = run(4), c = run(5);
  CHECK(crc32_of(a) == crc32_of(b));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("frozen encoders keep their weights") {
  const ModelConfig cfg = fx::tiny_config();
  const auto data = fx::separable_examples<float>(3, cfg);
  Model<float> m(cfg, 6);
  const auto before = snapshot(m.params());
  TrainConfig t = quick_train(5);
  t.freeze_encoders = true;
  train_model(m, data, {}, t, 6);
  const auto after = snapshot(m.params());
  bool head_moved = false;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool encoder = before[i].name.rfind("gcn.", 0) == 0 || before[i].name.rfind("seqconv.", 0) == 0 ||
                         before[i].name.rfind("img.", 0) == 0;
    if (encoder)
      CHECK(before[i].values == after[i].values);
    else
      head_moved = head_moved || before[i].values != after[i].values;
  }
  CHECK(head_moved);
}

}  // TEST_SUITE
