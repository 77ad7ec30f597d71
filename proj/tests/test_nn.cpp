#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradient_oracle.hpp"
#include "rxn/nn/checkpoint.hpp"
#include "rxn/nn/train.hpp"

using namespace rxn;
using namespace rxn::nn;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an rxn::Error");
  return ErrorCode::InvalidArgument;
}

ModelConfig small_config(int n_labels, std::uint64_t seed) {
  ModelConfig c;
  c.embed_dim = 8;
  c.recurrent_hidden = 8;
  c.attention_heads = 2;
  c.n_labels = n_labels;
  c.max_len = 64;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("focal loss: scalar hand evaluation") {
  FocalLossConfig f{2.0, {0.5}};
  Vec<double> s(1);
  s << 0.5;
  const std::uint8_t y[] = {1};
  // 0.5 * 0.5^2 * ln 2
  CHECK(focal_loss<double>(s, y, f) == doctest::Approx(0.5 * 0.25 * std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(focal_loss<double>(s, y, f) - 0.086643) < 1e-6);
}

TEST_CASE("focal loss: perfect prediction limit and non-negativity") {
  FocalLossConfig f{2.0, {0.7}};
  const std::uint8_t y1[] = {1};
  double prev = 1e9;
  for (double p : {0.1, 0.5, 0.9, 0.999, 1 - 1e-7}) {
    Vec<double> s(1);
    s << p;
    const double l = focal_loss<double>(s, y1, f);
    CHECK(l >= 0.0);
    CHECK(l <= prev);  // non-increasing in the score for a positive label
    prev = l;
  }
  CHECK(prev < 1e-15);
}

TEST_CASE("focal loss: gamma-zero reduces to weighted cross-entropy") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng.index(12));
    FocalLossConfig f;
    f.gamma = 0.0;
    Vec<double> s(n);
    std::vector<std::uint8_t> y(static_cast<std::size_t>(n));
    double ce = 0;
    for (int i = 0; i < n; ++i) {
      f.alpha.push_back(rng.uniform());
      s(i) = rng.uniform(1e-3, 1 - 1e-3);
      y[static_cast<std::size_t>(i)] = rng.uniform() < 0.5;
      const double a = f.alpha.back();
      ce += y[static_cast<std::size_t>(i)] ? -a * std::log(s(i)) : -(1 - a) * std::log(1 - s(i));
    }
    // validate() rejects gamma = 0 for training, the formula itself is defined.
    CHECK(std::abs(focal_loss<double>(s, y, f) - ce / n) < 1e-10);
  }
}

TEST_CASE("focal loss: precondition errors") {
  FocalLossConfig f{2.0, {0.5, 0.5}};
  const std::uint8_t y[] = {1, 0};
  Vec<double> s(2);
  s << 1.0, 0.3;
  CHECK(code_of([&] { focal_loss<double>(s, y, f); }) == ErrorCode::InvalidArgument);
  s << 0.0, 0.3;
  CHECK(code_of([&] { focal_loss<double>(s, y, f); }) == ErrorCode::InvalidArgument);
  Vec<double> short_s(1);
  short_s << 0.5;
  CHECK(code_of([&] { focal_loss<double>(short_s, y, f); }) == ErrorCode::ShapeMismatch);
  CHECK_THROWS(FocalLossConfig{0.0, {0.5}}.validate(1));
  CHECK_THROWS(FocalLossConfig{2.0, {1.5}}.validate(1));
}

TEST_CASE("logit gradient of the focal loss matches finite differences") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    FocalLossConfig f{rng.uniform(0.5, 3.0), {rng.uniform()}};
    const double z = rng.uniform(-6, 6);
    const std::uint8_t y[] = {static_cast<std::uint8_t>(rng.uniform() < 0.5)};
    auto loss = [&](double logit) {
      Vec<double> s(1);
      s << 1 / (1 + std::exp(-logit));
      return focal_loss<double>(s, y, f);
    };
    Vec<double> s(1);
    s << 1 / (1 + std::exp(-z));
    const double analytic = focal_loss_logit_grad<double>(s, y, f)(0);
    const double numeric = (loss(z + 1e-6) - loss(z - 1e-6)) / 2e-6;
    CHECK(test::relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("forward: zero attention projection makes the block the identity") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = init_model<float>(small_config(5, seed));
    Rng rng(seed);
    std::vector<int> tokens(20 + rng.index(30));
    for (auto& t : tokens) t = static_cast<int>(rng.index(kAlphabetSize));
    const Vec<float> on = forward(m, tokens, true);
    const Vec<float> off = forward(m, tokens, false);
    CHECK(on == off);
  }
}

TEST_CASE("forward: scores strictly inside (0,1) and deterministic") {
  auto m = init_model<float>(small_config(6, 1));
  // Saturate the head so the sigmoid would round to 0 or 1.
  m.params.b2 << 80.f, -80.f, 0.f, 200.f, -200.f, 1.f;
  std::vector<int> tokens{0, 1, 2, 3, 4, 5};
  const Vec<float> s = forward(m, tokens, true);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    CHECK(s(i) > 0.f);
    CHECK(s(i) < 1.f);
  }
  CHECK(forward(m, tokens, true) == s);
  auto m2 = init_model<float>(small_config(6, 1));
  m2.params.b2 = m.params.b2;
  CHECK(forward(m2, tokens, true) == s);
}

TEST_CASE("forward: truncation and non-finite reporting") {
  auto cfg = small_config(3, 2);
  cfg.max_len = 4;
  auto m = init_model<double>(cfg);
  std::vector<int> longer{1, 2, 3, 4, 5, 6, 7}, prefix{1, 2, 3, 4};
  CHECK(forward(m, longer, true) == forward(m, prefix, true));
  bool truncated = false;
  fit_tokens(cfg, longer, &truncated);
  CHECK(truncated);

  m.params.gru[0].wx(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    forward(m, prefix, true);
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFinite);
    CHECK(std::string(e.what()).find("recurrent") != std::string::npos);
  }
}

TEST_CASE("gradient oracle: tiny models, attention on and off") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto model = test::random_tiny_model(seed);
    const auto batch = test::random_examples(seed, 2, 5, 3);
    const auto focal = test::random_focal(seed, 3);
    for (bool attn : {true, false}) {
      const auto res = test::gradient_check(model, batch, focal, attn);
      INFO("seed ", seed, " attention ", attn, " worst ", res.worst_tensor);
      CHECK(res.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("gradient oracle: multiple heads") {
  auto cfg = small_config(4, 3);
  cfg.embed_dim = 4;
  cfg.recurrent_hidden = 4;
  auto model = init_model<double>(cfg);
  Rng rng(1);
  model.params.visit([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += rng.uniform(-0.5, 0.5);
  });
  const auto res = test::gradient_check(model, test::random_examples(4, 2, 6, 4), test::random_focal(4, 4), true);
  INFO("worst ", res.worst_tensor);
  CHECK(res.max_rel_error < 1e-4);
}

TEST_CASE("train_step: zero learning rate leaves parameters unchanged") {
  auto m = init_model<float>(small_config(3, 4));
  const auto before = m.params.flatten();
  const auto batch = test::random_examples(1, 4, 10, 3);
  AdamState<float> st(m.params);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  train_step(m, std::span<const Example>(batch), FocalLossConfig{2.0, {0.5, 0.5, 0.5}}, st, cfg);
  CHECK(m.params.flatten() == before);
}

TEST_CASE("train_step: a small step lowers the example's loss") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto m = test::random_tiny_model(seed);
    const auto batch = test::random_examples(seed + 100, 1, 8, 3);
    const auto focal = test::random_focal(seed, 3);
    Params<double> g = m.params.zeros_like();
    const double before = loss_and_gradient(m, std::span<const Example>(batch), focal, true, g);
    AdamState<double> st(m.params);
    TrainConfig cfg;
    cfg.learning_rate = 1e-5;
    const auto r = train_step(m, std::span<const Example>(batch), focal, st, cfg);
    CHECK(r.loss == doctest::Approx(before));
    Params<double> g2 = m.params.zeros_like();
    const double after = loss_and_gradient(m, std::span<const Example>(batch), focal, true, g2);
    CHECK(after < before);
  }
}

TEST_CASE("train_step: gradient clipping is reported") {
  auto m = test::random_tiny_model(2);
  const auto batch = test::random_examples(3, 2, 6, 3);
  AdamState<double> st(m.params);
  TrainConfig cfg;
  cfg.clip_norm = 1e-9;
  const auto r = train_step(m, std::span<const Example>(batch), test::random_focal(2, 3), st, cfg);
  CHECK(r.clipped);
  CHECK(r.grad_norm > cfg.clip_norm);
}

TEST_CASE("decide: threshold and fallback rules") {
  LabelSpace space({"rA", "rB"});
  auto a = decide("p", std::vector<double>{0.9, 0.1, 0.2}, space, 0.5);
  CHECK(a.labels() == std::set<std::string>{"-"});

  auto b = decide("p", std::vector<double>{0.1, 0.8, 0.7}, space, 0.5);
  REQUIRE(b.items.size() == 2);
  CHECK(b.items[0].reaction == "rA");
  CHECK(b.items[1].reaction == "rB");
  CHECK(b.items[0].confidence == 0.8);

  auto c = decide("p", std::vector<double>{0.1, 0.2, 0.3}, space, 0.5);
  CHECK(c.labels() == std::set<std::string>{"rB"});

  auto d = decide("p", std::vector<double>{0.4, 0.2, 0.3}, space, 0.5);
  CHECK(d.labels() == std::set<std::string>{"-"});

  // Every decision encodes to a valid label vector.
  Rng rng(4);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> s{rng.uniform(), rng.uniform(), rng.uniform()};
    auto out = decide("p", s, space, rng.uniform(0.05, 0.95));
    ReactionSet rs;
    for (const auto& l : out.labels()) {
      if (l != "-") rs.insert(l);
    }
    CHECK_NOTHROW(encode_labels(rs, space));
    CHECK((out.labels().count("-") == 0 || out.labels().size() == 1));
    CHECK_FALSE(out.items.empty());
  }
}

TEST_CASE("train: zero epochs returns the initial model") {
  auto corpus = make_synthetic(40, 3, 4, 1);
  auto m = init_model<float>(small_config(static_cast<int>(corpus.dataset.space.size()), 1));
  const auto before = serialize_checkpoint(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  auto ids = corpus.dataset.ids();
  auto h = train(m, corpus.dataset, ids, {}, cfg, FocalLossConfig{2.0, alpha_from_frequencies(corpus.dataset, ids)});
  CHECK(h.empty());
  CHECK(serialize_checkpoint(m) == before);
}

TEST_CASE("train: empty training set and overlapping splits are rejected") {
  auto corpus = make_synthetic(20, 3, 4, 1);
  auto m = init_model<float>(small_config(static_cast<int>(corpus.dataset.space.size()), 1));
  auto ids = corpus.dataset.ids();
  FocalLossConfig f{2.0, alpha_from_frequencies(corpus.dataset, ids)};
  CHECK(code_of([&] { train(m, corpus.dataset, {}, ids, TrainConfig{}, f); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { train(m, corpus.dataset, ids, ids, TrainConfig{}, f); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("train: identical seeds give identical history and checkpoint bytes") {
  auto corpus = make_synthetic(60, 4, 4, 8);
  auto ids = corpus.dataset.ids();
  std::vector<std::string> tr(ids.begin(), ids.begin() + 45), va(ids.begin() + 45, ids.end());
  FocalLossConfig f{2.0, alpha_from_frequencies(corpus.dataset, tr)};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 42;
  auto run = [&] {
    auto m = init_model<float>(small_config(static_cast<int>(corpus.dataset.space.size()), 42));
    auto h = train(m, corpus.dataset, tr, va, cfg, f);
    return std::pair{format_history(h), serialize_checkpoint(m)};
  };
  const auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first.find("#epoch\ttrain_loss\tval_mF1\n1\t") == 0);
}

TEST_CASE("alpha from label frequencies") {
  std::vector<ProteinRecord> prots{{"a", "MK", {}}, {"b", "MK", {}}, {"c", "MK", {}}, {"d", "MK", {}}};
  auto ds = make_dataset(prots, {{"a", {"rA"}}, {"b", {"rA"}}, {"c", {"rA", "rB"}}, {"d", {}}});
  auto ids = ds.ids();
  auto alpha = alpha_from_frequencies(ds, ids);
  REQUIRE(alpha.size() == 3);
  CHECK(alpha[0] == doctest::Approx(0.75));  // virtual: 1 of 4
  CHECK(alpha[1] == doctest::Approx(0.25));  // rA: 3 of 4
  CHECK(alpha[2] == doctest::Approx(0.75));  // rB: 1 of 4
  std::vector<std::string> only_a{"a"};
  auto clamped = alpha_from_frequencies(ds, only_a);
  CHECK(clamped[1] == 0.05);
  CHECK(clamped[0] == 0.95);
}

TEST_CASE("checkpoint: bit-exact round trip and corruption codes") {
  auto m = init_model<float>(small_config(5, 21));
  Rng rng(21);
  m.params.visit([&](const char*, auto& t) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(rng.normal());
  });
  const auto bytes = serialize_checkpoint(m);
  const auto back = deserialize_checkpoint(bytes);
  CHECK(back.config.n_labels == 5);
  CHECK(back.config.seed == m.config.seed);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.params.wo == m.params.wo);

  const auto path = std::filesystem::temp_directory_path() / "rxn_test_nn.ckpt";
  save_checkpoint(m, path);
  CHECK(serialize_checkpoint(load_checkpoint(path)) == bytes);
  std::filesystem::remove(path);

  CHECK(code_of([&] { deserialize_checkpoint(bytes.substr(0, 12)); }) == ErrorCode::Truncated);
  auto bad = bytes;
  bad[1] = 'Z';
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::BadMagic);
  bad = bytes;
  bad[4] = 2;
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::VersionMismatch);
  bad = bytes;
  bad[bytes.size() / 2] ^= 1;
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::ChecksumMismatch);
  CHECK(code_of([&] { load_checkpoint("/nonexistent/model.ckpt"); }) == ErrorCode::Io);
}
