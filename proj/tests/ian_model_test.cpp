#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "absa/errors.hpp"
#include "absa/ian_model.hpp"
#include "support/synthetic.hpp"

using namespace absa;

namespace {

Tensor vec(std::vector<double> v) {
  return Tensor::from_values({static_cast<Index>(v.size())}, v);
}

IanConfig small_config() {
  IanConfig c;
  c.word_dim = 10;
  c.hidden_dim = 6;
  return c;
}

IanModel small_model(std::uint64_t seed = 1) {
  auto corpus = testing::synthetic_polarity_corpus();
  Rng rng(seed);
  return make_ian_model(small_config(), corpus, nullptr, false, rng);
}

const std::vector<std::string> kContext = {"the", "room", "is", "good"};
const std::vector<std::string> kTarget = {"room"};

}  // namespace

TEST_CASE("attention with zero weights is the arithmetic mean") {
  Rng rng(1);
  AttnParams p = AttnParams::uniform(3, 2, 0.5, rng);
  p.weight.mutable_value().setZero();
  std::vector<Tensor> states = {vec({1, 2, 3}), vec({-1, 0, 5}), vec({4, 4, -2})};
  Tape tape;
  auto r = attention_pool(tape, states, vec({0.3, -0.7}), p);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(r.weights.at(i) - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(r.pooled.at(0) - 4.0 / 3.0) < 1e-14);
  CHECK(std::abs(r.pooled.at(1) - 2.0) < 1e-14);
  CHECK(std::abs(r.pooled.at(2) - 2.0) < 1e-14);
}

TEST_CASE("attention over a single state") {
  Rng rng(2);
  AttnParams p = AttnParams::uniform(2, 2, 0.5, rng);
  Tape tape;
  std::vector<Tensor> one = {vec({0.25, -4.0})};
  auto r = attention_pool(tape, one, vec({1, 1}), p);
  CHECK(r.weights.at(0) == 1.0);
  CHECK(r.pooled.at(0) == 0.25);
  CHECK(r.pooled.at(1) == -4.0);
  CHECK_THROWS_AS(attention_pool(tape, std::vector<Tensor>{}, vec({1, 1}), p), ContractError);
}

TEST_CASE("attention with rigged scores matches a softmax oracle") {
  // One-dimensional states 1, 2, 3 and W = 0.3 give pre-activations 0.3, 0.6, 0.9.
  AttnParams p{Tensor::from_values({1, 1}, std::vector<double>{0.3}, true), Tensor::zeros({1}, true)};
  std::vector<Tensor> states = {vec({1}), vec({2}), vec({3})};
  Tape tape;
  auto r = attention_pool(tape, states, vec({1}), p);
  double s[3], z = 0;
  for (int i = 0; i < 3; ++i) {
    s[i] = std::exp(std::tanh(0.3 * (i + 1)));
    z += s[i];
  }
  double pooled = 0;
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(r.weights.at(i) - s[i] / z) < 1e-14);
    pooled += (i + 1) * s[i] / z;
  }
  CHECK(std::abs(r.pooled.at(0) - pooled) < 1e-14);

  // Untransformed scores (1, 2, 3) reproduce the familiar softmax triple.
  Tensor raw = vec({1, 2, 3});
  Tensor w = softmax(tape, raw, 0);
  CHECK(std::abs(w.at(0) - 0.09003) < 1e-5);
  CHECK(std::abs(w.at(1) - 0.24473) < 1e-5);
  CHECK(std::abs(w.at(2) - 0.66524) < 1e-5);
}

TEST_CASE("property: attention weights are a distribution and permute with the states") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    AttnParams p = AttnParams::uniform(4, 3, 1.0, rng);
    std::vector<Tensor> states;
    for (int i = 0; i < 5; ++i) states.push_back(vec({u(rng), u(rng), u(rng), u(rng)}));
    Tensor q = vec({u(rng), u(rng), u(rng)});
    Tape tape;
    auto r = attention_pool(tape, states, q, p);
    double total = 0;
    for (Index i = 0; i < 5; ++i) {
      CHECK(r.weights.at(i) >= 0.0);
      total += r.weights.at(i);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(r.weights.size() == 5);

    std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
    std::vector<Tensor> shuffled;
    for (auto i : perm) shuffled.push_back(states[i]);
    auto s = attention_pool(tape, shuffled, q, p);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(std::abs(s.weights.at(static_cast<Index>(k)) - r.weights.at(static_cast<Index>(perm[k]))) <
            1e-15);
    }
    CHECK((s.pooled.value() - r.pooled.value()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("model invariants") {
  IanModel m = small_model();
  CHECK(m.classifier.shape() == Shape{3, 24});
  CHECK(m.classifier_bias.shape() == Shape{3});
  CHECK(m.context_attn.weight.shape() == Shape{12, 12});
  const auto mask = m.decay_mask();
  CHECK(mask.size() == m.parameters().size());
  CHECK_FALSE(mask.front());
  CHECK(std::count(mask.begin(), mask.end(), false) == 1);
}

TEST_CASE("probabilities sum to one and zero classifier gives uniform") {
  IanModel m = small_model();
  Tape tape;
  Rng rng(0);
  Tensor p = ian_forward(tape, m, kContext, kTarget, false, rng);
  CHECK(std::abs(p.at(0) + p.at(1) + p.at(2) - 1.0) < 1e-12);
  m.classifier.mutable_value().setZero();
  Tensor u = ian_forward(tape, m, kContext, kTarget, false, rng);
  for (Index i = 0; i < 3; ++i) CHECK(std::abs(u.at(i) - 1.0 / 3.0) < 1e-15);
  // Uniform output: lowest class index wins.
  CHECK(predict_polarity(m, kContext, kTarget).label == Polarity::positive);
  CHECK_THROWS_AS(ian_forward(tape, m, std::vector<std::string>{}, kTarget, false, rng),
                  ContractError);
  CHECK_THROWS_AS(ian_forward(tape, m, kContext, std::vector<std::string>{}, false, rng),
                  ContractError);
}

TEST_CASE("zeroed attention degrades to mean pooling") {
  IanModel m = small_model(2);
  m.context_attn.weight.mutable_value().setZero();
  m.target_attn.weight.mutable_value().setZero();
  Tape tape;
  Rng rng(0);
  auto tr = ian_forward_traced(tape, m, kContext, kTarget, false, rng);

  // Separate path: embeddings, BGRU, then an explicit average.
  std::vector<Tensor> xs;
  for (const auto& w : kContext) xs.push_back(lookup(tape, m.words, w));
  auto states = bgru_forward(tape, m.context_bgru, xs);
  Vector mean = Vector::Zero(12);
  for (const auto& s : states) mean += s.flat();
  mean /= static_cast<double>(states.size());
  CHECK((tr.context.pooled.flat() - mean).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((tr.context_mean.flat() - mean).cwiseAbs().maxCoeff() < 1e-14);

  std::vector<Tensor> ts = {lookup(tape, m.words, "room")};
  auto tstates = bgru_forward(tape, m.target_bgru, ts);
  CHECK((tr.target.pooled.flat() - tstates[0].flat()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("classifier bias shift leaves probabilities unchanged") {
  IanModel m = small_model(3);
  Tape tape;
  Rng rng(0);
  Tensor before = ian_forward(tape, m, kContext, kTarget, false, rng);
  m.classifier_bias.mutable_value().array() += 2.5;
  Tensor after = ian_forward(tape, m, kContext, kTarget, false, rng);
  CHECK((before.value() - after.value()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inference is deterministic") {
  IanModel m = small_model();
  auto a = predict_polarity(m, kContext, kTarget);
  auto b = predict_polarity(m, kContext, kTarget);
  CHECK(a.probabilities == b.probabilities);
}

TEST_CASE("target and context token selection") {
  auto s = testing::sentence_from_words("x", {"the", "front", "desk", "was", "slow"},
                                        {{1, 2, Polarity::negative}});
  CHECK(target_tokens(s, Span{4, 14}) == std::vector<std::string>{"front", "desk"});
  CHECK(target_tokens(s, std::nullopt) == std::vector<std::string>{"<NULL>"});
  CHECK(target_tokens(s, Span{3, 4}) == std::vector<std::string>{"<NULL>"});
  std::unordered_set<std::string> stop = {"the", "was"};
  CHECK(context_tokens(s, &stop) == std::vector<std::string>{"front", "desk", "slow"});
  std::unordered_set<std::string> all = {"the", "front", "desk", "was", "slow"};
  CHECK(context_tokens(s, &all).size() == 5);
  CHECK(context_tokens(s, nullptr).size() == 5);
}

TEST_CASE("polarity samples skip opinions without a polarity") {
  auto a = testing::sentence_from_words("a", {"the", "pool", "is", "bad"},
                                        {{1, 1, Polarity::negative}, {3, 3, std::nullopt}});
  std::vector<AnnotatedSentence> corpus = {a};
  auto samples = make_polarity_samples(corpus);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].label == Polarity::negative);
  CHECK(samples[0].target == std::vector<std::string>{"pool"});
  CHECK(make_polarity_samples(testing::synthetic_polarity_corpus()).size() == 30);
}

TEST_CASE("L2 penalty") {
  IanModel m = small_model();
  for (auto& p : m.parameters()) {
    if (p.name != "words") p.tensor.mutable_value().setZero();
  }
  CHECK(ian_l2_penalty(m, 2e-5) == 0.0);

  IanModel r = small_model(4);
  double sq = 0;
  for (const auto& p : r.parameters()) {
    if (p.name == "words") continue;
    for (Index i = 0; i < p.tensor.size(); ++i) sq += p.tensor.at(i) * p.tensor.at(i);
  }
  CHECK(std::abs(ian_l2_penalty(r, 0.1) - 0.05 * sq) < 1e-12);
}

TEST_CASE("same seed gives the same history") {
  auto corpus = testing::synthetic_polarity_corpus();
  auto samples = make_polarity_samples(corpus);
  IanTrainConfig cfg;
  cfg.adam.lr = 0.01;
  cfg.epochs = 3;
  auto run = [&] {
    Rng rng(8);
    IanModel m = make_ian_model(small_config(), corpus, nullptr, false, rng);
    return train_ian(m, cfg, samples, {}, rng);
  };
  History a = run();
  History b = run();
  REQUIRE(a.epochs.size() == 3);
  for (const auto& e : a.epochs) CHECK(std::isfinite(e.train_loss));
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("an overfit model reproduces its labels, including two aspects per sentence") {
  auto corpus = testing::synthetic_polarity_corpus();
  auto samples = make_polarity_samples(corpus);
  Rng rng(8);
  IanModel m = make_ian_model(IanConfig{}, corpus, nullptr, false, rng);
  IanTrainConfig cfg;
  cfg.adam.lr = 0.01;
  History h = train_ian(m, cfg, samples, {}, rng);
  REQUIRE(h.epochs.size() == 12);
  CHECK(evaluate_ian(m, samples).accuracy >= 0.95);

  for (const auto& s : corpus) {
    if (s.opinions.size() != 2) continue;
    auto p1 = predict_polarity(m, s, Span{s.opinions[0].from, s.opinions[0].to});
    auto p2 = predict_polarity(m, s, Span{s.opinions[1].from, s.opinions[1].to});
    CAPTURE(s.text);
    CHECK(p1.label == *s.opinions[0].polarity);
    CHECK(p2.label == *s.opinions[1].polarity);
    CHECK(p1.label != p2.label);
  }
}

TEST_CASE("empty training set is a contract error") {
  IanModel m = small_model();
  Rng rng(1);
  CHECK_THROWS_AS(train_ian(m, {}, std::vector<PolaritySample>{}, {}, rng), ContractError);
}
