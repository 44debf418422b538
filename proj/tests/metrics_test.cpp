#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "absa/errors.hpp"
#include "absa/metrics.hpp"
#include "absa/tensor.hpp"
#include "json.hpp"

using namespace absa;

namespace {

using Spans = std::vector<std::vector<Span>>;

SpanMetrics f1(const Spans& gold, const Spans& pred) { return span_f1(gold, pred); }

}  // namespace

TEST_CASE("span_f1 examples") {
  Spans gold = {{{0, 4}, {10, 15}}, {{3, 8}}};
  auto perfect = f1(gold, gold);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  auto none = f1(gold, Spans{{}, {}});
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);
  CHECK(none.f1 == 0.0);

  auto empty = f1(Spans{{}, {}}, Spans{{}, {}});
  CHECK(empty.f1 == 1.0);
}

TEST_CASE("the tp=2 fp=1 fn=2 fixture") {
  Spans gold = {{{0, 4}, {6, 9}}, {{0, 3}, {5, 7}}};
  Spans pred = {{{0, 4}, {6, 10}}, {{5, 7}}};
  auto m = f1(gold, pred);
  CHECK(m.tp == 2);
  CHECK(m.fp == 1);
  CHECK(m.fn == 2);
  CHECK(m.precision == 2.0 / 3.0);
  CHECK(m.recall == 1.0 / 2.0);
  CHECK(std::abs(m.f1 - 4.0 / 7.0) < 1e-15);
}

TEST_CASE("spans only match inside their own sentence and at most once") {
  Spans gold = {{{0, 4}}, {}};
  Spans pred = {{}, {{0, 4}}};
  CHECK(f1(gold, pred).tp == 0);
  auto dup = f1(Spans{{{0, 4}}}, Spans{{{0, 4}, {0, 4}}});
  CHECK(dup.tp == 1);
  CHECK(dup.fp == 1);
  CHECK_THROWS_AS(f1(gold, Spans{{}}), ContractError);
}

TEST_CASE("property: span metric invariants") {
  Rng rng(31);
  std::uniform_int_distribution<std::size_t> pos(0, 6);
  std::uniform_int_distribution<int> count(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    Spans gold, pred;
    std::size_t n_gold = 0, n_pred = 0;
    for (int s = 0; s < 5; ++s) {
      gold.emplace_back();
      pred.emplace_back();
      for (int k = count(rng); k > 0; --k) {
        std::size_t a = pos(rng);
        gold.back().push_back({a, a + 1 + pos(rng) % 2});
      }
      for (int k = count(rng); k > 0; --k) {
        std::size_t a = pos(rng);
        pred.back().push_back({a, a + 1 + pos(rng) % 2});
      }
      n_gold += gold.back().size();
      n_pred += pred.back().size();
    }
    auto m = f1(gold, pred);
    CHECK(m.tp + m.fn == n_gold);
    CHECK(m.tp + m.fp == n_pred);
    CHECK(m.precision >= 0.0);
    CHECK(m.recall <= 1.0);
    if (m.precision + m.recall > 0) {
      CHECK(m.f1 >= std::min(m.precision, m.recall) - 1e-15);
      CHECK(m.f1 <= std::max(m.precision, m.recall) + 1e-15);
      CHECK(m.f1 <= 2 * std::min(m.precision, m.recall) + 1e-15);
    }
    Spans g2(gold.rbegin(), gold.rend()), p2(pred.rbegin(), pred.rend());
    auto r = f1(g2, p2);
    CHECK(r.tp == m.tp);
    CHECK(r.f1 == m.f1);
  }
}

TEST_CASE("accuracy examples") {
  std::vector<int> g = {0, 1, 2, 1};
  std::vector<int> all = g;
  CHECK(accuracy<int>(g, all).accuracy == 1.0);
  std::vector<int> three = {0, 1, 2, 2};
  auto m = accuracy<int>(g, three);
  CHECK(m.accuracy == 0.75);
  CHECK(m.correct == 3);
  CHECK(m.total == 4);
  std::vector<int> empty;
  CHECK_THROWS_AS(accuracy<int>(empty, empty), ContractError);
  CHECK_THROWS_AS(accuracy<int>(g, std::vector<int>{0}), ContractError);
}

TEST_CASE("property: accuracy is invariant to paired permutation") {
  Rng rng(12);
  std::uniform_int_distribution<int> lab(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> g(12), p(12);
    for (auto& x : g) x = lab(rng);
    for (auto& x : p) x = lab(rng);
    double base = accuracy<int>(g, p).accuracy;
    std::vector<std::size_t> perm(12);
    for (std::size_t i = 0; i < 12; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> gp, pp;
    for (auto i : perm) {
      gp.push_back(g[i]);
      pp.push_back(p[i]);
    }
    CHECK(accuracy<int>(gp, pp).accuracy == base);
  }
}

TEST_CASE("early stopping with flat metrics and patience 3 stops after epoch 4") {
  History h;
  int stopped_at = -1;
  for (int epoch = 1; epoch <= 10; ++epoch) {
    if (early_stopping_update(h, epoch, 1.0, 0.5, 3) == StopDecision::stop) {
      stopped_at = epoch;
      break;
    }
  }
  CHECK(stopped_at == 4);
  CHECK(h.best_epoch == 1);
  CHECK(h.epochs.size() == 4);
}

TEST_CASE("early stopping never stops on improving metrics and ties do not improve") {
  History h;
  for (int epoch = 1; epoch <= 50; ++epoch) {
    CHECK(early_stopping_update(h, epoch, 1.0, epoch * 0.01, 2) == StopDecision::continue_training);
  }
  CHECK(h.best_epoch == 50);
  History t;
  early_stopping_update(t, 1, 0.0, 0.8, 5);
  early_stopping_update(t, 2, 0.0, 0.8, 5);
  CHECK(t.best_epoch == 1);
  CHECK(t.patience_left == 4);
  early_stopping_update(t, 3, 0.0, 0.9, 5);
  CHECK(t.best_epoch == 3);
  CHECK(t.patience_left == 5);
}

TEST_CASE("metrics json shapes") {
  auto j = nlohmann::json::parse(SpanMetrics::from_counts(2, 1, 2).to_json());
  for (auto key : {"precision", "recall", "f1", "tp", "fp", "fn"}) CHECK(j.contains(key));
  AccuracyMetrics a{0.75, 3, 4};
  auto k = nlohmann::json::parse(a.to_json());
  CHECK(k["accuracy"] == 0.75);
  CHECK(k["total"] == 4);
  History h;
  early_stopping_update(h, 1, 2.5, 0.4, 3);
  auto hist = nlohmann::json::parse(h.to_json());
  CHECK(hist["best_epoch"] == 1);
  CHECK(hist["epochs"].size() == 1);
}
