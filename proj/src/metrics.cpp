#include "absa/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace absa {

using nlohmann::ordered_json;

SpanMetrics SpanMetrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  SpanMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  m.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp + fp + fn == 0) {
    m.f1 = 1.0;
  } else if (m.precision + m.recall == 0.0) {
    m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

std::string SpanMetrics::to_json() const {
  ordered_json j;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  j["tp"] = tp;
  j["fp"] = fp;
  j["fn"] = fn;
  return j.dump();
}

SpanMetrics span_f1(std::span<const std::vector<Span>> gold,
                    std::span<const std::vector<Span>> predicted) {
  if (gold.size() != predicted.size()) {
    throw ContractError("span_f1: " + std::to_string(gold.size()) + " gold sentences vs " +
                        std::to_string(predicted.size()) + " predicted");
  }
  std::size_t tp = 0;
  std::size_t n_gold = 0;
  std::size_t n_pred = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    std::vector<Span> g = gold[s];
    std::vector<Span> p = predicted[s];
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    n_gold += g.size();
    n_pred += p.size();
    // Multiset intersection: each gold span is consumed by one match.
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < g.size() && j < p.size()) {
      if (g[i] == p[j]) {
        ++tp;
        ++i;
        ++j;
      } else if (g[i] < p[j]) {
        ++i;
      } else {
        ++j;
      }
    }
  }
  return SpanMetrics::from_counts(tp, n_pred - tp, n_gold - tp);
}

std::string AccuracyMetrics::to_json() const {
  ordered_json j;
  j["accuracy"] = accuracy;
  j["correct"] = correct;
  j["total"] = total;
  return j.dump();
}

std::string History::to_json() const {
  ordered_json j;
  ordered_json rows = ordered_json::array();
  for (const auto& e : epochs) {
    ordered_json r;
    r["epoch"] = e.epoch;
    r["train_loss"] = e.train_loss;
    r["validation_metric"] = e.validation_metric;
    rows.push_back(std::move(r));
  }
  j["epochs"] = std::move(rows);
  j["best_epoch"] = best_epoch;
  j["best_metric"] = std::isfinite(best_metric) ? ordered_json(best_metric) : ordered_json(nullptr);
  return j.dump(2);
}

StopDecision early_stopping_update(History& h, int epoch, double train_loss, double metric,
                                   int patience) {
  if (!std::isfinite(metric)) throw ContractError("early stopping metric must be finite");
  if (!h.epochs.empty() && epoch <= h.epochs.back().epoch) {
    throw ContractError("early stopping epochs must strictly increase");
  }
  h.epochs.push_back(EpochRecord{epoch, train_loss, metric});
  if (metric > h.best_metric) {
    h.best_metric = metric;
    h.best_epoch = epoch;
    h.patience_left = patience;
  } else {
    --h.patience_left;
  }
  return h.patience_left <= 0 ? StopDecision::stop : StopDecision::continue_training;
}

}  // namespace absa
