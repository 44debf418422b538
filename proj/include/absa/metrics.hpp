#ifndef ABSA_METRICS_HPP_
#define ABSA_METRICS_HPP_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "absa/data.hpp"

namespace absa {

struct SpanMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  /// Derives precision, recall and F1 from the counts. Zero denominators
  /// give 0, except that no gold and no predictions give F1 = 1.
  static SpanMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
  std::string to_json() const;
};

/// Exact-offset matching per sentence; each gold span matches at most once.
SpanMetrics span_f1(std::span<const std::vector<Span>> gold,
                    std::span<const std::vector<Span>> predicted);

struct AccuracyMetrics {
  double accuracy = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;

  std::string to_json() const;
};

/// Throws ContractError on length mismatch or empty input.
template <typename Label>
AccuracyMetrics accuracy(std::span<const Label> gold, std::span<const Label> predicted) {
  if (gold.size() != predicted.size()) {
    throw ContractError("accuracy: " + std::to_string(gold.size()) + " gold labels vs " +
                        std::to_string(predicted.size()) + " predictions");
  }
  if (gold.empty()) throw ContractError("accuracy: no samples");
  AccuracyMetrics m;
  m.total = gold.size();
  for (std::size_t i = 0; i < gold.size(); ++i) m.correct += gold[i] == predicted[i] ? 1 : 0;
  m.accuracy = static_cast<double>(m.correct) / static_cast<double>(m.total);
  return m;
}

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_metric = 0.0;
};

struct History {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;  // epoch number of the best record, -1 before any
  double best_metric = -std::numeric_limits<double>::infinity();
  int patience_left = 0;

  std::string to_json() const;
};

enum class StopDecision { continue_training, stop };

/// Records the epoch. A strictly greater metric becomes the best and resets
/// patience; anything else spends one unit of patience. Stops at zero.
StopDecision early_stopping_update(History& h, int epoch, double train_loss, double metric,
                                   int patience);

}  // namespace absa

#endif  // ABSA_METRICS_HPP_
