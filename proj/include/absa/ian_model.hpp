#ifndef ABSA_IAN_MODEL_HPP_
#define ABSA_IAN_MODEL_HPP_

// Interactive attention polarity classifier over bidirectional GRU encoders.
// Context and target are encoded separately, mean-pooled, and each side is
// attention-pooled with the other side's mean as the query. The two pooled
// vectors are concatenated and classified.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "absa/data.hpp"
#include "absa/embeddings.hpp"
#include "absa/metrics.hpp"
#include "absa/optim.hpp"
#include "absa/ote_model.hpp"
#include "absa/recurrent.hpp"

namespace absa {

/// score_i = tanh(h_i . W q + b).
struct AttnParams {
  Tensor weight;  // [state_dim x query_dim]
  Tensor bias;    // [1]

  static AttnParams uniform(Index state_dim, Index query_dim, double scale, Rng& rng);
  std::vector<NamedTensor> named(const std::string& prefix) const;
};

struct AttentionResult {
  Tensor weights;  // [n], sums to 1
  Tensor pooled;   // [state_dim]
};

/// Throws ContractError when `states` is empty.
AttentionResult attention_pool(Tape& tape, std::span<const Tensor> states, const Tensor& query,
                               const AttnParams& p);

struct IanConfig {
  Index word_dim = 300;
  Index hidden_dim = 150;  // per direction; 300 once concatenated
  double dropout = 0.3;
  double init_scale = 0.1;
};

struct IanTrainConfig {
  AdamConfig adam;
  std::size_t batch_size = 64;
  int epochs = 12;
};

struct IanModel {
  IanConfig config;
  EmbeddingTable words;
  BgruParams context_bgru;
  BgruParams target_bgru;
  AttnParams context_attn;  // attends context states with the target query
  AttnParams target_attn;   // attends target states with the context query
  Tensor classifier;        // [3 x 4*hidden]
  Tensor classifier_bias;   // [3]

  std::vector<NamedTensor> parameters() const;
  std::vector<NamedTensor> tensors() const;
  /// Parallel to parameters(): whether L2 applies (everything but embeddings).
  std::vector<bool> decay_mask() const;
};

IanModel make_ian_model(const IanConfig& config, std::span<const AnnotatedSentence> corpus,
                        const EmbeddingTable* pretrained, bool freeze_embeddings, Rng& rng);

struct IanTrace {
  Tensor logits;
  Tensor probabilities;
  AttentionResult context;
  AttentionResult target;
  Tensor context_mean;
  Tensor target_mean;
};

IanTrace ian_forward_traced(Tape& tape, const IanModel& m, std::span<const std::string> context,
                            std::span<const std::string> target, bool training, Rng& rng);
/// Class probabilities [3] in Polarity order.
Tensor ian_forward(Tape& tape, const IanModel& m, std::span<const std::string> context,
                   std::span<const std::string> target, bool training, Rng& rng);

struct PolaritySample {
  std::vector<std::string> context;
  std::vector<std::string> target;
  Polarity label = Polarity::neutral;
};

/// Target tokens are those overlapping the opinion span; implicit targets
/// (or spans covering no token) become a single <NULL> token.
std::vector<std::string> target_tokens(const AnnotatedSentence& s, std::optional<Span> span);

/// Context tokens, minus stopwords when a list is given (never emptied).
std::vector<std::string> context_tokens(const AnnotatedSentence& s,
                                        const std::unordered_set<std::string>* stopwords);

/// One sample per opinion carrying a polarity.
std::vector<PolaritySample> make_polarity_samples(
    std::span<const AnnotatedSentence> sentences,
    const std::unordered_set<std::string>* stopwords = nullptr);

/// (lambda / 2) * sum of squares over decayed parameters; its gradient is the
/// lambda * theta term Adam adds.
double ian_l2_penalty(const IanModel& m, double weight_decay);

/// Adam over mean cross-entropy for a fixed number of epochs; keeps the
/// best-validation-accuracy snapshot.
History train_ian(IanModel& model, const IanTrainConfig& config,
                  std::span<const PolaritySample> train, std::span<const PolaritySample> validation,
                  Rng& rng, const EpochCallback& on_epoch = {});

struct PolarityPrediction {
  Polarity label = Polarity::positive;
  std::array<double, kNumPolarities> probabilities{};
};

PolarityPrediction predict_polarity(const IanModel& m, std::span<const std::string> context,
                                    std::span<const std::string> target);
PolarityPrediction predict_polarity(const IanModel& m, const AnnotatedSentence& sentence,
                                    std::optional<Span> target,
                                    const std::unordered_set<std::string>* stopwords = nullptr);

AccuracyMetrics evaluate_ian(const IanModel& m, std::span<const PolaritySample> samples);

}  // namespace absa

#endif  // ABSA_IAN_MODEL_HPP_
