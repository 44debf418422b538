#ifndef ABSA_OTE_MODEL_HPP_
#define ABSA_OTE_MODEL_HPP_

// Opinion-target extractor: word embedding + character CNN feature per token,
// dropout, bidirectional GRU, dropout, affine projection to IOB emission
// scores, linear-chain CRF.

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "absa/char_cnn.hpp"
#include "absa/crf.hpp"
#include "absa/data.hpp"
#include "absa/embeddings.hpp"
#include "absa/metrics.hpp"
#include "absa/recurrent.hpp"

namespace absa {

struct OteConfig {
  Index word_dim = 100;
  Index char_dim = 25;
  Index num_filters = 30;
  Index window = 3;
  Index hidden_dim = 100;  // per direction
  double dropout = 0.5;
  double init_scale = 0.1;
};

struct OteTrainConfig {
  double initial_lr = 0.01;
  double lr_decay = 0.04;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;
  int max_epochs = 100;
  int patience = 10;
};

struct OteModel {
  OteConfig config;
  EmbeddingTable words;
  CharCnnParams char_cnn;
  BgruParams bgru;
  Tensor projection;       // [3 x 2*hidden]
  Tensor projection_bias;  // [3]
  CrfParams crf;

  /// Tensors updated by training (frozen word tables excluded).
  std::vector<NamedTensor> parameters() const;
  /// Every tensor, as serialized.
  std::vector<NamedTensor> tensors() const;
};

std::vector<std::string> iob_label_names();

/// Vocabulary and character alphabet come from `corpus`; word rows are
/// copied from `pretrained` where available.
OteModel make_ote_model(const OteConfig& config, std::span<const AnnotatedSentence> corpus,
                        const EmbeddingTable* pretrained, bool freeze_embeddings, Rng& rng);

/// Emission scores [T x 3]. Throws ContractError for an empty sentence.
Tensor ote_forward(Tape& tape, const OteModel& m, std::span<const std::string> tokens,
                   bool training, Rng& rng);

struct OteExample {
  std::vector<std::string> tokens;
  std::vector<Index> tags;
};

/// Gold tag sequences for every sentence with at least one token.
std::vector<OteExample> make_ote_examples(std::span<const AnnotatedSentence> sentences);

std::vector<std::string> token_surfaces(const AnnotatedSentence& s);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch SGD with momentum, scheduled learning rate, global-norm
/// clipping, and early stopping on validation span F1. Trains `model` in
/// place and leaves it at the best validation snapshot.
History train_ote(OteModel& model, const OteTrainConfig& config,
                  std::span<const AnnotatedSentence> train,
                  std::span<const AnnotatedSentence> validation, Rng& rng,
                  const EpochCallback& on_epoch = {});

std::vector<IobTag> predict_ote_tags(const OteModel& m, std::span<const std::string> tokens);
std::vector<Span> predict_ote(const OteModel& m, const AnnotatedSentence& sentence);
SpanMetrics evaluate_ote(const OteModel& m, std::span<const AnnotatedSentence> sentences);

}  // namespace absa

#endif  // ABSA_OTE_MODEL_HPP_
