#include "absa/ian_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace absa {

AttnParams AttnParams::uniform(Index state_dim, Index query_dim, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix w(state_dim, query_dim);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  return AttnParams{Tensor::from_matrix(std::move(w), true), Tensor::zeros(Shape{1}, true)};
}

std::vector<NamedTensor> AttnParams::named(const std::string& prefix) const {
  return {{prefix + "weight", weight}, {prefix + "bias", bias}};
}

AttentionResult attention_pool(Tape& tape, std::span<const Tensor> states, const Tensor& query,
                               const AttnParams& p) {
  if (states.empty()) throw ContractError("attention_pool: no states");
  Tensor h = stack_rows(tape, states);
  Tensor projected_query = matmul(tape, p.weight, query);
  Tensor scores = tanh_act(tape, add_scalar(tape, matmul(tape, h, projected_query), p.bias));
  Tensor weights = softmax(tape, scores, 0);
  Tensor pooled = matmul(tape, transpose(tape, h), weights);
  return AttentionResult{std::move(weights), std::move(pooled)};
}

std::vector<NamedTensor> IanModel::parameters() const {
  std::vector<NamedTensor> out;
  if (words.trainable()) out.push_back({"words", words.matrix});
  for (auto& t : context_bgru.named("context_bgru.")) out.push_back(t);
  for (auto& t : target_bgru.named("target_bgru.")) out.push_back(t);
  for (auto& t : context_attn.named("context_attn.")) out.push_back(t);
  for (auto& t : target_attn.named("target_attn.")) out.push_back(t);
  out.push_back({"classifier.weight", classifier});
  out.push_back({"classifier.bias", classifier_bias});
  return out;
}

std::vector<NamedTensor> IanModel::tensors() const {
  auto out = parameters();
  if (!words.trainable()) out.insert(out.begin(), NamedTensor{"words", words.matrix});
  return out;
}

std::vector<bool> IanModel::decay_mask() const {
  std::vector<bool> mask;
  for (const auto& p : parameters()) mask.push_back(p.name != "words");
  return mask;
}

IanModel make_ian_model(const IanConfig& config, std::span<const AnnotatedSentence> corpus,
                        const EmbeddingTable* pretrained, bool freeze_embeddings, Rng& rng) {
  std::vector<std::vector<std::string>> tokens;
  for (const auto& s : corpus) tokens.push_back(token_surfaces(s));

  IanModel m;
  m.config = config;
  if (pretrained) m.config.word_dim = pretrained->dim();
  const double scale = config.init_scale;
  m.words = init_word_embeddings(build_vocab(tokens), m.config.word_dim, pretrained, scale, rng);
  m.words.set_trainable(!freeze_embeddings);
  const Index d = 2 * config.hidden_dim;
  m.context_bgru = BgruParams::uniform(m.config.word_dim, config.hidden_dim, scale, rng);
  m.target_bgru = BgruParams::uniform(m.config.word_dim, config.hidden_dim, scale, rng);
  m.context_attn = AttnParams::uniform(d, d, scale, rng);
  m.target_attn = AttnParams::uniform(d, d, scale, rng);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix w(static_cast<Index>(kNumPolarities), 2 * d);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  m.classifier = Tensor::from_matrix(std::move(w), true);
  m.classifier_bias = Tensor::zeros(Shape{static_cast<Index>(kNumPolarities)}, true);
  return m;
}

namespace {

std::vector<Tensor> embed(Tape& tape, const IanModel& m, std::span<const std::string> tokens,
                          bool training, Rng& rng) {
  std::vector<Tensor> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    out.push_back(dropout(tape, lookup(tape, m.words, t), m.config.dropout, training, rng));
  }
  return out;
}

}  // namespace

IanTrace ian_forward_traced(Tape& tape, const IanModel& m, std::span<const std::string> context,
                            std::span<const std::string> target, bool training, Rng& rng) {
  if (context.empty() || target.empty()) {
    throw ContractError("ian_forward: context and target must both be non-empty");
  }
  auto context_states = bgru_forward(tape, m.context_bgru, embed(tape, m, context, training, rng));
  auto target_states = bgru_forward(tape, m.target_bgru, embed(tape, m, target, training, rng));

  IanTrace tr;
  tr.context_mean = mean_rows(tape, stack_rows(tape, context_states));
  tr.target_mean = mean_rows(tape, stack_rows(tape, target_states));
  tr.context = attention_pool(tape, context_states, tr.target_mean, m.context_attn);
  tr.target = attention_pool(tape, target_states, tr.context_mean, m.target_attn);
  Tensor parts[] = {tr.context.pooled, tr.target.pooled};
  Tensor rep = concat(tape, parts);
  tr.logits = add(tape, matmul(tape, m.classifier, rep), m.classifier_bias);
  tr.probabilities = softmax(tape, tr.logits, 0);
  return tr;
}

Tensor ian_forward(Tape& tape, const IanModel& m, std::span<const std::string> context,
                   std::span<const std::string> target, bool training, Rng& rng) {
  return ian_forward_traced(tape, m, context, target, training, rng).probabilities;
}

std::vector<std::string> target_tokens(const AnnotatedSentence& s, std::optional<Span> span) {
  std::vector<std::string> out;
  if (span) {
    for (std::size_t i : tokens_in_span(s.tokens, *span)) out.push_back(s.tokens[i].surface);
  }
  if (out.empty()) out.emplace_back(kNullToken);
  return out;
}

std::vector<std::string> context_tokens(const AnnotatedSentence& s,
                                        const std::unordered_set<std::string>* stopwords) {
  std::vector<std::string> all = token_surfaces(s);
  if (!stopwords) return all;
  std::vector<std::string> kept;
  for (const auto& t : all) {
    if (!stopwords->contains(t)) kept.push_back(t);
  }
  return kept.empty() ? all : kept;
}

std::vector<PolaritySample> make_polarity_samples(std::span<const AnnotatedSentence> sentences,
                                                  const std::unordered_set<std::string>* stopwords) {
  std::vector<PolaritySample> out;
  for (const auto& s : sentences) {
    if (s.tokens.empty()) continue;
    auto context = context_tokens(s, stopwords);
    for (const auto& op : s.opinions) {
      if (!op.polarity) continue;
      std::optional<Span> span;
      if (!op.implicit()) span = Span{op.from, op.to};
      out.push_back(PolaritySample{context, target_tokens(s, span), *op.polarity});
    }
  }
  return out;
}

double ian_l2_penalty(const IanModel& m, double weight_decay) {
  double sq = 0.0;
  auto params = m.parameters();
  auto mask = m.decay_mask();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (mask[i]) sq += params[i].tensor.value().squaredNorm();
  }
  return 0.5 * weight_decay * sq;
}

namespace {

Tensor sample_loss(Tape& tape, const IanModel& m, const PolaritySample& s, bool training, Rng& rng) {
  auto tr = ian_forward_traced(tape, m, s.context, s.target, training, rng);
  Tensor log_probs = log_softmax(tape, tr.logits, 0);
  return affine(tape, pick(tape, log_probs, static_cast<Index>(s.label)), -1.0, 0.0);
}

}  // namespace

History train_ian(IanModel& model, const IanTrainConfig& config,
                  std::span<const PolaritySample> train, std::span<const PolaritySample> validation,
                  Rng& rng, const EpochCallback& on_epoch) {
  if (train.empty()) throw ContractError("train_ian: empty training set");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");

  auto named = model.parameters();
  std::vector<Tensor> params;
  for (const auto& p : named) params.push_back(p.tensor);
  Adam optimizer(params, model.decay_mask(), config.adam);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& eval_set = validation.empty() ? train : validation;

  History history;
  std::vector<Matrix> best;
  for (const auto& p : named) best.push_back(p.tensor.value());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++batch_index) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      const double inv = 1.0 / static_cast<double>(last - first);
      optimizer.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = first; k < last; ++k) {
        Tape tape;
        Tensor loss = sample_loss(tape, model, train[order[k]], true, rng);
        batch_loss += loss.item();
        backward(tape, affine(tape, loss, inv, 0.0));
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch_index + 1));
      }
      optimizer.step();
      epoch_loss += batch_loss;
    }
    double mean_loss = epoch_loss / static_cast<double>(train.size()) +
                       ian_l2_penalty(model, config.adam.weight_decay);
    double acc = evaluate_ian(model, eval_set).accuracy;
    double prev_best = history.best_metric;
    early_stopping_update(history, epoch + 1, mean_loss, acc, std::numeric_limits<int>::max());
    if (history.best_metric > prev_best) {
      for (std::size_t i = 0; i < named.size(); ++i) best[i] = named[i].tensor.value();
    }
    if (on_epoch) on_epoch(history.epochs.back());
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    Tensor t = named[i].tensor;
    t.mutable_value() = best[i];
  }
  return history;
}

PolarityPrediction predict_polarity(const IanModel& m, std::span<const std::string> context,
                                    std::span<const std::string> target) {
  Tape tape;
  Rng unused(0);
  Tensor probs = ian_forward(tape, m, context, target, false, unused);
  PolarityPrediction out;
  std::size_t best = 0;
  for (std::size_t k = 0; k < kNumPolarities; ++k) {
    out.probabilities[k] = probs.at(static_cast<Index>(k));
    if (out.probabilities[k] > out.probabilities[best]) best = k;
  }
  out.label = static_cast<Polarity>(best);
  return out;
}

PolarityPrediction predict_polarity(const IanModel& m, const AnnotatedSentence& sentence,
                                    std::optional<Span> target,
                                    const std::unordered_set<std::string>* stopwords) {
  return predict_polarity(m, context_tokens(sentence, stopwords), target_tokens(sentence, target));
}

AccuracyMetrics evaluate_ian(const IanModel& m, std::span<const PolaritySample> samples) {
  std::vector<Polarity> gold;
  std::vector<Polarity> predicted;
  for (const auto& s : samples) {
    gold.push_back(s.label);
    predicted.push_back(predict_polarity(m, s.context, s.target).label);
  }
  return accuracy<Polarity>(gold, predicted);
}

}  // namespace absa
