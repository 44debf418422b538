#include "absa/ote_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absa/optim.hpp"

namespace absa {

std::vector<std::string> iob_label_names() {
  return {std::string(to_string(IobTag::begin)), std::string(to_string(IobTag::inside)),
          std::string(to_string(IobTag::outside))};
}

std::vector<NamedTensor> OteModel::parameters() const {
  std::vector<NamedTensor> out;
  if (words.trainable()) out.push_back({"words", words.matrix});
  for (auto& t : char_cnn.named("char_cnn.")) out.push_back(t);
  for (auto& t : bgru.named("bgru.")) out.push_back(t);
  out.push_back({"projection.weight", projection});
  out.push_back({"projection.bias", projection_bias});
  out.push_back({"crf.transitions", crf.transitions});
  return out;
}

std::vector<NamedTensor> OteModel::tensors() const {
  auto out = parameters();
  if (!words.trainable()) out.insert(out.begin(), NamedTensor{"words", words.matrix});
  if (!char_cnn.char_table.trainable()) {
    out.push_back({"char_cnn.chars", char_cnn.char_table.matrix});
  }
  return out;
}

std::vector<std::string> token_surfaces(const AnnotatedSentence& s) {
  std::vector<std::string> out;
  out.reserve(s.tokens.size());
  for (const auto& t : s.tokens) out.push_back(t.surface);
  return out;
}

OteModel make_ote_model(const OteConfig& config, std::span<const AnnotatedSentence> corpus,
                        const EmbeddingTable* pretrained, bool freeze_embeddings, Rng& rng) {
  std::vector<std::vector<std::string>> tokens;
  tokens.reserve(corpus.size());
  for (const auto& s : corpus) tokens.push_back(token_surfaces(s));

  OteModel m;
  m.config = config;
  if (pretrained) m.config.word_dim = pretrained->dim();
  m.words = init_word_embeddings(build_vocab(tokens), m.config.word_dim, pretrained,
                                 config.init_scale, rng);
  m.words.set_trainable(!freeze_embeddings);
  m.char_cnn = CharCnnParams::create(
      init_char_embeddings(build_char_alphabet(tokens), config.char_dim, rng), config.num_filters,
      config.window, config.init_scale, rng);
  m.bgru = BgruParams::uniform(m.config.word_dim + config.num_filters, config.hidden_dim,
                               config.init_scale, rng);
  std::uniform_real_distribution<double> u(-config.init_scale, config.init_scale);
  Matrix proj(static_cast<Index>(kNumIobTags), 2 * config.hidden_dim);
  for (Index i = 0; i < proj.size(); ++i) proj.data()[i] = u(rng);
  m.projection = Tensor::from_matrix(std::move(proj), true);
  m.projection_bias = Tensor::zeros(Shape{static_cast<Index>(kNumIobTags)}, true);
  m.crf = CrfParams::create(iob_label_names());
  return m;
}

Tensor ote_forward(Tape& tape, const OteModel& m, std::span<const std::string> tokens,
                   bool training, Rng& rng) {
  if (tokens.empty()) throw ContractError("ote_forward: empty sentence");
  const double rate = m.config.dropout;
  std::vector<Tensor> inputs;
  inputs.reserve(tokens.size());
  for (const auto& tok : tokens) {
    Tensor parts[] = {lookup(tape, m.words, tok),
                      char_cnn_encode(tape, m.char_cnn, tok, training, rate, rng)};
    inputs.push_back(dropout(tape, concat(tape, parts), rate, training, rng));
  }
  auto states = bgru_forward(tape, m.bgru, inputs);
  std::vector<Tensor> scores;
  scores.reserve(states.size());
  for (const auto& h : states) {
    Tensor dropped = dropout(tape, h, rate, training, rng);
    scores.push_back(add(tape, matmul(tape, m.projection, dropped), m.projection_bias));
  }
  return stack_rows(tape, scores);
}

std::vector<OteExample> make_ote_examples(std::span<const AnnotatedSentence> sentences) {
  std::vector<OteExample> out;
  for (const auto& s : sentences) {
    if (s.tokens.empty()) continue;
    OteExample ex;
    ex.tokens = token_surfaces(s);
    for (IobTag t : encode_iob(s)) ex.tags.push_back(static_cast<Index>(t));
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<IobTag> predict_ote_tags(const OteModel& m, std::span<const std::string> tokens) {
  if (tokens.empty()) return {};
  Tape tape;
  Rng unused(0);
  Tensor emissions = ote_forward(tape, m, tokens, false, unused);
  auto decoded = viterbi_decode(emissions, m.crf);
  std::vector<IobTag> tags;
  tags.reserve(decoded.tags.size());
  for (Index t : decoded.tags) tags.push_back(static_cast<IobTag>(t));
  return tags;
}

std::vector<Span> predict_ote(const OteModel& m, const AnnotatedSentence& sentence) {
  auto tags = predict_ote_tags(m, token_surfaces(sentence));
  return decode_iob(tags, sentence.tokens);
}

SpanMetrics evaluate_ote(const OteModel& m, std::span<const AnnotatedSentence> sentences) {
  std::vector<std::vector<Span>> gold;
  std::vector<std::vector<Span>> predicted;
  for (const auto& s : sentences) {
    gold.push_back(target_spans(s));
    predicted.push_back(predict_ote(m, s));
  }
  return span_f1(gold, predicted);
}

namespace {

std::vector<Matrix> snapshot(std::span<const NamedTensor> params) {
  std::vector<Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.tensor.value());
  return out;
}

void restore(std::span<const NamedTensor> params, const std::vector<Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].tensor;
    t.mutable_value() = values[i];
  }
}

}  // namespace

History train_ote(OteModel& model, const OteTrainConfig& config,
                  std::span<const AnnotatedSentence> train,
                  std::span<const AnnotatedSentence> validation, Rng& rng,
                  const EpochCallback& on_epoch) {
  auto examples = make_ote_examples(train);
  if (examples.empty()) throw ContractError("train_ote: no non-empty training sentences");
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");

  auto named = model.parameters();
  std::vector<Tensor> params;
  for (const auto& p : named) params.push_back(p.tensor);
  SgdMomentum optimizer(params, {config.initial_lr, config.lr_decay, config.momentum});

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  History history;
  std::vector<Matrix> best = snapshot(named);

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch_size, ++batch_index) {
      const std::size_t last = std::min(order.size(), first + config.batch_size);
      const double inv = 1.0 / static_cast<double>(last - first);
      optimizer.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = first; k < last; ++k) {
        const auto& ex = examples[order[k]];
        Tape tape;
        Tensor emissions = ote_forward(tape, model, ex.tokens, true, rng);
        Tensor loss = crf_nll(tape, emissions, model.crf, ex.tags);
        batch_loss += loss.item();
        backward(tape, affine(tape, loss, inv, 0.0));
      }
      if (!std::isfinite(batch_loss)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch_index + 1));
      }
      clip_global_norm(params, config.clip_norm);
      optimizer.step(epoch);
      epoch_loss += batch_loss;
    }

    double f1 = evaluate_ote(model, validation).f1;
    double prev_best = history.best_metric;
    auto decision = early_stopping_update(history, epoch + 1,
                                          epoch_loss / static_cast<double>(examples.size()), f1,
                                          config.patience);
    if (history.best_metric > prev_best) best = snapshot(named);
    if (on_epoch) on_epoch(history.epochs.back());
    if (decision == StopDecision::stop) break;
  }
  restore(named, best);
  return history;
}

}  // namespace absa
