#include "absa/char_cnn.hpp"

#include "absa/errors.hpp"
#include "absa/text.hpp"

namespace absa {

CharCnnParams CharCnnParams::create(EmbeddingTable char_table, Index num_filters, Index window,
                                    double scale, Rng& rng) {
  if (num_filters < 1 || window < 1) {
    throw ConfigError("char CNN needs at least one filter and a window of at least one");
  }
  const Index d = char_table.dim();
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix f(num_filters, window * d);
  for (Index i = 0; i < f.size(); ++i) f.data()[i] = u(rng);
  Tensor filters = Tensor::with_shape(Shape{num_filters, window, d}, std::move(f), true);
  Tensor bias = Tensor::zeros(Shape{num_filters}, true);
  return CharCnnParams{std::move(char_table), std::move(filters), std::move(bias)};
}

std::vector<NamedTensor> CharCnnParams::named(const std::string& prefix) const {
  std::vector<NamedTensor> out;
  if (char_table.trainable()) out.push_back({prefix + "chars", char_table.matrix});
  out.push_back({prefix + "filters", filters});
  out.push_back({prefix + "filter_bias", filter_bias});
  return out;
}

std::vector<Index> padded_char_indices(const CharCnnParams& p, std::string_view word) {
  const Index w = p.window();
  const auto side = static_cast<std::size_t>((w - 1) / 2);
  std::vector<Index> idx(side, kPadIndex);
  for (char32_t c : text::decode_utf8(word)) {
    idx.push_back(p.char_table.vocab.index_of(text::encode_utf8(c)));
  }
  idx.insert(idx.end(), side, kPadIndex);
  while (static_cast<Index>(idx.size()) < w) idx.push_back(kPadIndex);
  return idx;
}

Tensor char_cnn_encode(Tape& tape, const CharCnnParams& p, std::string_view word, bool training,
                       double dropout_rate, Rng& rng) {
  if (p.char_table.dim() != p.char_dim()) {
    throw ShapeError("char CNN filters expect dimension " + std::to_string(p.char_dim()) +
                     ", table has " + std::to_string(p.char_table.dim()));
  }
  auto idx = padded_char_indices(p, word);
  Tensor chars = gather_rows(tape, p.char_table.matrix, idx);
  chars = dropout(tape, chars, dropout_rate, training, rng);
  Tensor windows = unfold_windows(tape, chars, p.window());
  // matmul_nt reads the rank-3 filter bank through its [F x (w * d)] storage.
  Tensor responses = matmul_nt(tape, windows, p.filters);
  return max_rows(tape, add_row_broadcast(tape, responses, p.filter_bias));
}

}  // namespace absa
