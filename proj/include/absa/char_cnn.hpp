#ifndef ABSA_CHAR_CNN_HPP_
#define ABSA_CHAR_CNN_HPP_

#include <string_view>
#include <vector>

#include "absa/embeddings.hpp"
#include "absa/gradcheck.hpp"
#include "absa/tensor.hpp"

namespace absa {

/// Character-level word encoder: embed, convolve with a bank of filters,
/// max-pool over positions.
struct CharCnnParams {
  EmbeddingTable char_table;
  Tensor filters;      // [num_filters x window x char_dim]
  Tensor filter_bias;  // [num_filters]

  Index num_filters() const { return filters.shape()[0]; }
  Index window() const { return filters.shape()[1]; }
  Index char_dim() const { return filters.shape()[2]; }

  /// Filters from U(-scale, scale), zero bias.
  static CharCnnParams create(EmbeddingTable char_table, Index num_filters, Index window,
                              double scale, Rng& rng);

  std::vector<NamedTensor> named(const std::string& prefix) const;
};

/// Character indices of `word` after padding: (window - 1) / 2 pads on each
/// side, then right-padded up to the window length.
std::vector<Index> padded_char_indices(const CharCnnParams& p, std::string_view word);

Tensor char_cnn_encode(Tape& tape, const CharCnnParams& p, std::string_view word, bool training,
                       double dropout_rate, Rng& rng);

}  // namespace absa

#endif  // ABSA_CHAR_CNN_HPP_
