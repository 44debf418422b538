#ifndef ABSA_EMBEDDINGS_HPP_
#define ABSA_EMBEDDINGS_HPP_

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "absa/tensor.hpp"

namespace absa {

inline constexpr Index kPadIndex = 0;
inline constexpr Index kUnkIndex = 1;
inline constexpr Index kNullIndex = 2;

inline constexpr std::string_view kPadToken = "<PAD>";
inline constexpr std::string_view kUnkToken = "<UNK>";
inline constexpr std::string_view kNullToken = "<NULL>";
inline constexpr std::string_view kPadChar = "<PAD_CHAR>";
inline constexpr std::string_view kUnkChar = "<UNK_CHAR>";

/// Dense token <-> index map. Reserved entries occupy the lowest indices and
/// index 1 is always the unknown entry.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// <PAD>, <UNK>, <NULL>.
  static Vocabulary words();
  /// <PAD_CHAR>, <UNK_CHAR>.
  static Vocabulary characters();

  Index add(std::string_view token);
  std::optional<Index> find(std::string_view token) const;
  /// Falls back to the unknown entry.
  Index index_of(std::string_view token) const;
  const std::string& token(Index index) const { return tokens_[static_cast<std::size_t>(index)]; }

  Index size() const { return static_cast<Index>(tokens_.size()); }
  Index reserved_count() const { return reserved_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Rebuilds from a token list whose prefix must equal `reserved`.
  static Vocabulary from_tokens(std::vector<std::string> tokens, Index reserved);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.reserved_ == b.reserved_;
  }

 private:
  explicit Vocabulary(std::initializer_list<std::string_view> reserved);

  std::unordered_map<std::string, Index> index_;
  std::vector<std::string> tokens_;
  Index reserved_ = 0;
};

struct EmbeddingTable {
  Vocabulary vocab;
  Tensor matrix;  // [vocab.size() x dim]

  Index dim() const { return matrix.cols(); }
  bool trainable() const { return matrix.requires_grad(); }
  void set_trainable(bool on) { matrix.set_requires_grad(on); }
};

/// word2vec / fastText text format with optional "count dim" header.
/// <PAD> and <NULL> rows are zero, <UNK> is the mean of the loaded vectors.
EmbeddingTable load_word_vectors(std::istream& in, std::optional<Index> expected_dim = std::nullopt);
void save_word_vectors(std::ostream& out, const EmbeddingTable& table);

/// Tokens with count >= min_count after the reserved entries, by descending
/// frequency and then first occurrence.
Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, Index min_count = 1);

/// Characters of every token, in first-occurrence order.
Vocabulary build_char_alphabet(std::span<const std::vector<std::string>> corpus);

double char_init_bound(Index dim);

/// Uniform in [-sqrt(3/dim), +sqrt(3/dim)]; trainable.
EmbeddingTable init_char_embeddings(Vocabulary alphabet, Index dim, Rng& rng);

/// Rows found in `pretrained` are copied, others drawn from U(-scale, scale);
/// <PAD> and <NULL> are zero, <UNK> copies the pretrained <UNK> when given.
EmbeddingTable init_word_embeddings(Vocabulary vocab, Index dim, const EmbeddingTable* pretrained,
                                    double scale, Rng& rng);

Index lookup_index(const EmbeddingTable& table, std::string_view token);
/// Row for `token` (or <UNK>); on the tape iff the table is trainable.
Tensor lookup(Tape& tape, const EmbeddingTable& table, std::string_view token);

}  // namespace absa

#endif  // ABSA_EMBEDDINGS_HPP_
