#include "absa/embeddings.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "absa/errors.hpp"
#include "absa/text.hpp"

namespace absa {

Vocabulary::Vocabulary(std::initializer_list<std::string_view> reserved) {
  for (auto r : reserved) add(r);
  reserved_ = size();
}

Vocabulary Vocabulary::words() { return Vocabulary{kPadToken, kUnkToken, kNullToken}; }

Vocabulary Vocabulary::characters() { return Vocabulary{kPadChar, kUnkChar}; }

Index Vocabulary::add(std::string_view token) {
  auto it = index_.find(std::string(token));
  if (it != index_.end()) return it->second;
  Index idx = size();
  tokens_.emplace_back(token);
  index_.emplace(tokens_.back(), idx);
  return idx;
}

std::optional<Index> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index Vocabulary::index_of(std::string_view token) const {
  return find(token).value_or(kUnkIndex);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, Index reserved) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (v.find(t)) throw ParseError("duplicate vocabulary entry \"" + t + "\"");
    v.add(t);
  }
  v.reserved_ = reserved;
  return v;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_integer(std::string_view s, long long& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_double(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable load_word_vectors(std::istream& in, std::optional<Index> expected_dim) {
  Vocabulary vocab = Vocabulary::words();
  std::vector<std::vector<double>> rows;
  Index dim = -1;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    auto fields = split_spaces(line);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      long long count = 0;
      long long header_dim = 0;
      if (fields.size() == 2 && parse_integer(fields[0], count) &&
          parse_integer(fields[1], header_dim)) {
        if (header_dim <= 0) throw ParseError("line 1: non-positive dimension in header");
        dim = static_cast<Index>(header_dim);
        continue;
      }
    }
    if (dim < 0) dim = static_cast<Index>(fields.size()) - 1;
    if (dim <= 0 || static_cast<Index>(fields.size()) - 1 != dim) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                       " values, got " + std::to_string(fields.size() - 1));
    }
    std::vector<double> values(static_cast<std::size_t>(dim));
    for (Index k = 0; k < dim; ++k) {
      if (!parse_double(fields[static_cast<std::size_t>(k) + 1], values[static_cast<std::size_t>(k)]) ||
          !std::isfinite(values[static_cast<std::size_t>(k)])) {
        throw ParseError("line " + std::to_string(line_no) + ": invalid number \"" +
                         std::string(fields[static_cast<std::size_t>(k) + 1]) + "\"");
      }
    }
    if (vocab.find(fields[0])) continue;  // first occurrence wins
    vocab.add(fields[0]);
    rows.push_back(std::move(values));
  }
  if (dim <= 0) throw ParseError("word-vector file contains no vectors");
  if (expected_dim && *expected_dim != dim) {
    throw ConfigError("word vectors have dimension " + std::to_string(dim) + ", expected " +
                      std::to_string(*expected_dim));
  }

  Matrix m = Matrix::Zero(vocab.size(), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    m.row(static_cast<Index>(r) + vocab.reserved_count()) =
        Eigen::Map<const Eigen::RowVectorXd>(rows[r].data(), dim);
  }
  if (!rows.empty()) {
    m.row(kUnkIndex) = m.bottomRows(static_cast<Index>(rows.size())).colwise().sum() /
                       static_cast<double>(rows.size());
  }
  return EmbeddingTable{std::move(vocab), Tensor::from_matrix(std::move(m), false)};
}

void save_word_vectors(std::ostream& out, const EmbeddingTable& table) {
  const Index reserved = table.vocab.reserved_count();
  out << (table.vocab.size() - reserved) << ' ' << table.dim() << '\n';
  char buf[32];
  for (Index r = reserved; r < table.vocab.size(); ++r) {
    out << table.vocab.token(r);
    for (Index c = 0; c < table.dim(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof(buf), table.matrix.value()(r, c));
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
  }
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> corpus, Index min_count) {
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  struct Entry {
    Index count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string, Entry> seen;
  std::vector<std::string> order;
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      auto [it, inserted] = seen.try_emplace(tok, Entry{0, order.size()});
      if (inserted) order.push_back(tok);
      ++it->second.count;
    }
  }
  std::vector<std::string> kept;
  for (const auto& tok : order) {
    if (seen[tok].count >= min_count) kept.push_back(tok);
  }
  std::stable_sort(kept.begin(), kept.end(), [&](const std::string& a, const std::string& b) {
    return seen[a].count > seen[b].count;
  });
  Vocabulary vocab = Vocabulary::words();
  for (const auto& tok : kept) vocab.add(tok);
  return vocab;
}

Vocabulary build_char_alphabet(std::span<const std::vector<std::string>> corpus) {
  Vocabulary alphabet = Vocabulary::characters();
  for (const auto& sentence : corpus) {
    for (const auto& tok : sentence) {
      for (char32_t c : text::decode_utf8(tok)) alphabet.add(text::encode_utf8(c));
    }
  }
  return alphabet;
}

double char_init_bound(Index dim) { return std::sqrt(3.0 / static_cast<double>(dim)); }

EmbeddingTable init_char_embeddings(Vocabulary alphabet, Index dim, Rng& rng) {
  if (dim <= 0) throw ConfigError("character embedding dimension must be positive");
  const double b = char_init_bound(dim);
  std::uniform_real_distribution<double> uniform(-b, b);
  Matrix m(alphabet.size(), dim);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = uniform(rng);
  return EmbeddingTable{std::move(alphabet), Tensor::from_matrix(std::move(m), true)};
}

EmbeddingTable init_word_embeddings(Vocabulary vocab, Index dim, const EmbeddingTable* pretrained,
                                    double scale, Rng& rng) {
  if (pretrained && pretrained->dim() != dim) {
    throw ConfigError("pretrained vectors have dimension " + std::to_string(pretrained->dim()) +
                      ", model expects " + std::to_string(dim));
  }
  std::uniform_real_distribution<double> uniform(-scale, scale);
  Matrix m(vocab.size(), dim);
  for (Index r = 0; r < vocab.size(); ++r) {
    for (Index c = 0; c < dim; ++c) m(r, c) = uniform(rng);
    if (r < vocab.reserved_count()) continue;
    if (pretrained) {
      if (auto idx = pretrained->vocab.find(vocab.token(r))) {
        m.row(r) = pretrained->matrix.value().row(*idx);
      }
    }
  }
  m.row(kPadIndex).setZero();
  m.row(kNullIndex).setZero();
  if (pretrained) m.row(kUnkIndex) = pretrained->matrix.value().row(kUnkIndex);
  return EmbeddingTable{std::move(vocab), Tensor::from_matrix(std::move(m), true)};
}

Index lookup_index(const EmbeddingTable& table, std::string_view token) {
  return table.vocab.index_of(token);
}

Tensor lookup(Tape& tape, const EmbeddingTable& table, std::string_view token) {
  return embedding_row(tape, table.matrix, lookup_index(table, token));
}

}  // namespace absa
