#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "absa/char_cnn.hpp"
#include "absa/text.hpp"

using namespace absa;

namespace {

CharCnnParams make(Index filters, Index window, Index dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::string>> words = {{"hotel", "room", "abc", "الغرف"}};
  return CharCnnParams::create(init_char_embeddings(build_char_alphabet(words), dim, rng), filters,
                               window, 0.5, rng);
}

std::vector<double> encode(const CharCnnParams& p, std::string_view word) {
  Tape tape;
  Rng rng(0);
  Tensor out = char_cnn_encode(tape, p, word, false, 0.0, rng);
  std::vector<double> v;
  for (Index i = 0; i < out.size(); ++i) v.push_back(out.at(i));
  return v;
}

// Sliding windows over explicitly padded character rows.
std::vector<double> sliding_oracle(const CharCnnParams& p, std::string_view word) {
  const Index w = p.window(), d = p.char_dim(), F = p.num_filters();
  std::vector<Index> ids(static_cast<std::size_t>((w - 1) / 2), kPadIndex);
  for (char32_t c : text::decode_utf8(word)) {
    ids.push_back(p.char_table.vocab.index_of(text::encode_utf8(c)));
  }
  ids.insert(ids.end(), static_cast<std::size_t>((w - 1) / 2), kPadIndex);
  while (static_cast<Index>(ids.size()) < w) ids.push_back(kPadIndex);
  const Matrix& table = p.char_table.matrix.value();
  const auto& filt = p.filters.value();  // [F x (w*d)]
  std::vector<double> out(static_cast<std::size_t>(F), -INFINITY);
  for (std::size_t start = 0; start + static_cast<std::size_t>(w) <= ids.size(); ++start) {
    for (Index f = 0; f < F; ++f) {
      double s = p.filter_bias.at(f);
      for (Index k = 0; k < w; ++k) {
        for (Index j = 0; j < d; ++j) {
          s += filt(f, k * d + j) * table(ids[start + static_cast<std::size_t>(k)], j);
        }
      }
      out[static_cast<std::size_t>(f)] = std::max(out[static_cast<std::size_t>(f)], s);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("zero filters give a zero vector") {
  CharCnnParams p = make(4, 3, 5, 1);
  p.filters.mutable_value().setZero();
  for (auto word : {"", "a", "hotel", "الغرف"}) {
    for (double v : encode(p, word)) CHECK(v == 0.0);
  }
}

TEST_CASE("indicator filter matches a sliding-window oracle") {
  CharCnnParams p = make(1, 3, 5, 2);
  Index a = p.char_table.vocab.index_of("a");
  p.filters.mutable_value().setZero();
  // Centre tap is the embedding of 'a'.
  p.filters.mutable_value().block(0, 5, 1, 5) = p.char_table.matrix.value().row(a);
  for (auto word : {"abc", "cab", "room", "x"}) {
    CAPTURE(word);
    auto got = encode(p, word);
    auto want = sliding_oracle(p, word);
    CHECK(std::abs(got[0] - want[0]) < 1e-12);
  }
  const double self = p.char_table.matrix.value().row(a).squaredNorm();
  CHECK(encode(p, "abc")[0] >= self - 1e-12);
}

TEST_CASE("random filters match the oracle for several window sizes") {
  for (Index w : {1, 2, 3, 5}) {
    CharCnnParams p = make(3, w, 4, 10 + static_cast<std::uint64_t>(w));
    for (auto word : {"", "a", "ab", "hotel", "الغرف"}) {
      auto got = encode(p, word);
      auto want = sliding_oracle(p, word);
      for (std::size_t f = 0; f < got.size(); ++f) CHECK(std::abs(got[f] - want[f]) < 1e-12);
    }
  }
}

TEST_CASE("output length does not depend on word length") {
  CharCnnParams p = make(30, 3, 25, 3);
  CHECK(encode(p, "a").size() == 30);
  CHECK(encode(p, "abc").size() == 30);
  CHECK(encode(p, std::string(40, 'r')).size() == 30);
}

TEST_CASE("property: reversing a non-palindrome changes the output") {
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 20 && !differs; ++seed) {
    CharCnnParams p = make(3, 3, 4, 100 + seed);
    auto fwd = encode(p, "hotel");
    auto rev = encode(p, "letoh");
    for (std::size_t i = 0; i < fwd.size(); ++i) differs |= fwd[i] != rev[i];
  }
  CHECK(differs);
}

TEST_CASE("padding indices") {
  CharCnnParams p = make(1, 3, 2, 4);
  auto ids = padded_char_indices(p, "ab");
  REQUIRE(ids.size() == 4);
  CHECK(ids.front() == kPadIndex);
  CHECK(ids.back() == kPadIndex);
  CHECK(padded_char_indices(p, "").size() == 3);
  CHECK(padded_char_indices(p, "zz")[1] == kUnkIndex);
}

TEST_CASE("dropout on character embeddings is inactive at inference") {
  CharCnnParams p = make(3, 3, 4, 5);
  Tape tape;
  Rng a(1), b(2);
  Tensor x = char_cnn_encode(tape, p, "hotel", false, 0.5, a);
  Tensor y = char_cnn_encode(tape, p, "hotel", false, 0.5, b);
  CHECK(x.value() == y.value());
  Rng c(3);
  Tensor z = char_cnn_encode(tape, p, "hotel", true, 0.5, c);
  CHECK(z.size() == 3);
}
