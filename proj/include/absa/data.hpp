#ifndef ABSA_DATA_HPP_
#define ABSA_DATA_HPP_

// SemEval-2016 ABSA XML ingestion, tokenization, IOB span encoding and the
// JSON-lines interchange format.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "absa/errors.hpp"

namespace absa {

enum class Polarity : std::uint8_t { positive = 0, negative = 1, neutral = 2 };
inline constexpr std::size_t kNumPolarities = 3;

std::string_view to_string(Polarity p);
std::optional<Polarity> parse_polarity(std::string_view s);

struct Token {
  std::string surface;
  std::size_t start = 0;  // scalar-value offsets, [start, end)
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Character span [start, end) in scalar values.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  friend auto operator<=>(const Span&, const Span&) = default;
};

inline constexpr std::string_view kImplicitTarget = "NULL";

struct OpinionTuple {
  std::string target;
  std::size_t from = 0;
  std::size_t to = 0;
  std::string category;
  std::optional<Polarity> polarity;

  bool implicit() const { return target == kImplicitTarget; }
  friend bool operator==(const OpinionTuple&, const OpinionTuple&) = default;
};

struct AnnotatedSentence {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<OpinionTuple> opinions;

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct SemevalDocument {
  std::size_t review_count = 0;
  std::vector<AnnotatedSentence> sentences;

  std::size_t opinion_count() const;
};

/// Parses Reviews/Review/sentences/sentence documents. Sentences are
/// tokenized. Throws ParseError (with line number) for malformed XML and
/// ValidationError (naming the sentence id) for inconsistent offsets.
SemevalDocument parse_semeval_xml(std::istream& in);

/// Whitespace split, then leading and trailing punctuation detached one
/// character per token.
std::vector<Token> tokenize(std::string_view text);

/// Checks token and opinion invariants; throws ValidationError.
void validate_sentence(const AnnotatedSentence& s);

// --------------------------------------------------------------------------
// IOB tags. Numeric values double as CRF label indices.

enum class IobTag : std::uint8_t { begin = 0, inside = 1, outside = 2 };
inline constexpr std::size_t kNumIobTags = 3;

std::string_view to_string(IobTag t);
std::optional<IobTag> parse_iob_tag(std::string_view s);

/// Distinct explicit target spans, sorted.
std::vector<Span> target_spans(const AnnotatedSentence& s);

/// Tags tokens against spans. Throws ValidationError when two spans overlap
/// or claim the same token.
std::vector<IobTag> encode_spans(std::span<const Token> tokens, std::span<const Span> spans);
std::vector<IobTag> encode_iob(const AnnotatedSentence& s);

/// Maximal B/I runs become spans; a stray I (after O or at the start) opens
/// a new span as if it were B.
std::vector<Span> decode_iob(std::span<const IobTag> tags, std::span<const Token> tokens);

/// Tokens overlapping a character span.
std::vector<std::size_t> tokens_in_span(std::span<const Token> tokens, Span span);

// --------------------------------------------------------------------------
// Splitting

template <typename T>
struct DatasetSplit {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

/// Seeded shuffle, then validation and test take floor(ratio * n) items and
/// train takes the remainder.
template <typename T>
DatasetSplit<T> split_dataset(std::vector<T> items, std::array<double, 3> ratios,
                              std::uint64_t seed) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(items[i - 1], items[pick(rng)]);
  }
  const auto n = static_cast<double>(items.size());
  auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * n + 1e-9));
  auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * n + 1e-9));
  std::size_t n_train = items.size() - n_val - n_test;

  DatasetSplit<T> out;
  auto first = std::make_move_iterator(items.begin());
  out.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
  out.validation.assign(first + static_cast<std::ptrdiff_t>(n_train),
                        first + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_val),
                  std::make_move_iterator(items.end()));
  return out;
}

inline constexpr std::array<double, 3> kDefaultSplit = {0.7, 0.1, 0.2};

// --------------------------------------------------------------------------
// JSON lines: {"id","text","tokens":[[surface,start,end]],
//              "opinions":[{"target","from","to","category","polarity"}]}

std::string to_json_line(const AnnotatedSentence& s);
/// Missing "tokens" are recomputed with tokenize(). Throws ParseError.
AnnotatedSentence from_json_line(std::string_view line);

void write_jsonl(std::ostream& out, std::span<const AnnotatedSentence> sentences);
std::vector<AnnotatedSentence> read_jsonl(std::istream& in);

/// One word per line; blank lines ignored.
std::unordered_set<std::string> read_stopwords(std::istream& in);

}  // namespace absa

#endif  // ABSA_DATA_HPP_
