#include "support/synthetic.hpp"

#include <array>
#include <sstream>

#include "absa/text.hpp"

namespace absa::testing {

AnnotatedSentence sentence_from_words(const std::string& id, const std::vector<std::string>& words,
                                      const std::vector<Mark>& marks) {
  AnnotatedSentence s;
  s.id = id;
  std::vector<std::size_t> starts;
  std::vector<std::size_t> ends;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) {
      s.text += ' ';
      ++pos;
    }
    starts.push_back(pos);
    s.text += words[i];
    pos += text::codepoint_length(words[i]);
    ends.push_back(pos);
  }
  s.tokens = tokenize(s.text);
  for (const auto& m : marks) {
    OpinionTuple op;
    op.from = starts[m.first];
    op.to = ends[m.last];
    op.target = text::slice(s.text, op.from, op.to);
    op.category = "GENERAL";
    op.polarity = m.polarity;
    s.opinions.push_back(std::move(op));
  }
  return s;
}

std::vector<AnnotatedSentence> synthetic_ote_corpus(std::size_t n) {
  const std::vector<std::vector<std::string>> targets = {
      {"room"}, {"pool"}, {"staff"}, {"breakfast"}, {"front", "desk"}, {"wifi"}, {"room", "service"},
      {"view"}};
  const std::array<std::string, 4> adjectives = {"clean", "noisy", "fine", "slow"};
  std::vector<AnnotatedSentence> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t1 = targets[i % targets.size()];
    const auto& t2 = targets[(i * 3 + 1) % targets.size()];
    const std::string& adj = adjectives[i % adjectives.size()];
    std::vector<std::string> w;
    std::vector<Mark> marks;
    auto add_target = [&](const std::vector<std::string>& t) {
      w.push_back("the");
      marks.push_back({w.size(), w.size() + t.size() - 1, std::nullopt});
      w.insert(w.end(), t.begin(), t.end());
    };
    switch (i % 5) {
      case 0:
        add_target(t1);
        w.insert(w.end(), {"was", adj});
        break;
      case 1:
        w.insert(w.end(), {"we", "loved"});
        add_target(t1);
        break;
      case 2:
        add_target(t1);
        w.push_back("and");
        add_target(t2);
        w.insert(w.end(), {"were", adj});
        break;
      case 3:
        w.insert(w.end(), {"nothing", "to", "say"});
        break;
      default:
        w.insert(w.end(), {"honestly", "the"});
        marks.push_back({w.size(), w.size() + t2.size() - 1, std::nullopt});
        w.insert(w.end(), t2.begin(), t2.end());
        w.insert(w.end(), {"felt", adj});
        break;
    }
    out.push_back(sentence_from_words("ote" + std::to_string(i), w, marks));
  }
  return out;
}

std::vector<AnnotatedSentence> synthetic_polarity_corpus() {
  const std::array<std::string, 6> targets = {"room", "pool", "staff", "breakfast", "wifi", "view"};
  const std::array<std::pair<std::string, Polarity>, 6> markers = {{{"good", Polarity::positive},
                                                                    {"bad", Polarity::negative},
                                                                    {"okay", Polarity::neutral},
                                                                    {"great", Polarity::positive},
                                                                    {"awful", Polarity::negative},
                                                                    {"average", Polarity::neutral}}};
  std::vector<AnnotatedSentence> out;
  // 24 single-aspect sentences.
  for (std::size_t i = 0; i < 24; ++i) {
    const std::string& t = targets[i % targets.size()];
    const auto& [m, pol] = markers[(i + i / 6) % markers.size()];
    std::vector<std::string> w;
    std::size_t at = 0;
    if (i % 2 == 0) {
      w = {"the", t, "is", m};
      at = 1;
    } else {
      w = {"a", m, t, "here"};
      at = 2;
    }
    out.push_back(sentence_from_words("pol" + std::to_string(i), w, {{at, at, pol}}));
  }
  // 3 two-aspect sentences with opposite markers.
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string& t1 = targets[i];
    const std::string& t2 = targets[i + 3];
    const auto& [m1, p1] = markers[i];
    const auto& [m2, p2] = markers[(i + 1) % 3];
    std::vector<std::string> w = {"the", t1, "is", m1, "but", "the", t2, "is", m2};
    out.push_back(
        sentence_from_words("pair" + std::to_string(i), w, {{1, 1, p1}, {6, 6, p2}}));
  }
  return out;
}

std::vector<std::string> fuzz_sentences(std::size_t n, Rng& rng) {
  const std::vector<std::string> pieces = {
      "الفندق", "غرف",   "نظيفة", "وسائل", "hotel", "Room", "x",     "42",   "3.5",  "é",
      "😀",     "naïve", "東京",  "،",     "؟",     "!",    "...",   "(",    ")",    "\"",
      "'s",     "-",     "—",     "«",     "»",     "wi-fi", "a,b",  "¿qué", "🏨x", "ـ"};
  const std::vector<std::string> gaps = {" ", "  ", "\t", " ", "　", "\n", "   ", ""};
  std::uniform_int_distribution<std::size_t> pick_piece(0, pieces.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_gap(0, gaps.size() - 1);
  std::uniform_int_distribution<int> length(0, 12);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string s;
    if (i % 7 == 0) s += gaps[pick_gap(rng)];
    const int k = length(rng);
    for (int j = 0; j < k; ++j) {
      if (j > 0) s += gaps[pick_gap(rng)];
      s += pieces[pick_piece(rng)];
    }
    if (i % 5 == 0) s += gaps[pick_gap(rng)];
    out.push_back(std::move(s));
  }
  return out;
}

std::string word_vector_text(const std::vector<std::string>& words, Index dim, Rng& rng,
                             bool header) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::ostringstream os;
  os.precision(17);
  if (header) os << words.size() << " " << dim << "\n";
  for (const auto& w : words) {
    os << w;
    for (Index j = 0; j < dim; ++j) os << " " << u(rng);
    os << "\n";
  }
  return os.str();
}

}  // namespace absa::testing
