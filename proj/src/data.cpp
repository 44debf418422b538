#include "absa/data.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <istream>
#include <ostream>

#include "absa/text.hpp"
#include "json.hpp"

namespace absa {

namespace pt = boost::property_tree;
using nlohmann::json;

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::positive:
      return "positive";
    case Polarity::negative:
      return "negative";
    case Polarity::neutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "positive") return Polarity::positive;
  if (s == "negative") return Polarity::negative;
  if (s == "neutral") return Polarity::neutral;
  return std::nullopt;
}

std::string_view to_string(IobTag t) {
  switch (t) {
    case IobTag::begin:
      return "B-Aspect";
    case IobTag::inside:
      return "I-Aspect";
    case IobTag::outside:
      return "O";
  }
  return "O";
}

std::optional<IobTag> parse_iob_tag(std::string_view s) {
  if (s == "B-Aspect") return IobTag::begin;
  if (s == "I-Aspect") return IobTag::inside;
  if (s == "O") return IobTag::outside;
  return std::nullopt;
}

std::size_t SemevalDocument::opinion_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.opinions.size();
  return n;
}

// ---------------------------------------------------------------------------
// Tokenization

std::vector<Token> tokenize(std::string_view input) {
  std::u32string cps = text::decode_utf8(input);
  std::vector<Token> tokens;
  auto emit = [&](std::size_t a, std::size_t b) {
    tokens.push_back(Token{text::encode_utf8(std::u32string_view(cps).substr(a, b - a)), a, b});
  };

  std::size_t i = 0;
  const std::size_t n = cps.size();
  while (i < n) {
    if (text::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < n && !text::is_space(cps[run_end])) ++run_end;

    std::size_t lo = i;
    while (lo < run_end && text::is_punctuation(cps[lo])) {
      emit(lo, lo + 1);
      ++lo;
    }
    std::size_t hi = run_end;
    while (hi > lo && text::is_punctuation(cps[hi - 1])) --hi;
    if (hi > lo) emit(lo, hi);
    for (std::size_t k = hi; k < run_end; ++k) emit(k, k + 1);
    i = run_end;
  }
  return tokens;
}

void validate_sentence(const AnnotatedSentence& s) {
  std::u32string cps = text::decode_utf8(s.text);
  const std::size_t len = cps.size();
  std::size_t prev_end = 0;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const Token& t = s.tokens[i];
    if (t.start >= t.end || t.end > len || (i > 0 && t.start < prev_end)) {
      throw ValidationError("sentence " + s.id + ": token " + std::to_string(i) +
                            " has invalid offsets");
    }
    if (text::encode_utf8(std::u32string_view(cps).substr(t.start, t.end - t.start)) != t.surface) {
      throw ValidationError("sentence " + s.id + ": token " + std::to_string(i) +
                            " surface does not match text");
    }
    prev_end = t.end;
  }
  for (const auto& op : s.opinions) {
    if (op.implicit()) {
      if (op.from != 0 || op.to != 0) {
        throw ValidationError("sentence " + s.id + ": implicit target must have offsets 0..0");
      }
      continue;
    }
    if (op.from >= op.to || op.to > len) {
      throw ValidationError("sentence " + s.id + ": target \"" + op.target + "\" has offsets " +
                            std::to_string(op.from) + ".." + std::to_string(op.to));
    }
    if (text::encode_utf8(std::u32string_view(cps).substr(op.from, op.to - op.from)) != op.target) {
      throw ValidationError("sentence " + s.id + ": target \"" + op.target +
                            "\" does not match text at " + std::to_string(op.from) + ".." +
                            std::to_string(op.to));
    }
  }
}

// ---------------------------------------------------------------------------
// XML

namespace {

std::size_t parse_offset(const std::string& value, const std::string& sentence_id) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(value, &pos);
    if (pos != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw ValidationError("sentence " + sentence_id + ": invalid offset \"" + value + "\"");
  }
}

AnnotatedSentence read_sentence(const pt::ptree& node) {
  AnnotatedSentence s;
  s.id = node.get<std::string>("<xmlattr>.id", "");
  s.text = node.get<std::string>("text", "");
  s.tokens = tokenize(s.text);
  if (auto opinions = node.get_child_optional("Opinions")) {
    for (const auto& [name, op] : *opinions) {
      if (name != "Opinion") continue;
      OpinionTuple t;
      t.target = op.get<std::string>("<xmlattr>.target", std::string(kImplicitTarget));
      t.category = op.get<std::string>("<xmlattr>.category", "");
      std::string pol = op.get<std::string>("<xmlattr>.polarity", "");
      if (!pol.empty()) {
        t.polarity = parse_polarity(pol);
        if (!t.polarity) {
          throw ValidationError("sentence " + s.id + ": unknown polarity \"" + pol + "\"");
        }
      }
      t.from = parse_offset(op.get<std::string>("<xmlattr>.from", "0"), s.id);
      t.to = parse_offset(op.get<std::string>("<xmlattr>.to", "0"), s.id);
      s.opinions.push_back(std::move(t));
    }
  }
  validate_sentence(s);
  return s;
}

}  // namespace

SemevalDocument parse_semeval_xml(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("XML parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  auto reviews = tree.get_child_optional("Reviews");
  if (!reviews) throw ParseError("XML parse error: missing <Reviews> root element");

  SemevalDocument doc;
  for (const auto& [name, review] : *reviews) {
    if (name != "Review") continue;
    ++doc.review_count;
    auto sentences = review.get_child_optional("sentences");
    if (!sentences) continue;
    for (const auto& [sname, sentence] : *sentences) {
      if (sname != "sentence") continue;
      doc.sentences.push_back(read_sentence(sentence));
    }
  }
  return doc;
}

// ---------------------------------------------------------------------------
// IOB

std::vector<Span> target_spans(const AnnotatedSentence& s) {
  std::vector<Span> spans;
  for (const auto& op : s.opinions) {
    if (!op.implicit()) spans.push_back(Span{op.from, op.to});
  }
  std::sort(spans.begin(), spans.end());
  spans.erase(std::unique(spans.begin(), spans.end()), spans.end());
  return spans;
}

std::vector<std::size_t> tokens_in_span(std::span<const Token> tokens, Span span) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].start < span.end && tokens[i].end > span.start) out.push_back(i);
  }
  return out;
}

namespace {

std::string span_string(Span s) {
  return "(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
}

}  // namespace

std::vector<IobTag> encode_spans(std::span<const Token> tokens, std::span<const Span> spans) {
  std::vector<Span> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].start < sorted[i - 1].end) {
      throw ValidationError("overlapping target spans " + span_string(sorted[i - 1]) + " and " +
                            span_string(sorted[i]));
    }
  }

  std::vector<IobTag> tags(tokens.size(), IobTag::outside);
  std::vector<const Span*> owner(tokens.size(), nullptr);
  for (const Span& span : sorted) {
    auto covered = tokens_in_span(tokens, span);
    for (std::size_t k = 0; k < covered.size(); ++k) {
      std::size_t t = covered[k];
      if (owner[t] != nullptr) {
        throw ValidationError("target spans " + span_string(*owner[t]) + " and " +
                              span_string(span) + " share token " + std::to_string(t));
      }
      owner[t] = &span;
      tags[t] = k == 0 ? IobTag::begin : IobTag::inside;
    }
  }
  return tags;
}

std::vector<IobTag> encode_iob(const AnnotatedSentence& s) {
  auto spans = target_spans(s);
  return encode_spans(s.tokens, spans);
}

std::vector<Span> decode_iob(std::span<const IobTag> tags, std::span<const Token> tokens) {
  if (tags.size() != tokens.size()) {
    throw ContractError("decode_iob: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(tokens.size()) + " tokens");
  }
  std::vector<Span> spans;
  bool open = false;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    switch (tags[i]) {
      case IobTag::begin:
        spans.push_back(Span{tokens[i].start, tokens[i].end});
        open = true;
        break;
      case IobTag::inside:
        if (open) {
          spans.back().end = tokens[i].end;
        } else {
          spans.push_back(Span{tokens[i].start, tokens[i].end});
          open = true;
        }
        break;
      case IobTag::outside:
        open = false;
        break;
    }
  }
  return spans;
}

// ---------------------------------------------------------------------------
// JSON lines

std::string to_json_line(const AnnotatedSentence& s) {
  json j;
  j["id"] = s.id;
  j["text"] = s.text;
  json tokens = json::array();
  for (const auto& t : s.tokens) tokens.push_back(json::array({t.surface, t.start, t.end}));
  j["tokens"] = std::move(tokens);
  json opinions = json::array();
  for (const auto& op : s.opinions) {
    json o;
    o["target"] = op.target;
    o["from"] = op.from;
    o["to"] = op.to;
    o["category"] = op.category;
    if (op.polarity) o["polarity"] = std::string(to_string(*op.polarity));
    opinions.push_back(std::move(o));
  }
  j["opinions"] = std::move(opinions);
  return j.dump();
}

AnnotatedSentence from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON line: ") + e.what());
  }
  AnnotatedSentence s;
  try {
    s.id = j.value("id", std::string());
    s.text = j.at("text").get<std::string>();
    if (j.contains("tokens")) {
      for (const auto& t : j.at("tokens")) {
        s.tokens.push_back(
            Token{t.at(0).get<std::string>(), t.at(1).get<std::size_t>(), t.at(2).get<std::size_t>()});
      }
    } else {
      s.tokens = tokenize(s.text);
    }
    if (j.contains("opinions")) {
      for (const auto& o : j.at("opinions")) {
        OpinionTuple op;
        op.target = o.value("target", std::string(kImplicitTarget));
        op.from = o.value("from", std::size_t{0});
        op.to = o.value("to", std::size_t{0});
        op.category = o.value("category", std::string());
        if (o.contains("polarity")) {
          auto name = o.at("polarity").get<std::string>();
          op.polarity = parse_polarity(name);
          if (!op.polarity) throw ParseError("unknown polarity \"" + name + "\"");
        }
        s.opinions.push_back(std::move(op));
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed interchange record: ") + e.what());
  }
  validate_sentence(s);
  return s;
}

void write_jsonl(std::ostream& out, std::span<const AnnotatedSentence> sentences) {
  for (const auto& s : sentences) out << to_json_line(s) << '\n';
}

std::vector<AnnotatedSentence> read_jsonl(std::istream& in) {
  std::vector<AnnotatedSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json_line(line));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::unordered_set<std::string> read_stopwords(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    words.insert(line.substr(first));
  }
  return words;
}

}  // namespace absa
