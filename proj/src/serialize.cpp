#include "absa/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "json.hpp"

namespace absa {

using nlohmann::json;

std::string_view to_string(Task t) { return t == Task::ote ? "ote" : "polarity"; }

Task parse_task(std::string_view s) {
  if (s == "ote") return Task::ote;
  if (s == "polarity") return Task::polarity;
  throw ConfigError("unknown task \"" + std::string(s) + "\" (expected ote or polarity)");
}

namespace {

constexpr char kMagic[4] = {'A', 'B', 'S', 'A'};

void put_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void put_u16(std::ostream& out, std::uint16_t v) {
  put_u8(out, static_cast<std::uint8_t>(v & 0xFF));
  put_u8(out, static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) put_u8(out, static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  void bytes(char* dst, std::size_t n, const char* what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError(std::string("model file truncated in ") + what);
    }
  }

  std::uint8_t u8(const char* what) {
    char c;
    bytes(&c, 1, what);
    return static_cast<std::uint8_t>(c);
  }

  std::uint16_t u16(const char* what) {
    std::uint16_t lo = u8(what);
    std::uint16_t hi = u8(what);
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }

  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }

  std::string string(const char* what) {
    std::string s(u32(what), '\0');
    bytes(s.data(), s.size(), what);
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void write_model_file(std::ostream& out, const ModelFile& f) {
  out.write(kMagic, 4);
  put_u16(out, f.version);
  put_string(out, f.manifest);
  for (const auto& b : f.blobs) {
    put_string(out, b.name);
    put_u8(out, static_cast<std::uint8_t>(b.shape.size()));
    for (Index d : b.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : b.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw std::runtime_error("failed writing model file");
}

ModelFile read_model_file(std::istream& in) {
  Reader r(in);
  char magic[4];
  r.bytes(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw ParseError("not a model file (bad magic bytes)");
  ModelFile f;
  f.version = r.u16("version");
  if (f.version != kModelFormatVersion) {
    throw ParseError("unsupported model format version " + std::to_string(f.version));
  }
  f.manifest = r.string("manifest");
  while (!r.at_end()) {
    ParameterBlob b;
    b.name = r.string("parameter name");
    const std::uint8_t rank = r.u8("parameter rank");
    std::size_t count = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      b.shape.push_back(static_cast<Index>(r.u32("parameter dims")));
      count *= static_cast<std::size_t>(b.shape.back());
    }
    b.values.resize(count);
    for (auto& v : b.values) v = std::bit_cast<float>(r.u32("parameter values"));
    f.blobs.push_back(std::move(b));
  }
  return f;
}

namespace {

ParameterBlob to_blob(const NamedTensor& nt) {
  ParameterBlob b;
  b.name = nt.name;
  b.shape = nt.tensor.shape();
  const Matrix& v = nt.tensor.value();
  b.values.resize(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) {
    b.values[static_cast<std::size_t>(i)] = static_cast<float>(v.data()[i]);
  }
  return b;
}

json vocab_json(const Vocabulary& v) {
  return json{{"tokens", v.tokens()}, {"reserved", v.reserved_count()}};
}

Vocabulary vocab_from(const json& j) {
  return Vocabulary::from_tokens(j.at("tokens").get<std::vector<std::string>>(),
                                 j.at("reserved").get<Index>());
}

std::size_t parameter_count(const std::vector<NamedTensor>& ts) {
  std::size_t n = 0;
  for (const auto& t : ts) n += static_cast<std::size_t>(t.tensor.size());
  return n;
}

ModelFile pack(const json& manifest, const std::vector<NamedTensor>& tensors) {
  ModelFile f;
  json m = manifest;
  m["param_count"] = parameter_count(tensors);
  f.manifest = m.dump();
  for (const auto& t : tensors) f.blobs.push_back(to_blob(t));
  return f;
}

// Copies every blob into the matching skeleton tensor, checking shapes.
void fill(const std::vector<NamedTensor>& skeleton, const ModelFile& f) {
  std::map<std::string, const ParameterBlob*> by_name;
  for (const auto& b : f.blobs) {
    if (!by_name.emplace(b.name, &b).second) {
      throw ParseError("duplicate parameter \"" + b.name + "\" in model file");
    }
  }
  if (by_name.size() != skeleton.size()) {
    throw ParseError("model file has " + std::to_string(by_name.size()) + " parameters, expected " +
                     std::to_string(skeleton.size()));
  }
  for (const auto& nt : skeleton) {
    auto it = by_name.find(nt.name);
    if (it == by_name.end()) throw ParseError("model file lacks parameter \"" + nt.name + "\"");
    const ParameterBlob& b = *it->second;
    if (b.shape != nt.tensor.shape()) {
      throw ParseError("parameter \"" + nt.name + "\" has the wrong shape");
    }
    Tensor t = nt.tensor;
    Matrix& v = t.mutable_value();
    for (Index i = 0; i < v.size(); ++i) v.data()[i] = b.values[static_cast<std::size_t>(i)];
  }
}

EmbeddingTable empty_table(Vocabulary vocab, Index dim, bool trainable) {
  Index rows = vocab.size();
  return EmbeddingTable{std::move(vocab), Tensor::zeros(Shape{rows, dim}, trainable)};
}

BgruParams empty_bgru(Index in, Index hidden) {
  return BgruParams{GruParams::zeros(in, hidden), GruParams::zeros(in, hidden)};
}

OteModel ote_from(const json& m, const ModelFile& f) {
  const json& c = m.at("config");
  OteModel model;
  model.config.word_dim = c.at("word_dim").get<Index>();
  model.config.char_dim = c.at("char_dim").get<Index>();
  model.config.num_filters = c.at("num_filters").get<Index>();
  model.config.window = c.at("window").get<Index>();
  model.config.hidden_dim = c.at("hidden_dim").get<Index>();
  model.config.dropout = c.at("dropout").get<double>();
  model.config.init_scale = c.at("init_scale").get<double>();
  const auto& cfg = model.config;

  model.words = empty_table(vocab_from(m.at("vocab")), cfg.word_dim,
                            m.at("trainable").at("words").get<bool>());
  model.char_cnn.char_table = empty_table(vocab_from(m.at("chars")), cfg.char_dim,
                                          m.at("trainable").at("chars").get<bool>());
  model.char_cnn.filters = Tensor::zeros(Shape{cfg.num_filters, cfg.window, cfg.char_dim}, true);
  model.char_cnn.filter_bias = Tensor::zeros(Shape{cfg.num_filters}, true);
  model.bgru = empty_bgru(cfg.word_dim + cfg.num_filters, cfg.hidden_dim);
  auto labels = m.at("labels").get<std::vector<std::string>>();
  if (labels != iob_label_names()) throw ParseError("unexpected label set for an ote model");
  model.projection = Tensor::zeros(Shape{static_cast<Index>(labels.size()), 2 * cfg.hidden_dim}, true);
  model.projection_bias = Tensor::zeros(Shape{static_cast<Index>(labels.size())}, true);
  model.crf = CrfParams::create(std::move(labels));
  fill(model.tensors(), f);
  return model;
}

IanModel ian_from(const json& m, const ModelFile& f) {
  const json& c = m.at("config");
  IanModel model;
  model.config.word_dim = c.at("word_dim").get<Index>();
  model.config.hidden_dim = c.at("hidden_dim").get<Index>();
  model.config.dropout = c.at("dropout").get<double>();
  model.config.init_scale = c.at("init_scale").get<double>();
  const auto& cfg = model.config;
  auto labels = m.at("labels").get<std::vector<std::string>>();
  if (labels.size() != kNumPolarities) throw ParseError("unexpected label set for a polarity model");
  for (std::size_t k = 0; k < kNumPolarities; ++k) {
    if (labels[k] != to_string(static_cast<Polarity>(k))) {
      throw ParseError("unexpected label set for a polarity model");
    }
  }

  model.words = empty_table(vocab_from(m.at("vocab")), cfg.word_dim,
                            m.at("trainable").at("words").get<bool>());
  const Index d = 2 * cfg.hidden_dim;
  model.context_bgru = empty_bgru(cfg.word_dim, cfg.hidden_dim);
  model.target_bgru = empty_bgru(cfg.word_dim, cfg.hidden_dim);
  auto attn = [&] {
    return AttnParams{Tensor::zeros(Shape{d, d}, true), Tensor::zeros(Shape{1}, true)};
  };
  model.context_attn = attn();
  model.target_attn = attn();
  model.classifier = Tensor::zeros(Shape{static_cast<Index>(kNumPolarities), 2 * d}, true);
  model.classifier_bias = Tensor::zeros(Shape{static_cast<Index>(kNumPolarities)}, true);
  fill(model.tensors(), f);
  return model;
}

}  // namespace

ModelFile to_model_file(const OteModel& m) {
  const auto& c = m.config;
  json manifest{
      {"task", "ote"},
      {"labels", m.crf.labels},
      {"vocab", vocab_json(m.words.vocab)},
      {"chars", vocab_json(m.char_cnn.char_table.vocab)},
      {"trainable", {{"words", m.words.trainable()}, {"chars", m.char_cnn.char_table.trainable()}}},
      {"config",
       {{"word_dim", c.word_dim},
        {"char_dim", c.char_dim},
        {"num_filters", c.num_filters},
        {"window", c.window},
        {"hidden_dim", c.hidden_dim},
        {"dropout", c.dropout},
        {"init_scale", c.init_scale}}},
  };
  return pack(manifest, m.tensors());
}

ModelFile to_model_file(const IanModel& m) {
  const auto& c = m.config;
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < kNumPolarities; ++k) {
    labels.emplace_back(to_string(static_cast<Polarity>(k)));
  }
  json manifest{
      {"task", "polarity"},
      {"labels", labels},
      {"vocab", vocab_json(m.words.vocab)},
      {"trainable", {{"words", m.words.trainable()}}},
      {"config",
       {{"word_dim", c.word_dim},
        {"hidden_dim", c.hidden_dim},
        {"dropout", c.dropout},
        {"init_scale", c.init_scale}}},
  };
  return pack(manifest, m.tensors());
}

AnyModel from_model_file(const ModelFile& f) {
  json m;
  try {
    m = json::parse(f.manifest);
    Task task = parse_task(m.at("task").get<std::string>());
    if (task == Task::ote) return ote_from(m, f);
    return ian_from(m, f);
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("malformed model manifest: ") + e.what());
  }
}

Task task_of(const AnyModel& m) {
  return std::holds_alternative<OteModel>(m) ? Task::ote : Task::polarity;
}

void save_model(std::ostream& out, const OteModel& m) { write_model_file(out, to_model_file(m)); }
void save_model(std::ostream& out, const IanModel& m) { write_model_file(out, to_model_file(m)); }

void save_model(const std::filesystem::path& path, const AnyModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  std::visit([&](const auto& model) { save_model(out, model); }, m);
}

AnyModel load_model(std::istream& in) { return from_model_file(read_model_file(in)); }

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + path.string());
  return load_model(in);
}

}  // namespace absa
