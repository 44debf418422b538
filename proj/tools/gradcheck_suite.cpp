#include "gradcheck_suite.hpp"

#include <array>
#include <cmath>
#include <vector>

#include "absa/char_cnn.hpp"
#include "absa/crf.hpp"
#include "absa/errors.hpp"
#include "absa/ian_model.hpp"
#include "absa/ote_model.hpp"
#include "absa/recurrent.hpp"

namespace absa::tools {

namespace {

constexpr std::array<std::string_view, 7> kComponents = {"gru",  "bgru", "charcnn",  "crf",
                                                         "ote",  "ian",  "attention"};

Tensor random_tensor(Shape shape, double scale, Rng& rng, bool requires_grad = true) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Index n = 1;
  for (Index d : shape) n *= d;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = u(rng);
  return Tensor::from_values(std::move(shape), v, requires_grad);
}

// Weighted sum with fixed random weights, so every output coordinate matters.
Tensor probe(Tape& tape, const Tensor& x, const Tensor& weights) {
  return sum(tape, mul(tape, x, weights));
}

void append(std::vector<NamedTensor>& to, const std::vector<NamedTensor>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

GradCheckReport check_gru(Rng& rng) {
  const Index in = 3, hid = 4;
  GruParams p = GruParams::uniform(in, hid, 0.5, rng);
  p.update_bias = random_tensor({hid}, 0.5, rng);
  p.reset_bias = random_tensor({hid}, 0.5, rng);
  p.candidate_bias = random_tensor({hid}, 0.5, rng);
  Tensor x = random_tensor({in}, 1.0, rng);
  Tensor h = random_tensor({hid}, 1.0, rng);
  Tensor w = random_tensor({hid}, 1.0, rng, false);
  auto params = p.named("");
  params.push_back({"x", x});
  params.push_back({"h_prev", h});
  return check_gradients([&](Tape& tape) { return probe(tape, gru_cell_step(tape, p, x, h), w); },
                         params);
}

GradCheckReport check_bgru(Rng& rng) {
  const Index in = 3, hid = 3, steps = 5;
  BgruParams p = BgruParams::uniform(in, hid, 0.5, rng);
  std::vector<Tensor> xs;
  std::vector<Tensor> ws;
  auto params = p.named("");
  for (Index t = 0; t < steps; ++t) {
    xs.push_back(random_tensor({in}, 1.0, rng));
    ws.push_back(random_tensor({2 * hid}, 1.0, rng, false));
    params.push_back({"x" + std::to_string(t), xs.back()});
  }
  return check_gradients(
      [&](Tape& tape) {
        auto states = bgru_forward(tape, p, xs);
        Tensor total = probe(tape, states[0], ws[0]);
        for (std::size_t t = 1; t < states.size(); ++t) {
          total = add(tape, total, probe(tape, states[t], ws[t]));
        }
        return total;
      },
      params);
}

GradCheckReport check_charcnn(Rng& rng) {
  std::vector<std::vector<std::string>> words = {{"hello", "word"}};
  CharCnnParams p =
      CharCnnParams::create(init_char_embeddings(build_char_alphabet(words), 4, rng), 3, 3, 0.5, rng);
  p.filter_bias = random_tensor({3}, 0.5, rng);
  Tensor w = random_tensor({3}, 1.0, rng, false);
  return check_gradients(
      [&](Tape& tape) {
        Rng unused(0);
        return probe(tape, char_cnn_encode(tape, p, "hello", false, 0.0, unused), w);
      },
      p.named(""));
}

CrfParams random_crf(Index labels, Rng& rng) {
  std::vector<std::string> names;
  for (Index i = 0; i < labels; ++i) names.push_back("L" + std::to_string(i));
  CrfParams p = CrfParams::create(names);
  Matrix& x = p.transitions.mutable_value();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Index i = 0; i < labels + 2; ++i) {
    for (Index j = 0; j < labels; ++j) {
      if (i != labels + 1) x(i, j) = u(rng);
    }
    if (i < labels) x(i, labels + 1) = u(rng);
  }
  return p;
}

double enumeration_gap(const Matrix& e, const Matrix& x) {
  const Index T = e.rows(), L = e.cols();
  Index total = 1;
  for (Index t = 0; t < T; ++t) total *= L;
  std::vector<double> scores;
  std::vector<std::vector<Index>> paths;
  for (Index code = 0; code < total; ++code) {
    std::vector<Index> tags(static_cast<std::size_t>(T));
    Index c = code;
    for (Index t = 0; t < T; ++t, c /= L) tags[static_cast<std::size_t>(t)] = c % L;
    scores.push_back(crf::sequence_score(e, x, tags));
    paths.push_back(std::move(tags));
  }
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0.0;
  for (double s : scores) z += std::exp(s - mx);
  Matrix unary = Matrix::Zero(T, L);
  for (std::size_t k = 0; k < paths.size(); ++k) {
    double prob = std::exp(scores[k] - mx) / z;
    for (Index t = 0; t < T; ++t) unary(t, paths[k][static_cast<std::size_t>(t)]) += prob;
  }
  auto m = crf::marginals(e, x);
  double gap = std::abs(m.log_partition - (mx + std::log(z)));
  gap = std::max(gap, (m.unary - unary).cwiseAbs().maxCoeff());
  return gap;
}

GradcheckOutcome check_crf(Rng& rng) {
  const Index T = 4, L = 3;
  CrfParams p = random_crf(L, rng);
  Tensor e = random_tensor({T, L}, 1.0, rng);
  std::vector<Index> gold(static_cast<std::size_t>(T));
  std::uniform_int_distribution<Index> pick_label(0, L - 1);
  for (auto& g : gold) g = pick_label(rng);
  GradcheckOutcome out;
  out.report = check_gradients([&](Tape& tape) { return crf_nll(tape, e, p, gold); },
                               {{"emissions", e}, {"transitions", p.transitions}});
  out.enumeration_error = enumeration_gap(e.value(), p.transitions.value());
  return out;
}

GradCheckReport check_attention(Rng& rng) {
  const Index n = 4, d = 3, q = 5;
  std::vector<Tensor> states;
  std::vector<NamedTensor> params;
  for (Index i = 0; i < n; ++i) {
    states.push_back(random_tensor({d}, 1.0, rng));
    params.push_back({"h" + std::to_string(i), states.back()});
  }
  Tensor query = random_tensor({q}, 1.0, rng);
  AttnParams attn = AttnParams::uniform(d, q, 0.5, rng);
  attn.bias = random_tensor({1}, 0.5, rng);
  params.push_back({"query", query});
  append(params, attn.named(""));
  Tensor w = random_tensor({d}, 1.0, rng, false);
  Tensor wa = random_tensor({n}, 1.0, rng, false);
  return check_gradients(
      [&](Tape& tape) {
        auto r = attention_pool(tape, states, query, attn);
        return add(tape, probe(tape, r.pooled, w), probe(tape, r.weights, wa));
      },
      params);
}

AnnotatedSentence toy_sentence(std::string text, std::vector<Token> tokens) {
  AnnotatedSentence s;
  s.id = "toy";
  s.text = std::move(text);
  s.tokens = std::move(tokens);
  return s;
}

GradCheckReport check_ote(Rng& rng) {
  AnnotatedSentence s = toy_sentence("the room view", tokenize("the room view"));
  OteConfig cfg;
  cfg.word_dim = 4;
  cfg.char_dim = 3;
  cfg.num_filters = 2;
  cfg.window = 3;
  cfg.hidden_dim = 3;
  cfg.init_scale = 0.5;
  std::vector<AnnotatedSentence> corpus = {s};
  OteModel m = make_ote_model(cfg, corpus, nullptr, false, rng);
  Matrix& x = m.crf.transitions.mutable_value();
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Index i = 0; i < 3; ++i) {
    for (Index j = 0; j < 3; ++j) x(i, j) = u(rng);
  }
  auto tokens = token_surfaces(s);
  std::vector<Index> gold = {2, 0, 1};
  const std::uint64_t mask_seed = rng();
  return check_gradients(
      [&](Tape& tape) {
        Rng masks(mask_seed);
        return crf_nll(tape, ote_forward(tape, m, tokens, true, masks), m.crf, gold);
      },
      m.parameters());
}

GradCheckReport check_ian(Rng& rng) {
  AnnotatedSentence s = toy_sentence("good clean room", tokenize("good clean room"));
  IanConfig cfg;
  cfg.word_dim = 4;
  cfg.hidden_dim = 3;
  cfg.init_scale = 0.5;
  std::vector<AnnotatedSentence> corpus = {s};
  IanModel m = make_ian_model(cfg, corpus, nullptr, false, rng);
  m.classifier_bias = random_tensor({3}, 0.5, rng);
  std::vector<std::string> context = token_surfaces(s);
  std::vector<std::string> target = {"room"};
  const std::uint64_t mask_seed = rng();
  return check_gradients(
      [&](Tape& tape) {
        Rng masks(mask_seed);
        auto tr = ian_forward_traced(tape, m, context, target, true, masks);
        return affine(tape, pick(tape, log_softmax(tape, tr.logits, 0), 1), -1.0, 0.0);
      },
      m.parameters());
}

}  // namespace

std::span<const std::string_view> gradcheck_components() { return kComponents; }

GradcheckOutcome run_gradcheck(std::string_view component, std::uint64_t seed) {
  Rng rng(seed);
  GradcheckOutcome out;
  if (component == "gru") {
    out.report = check_gru(rng);
  } else if (component == "bgru") {
    out.report = check_bgru(rng);
  } else if (component == "charcnn") {
    out.report = check_charcnn(rng);
  } else if (component == "crf") {
    out = check_crf(rng);
  } else if (component == "attention") {
    out.report = check_attention(rng);
  } else if (component == "ote") {
    out.report = check_ote(rng);
  } else if (component == "ian") {
    out.report = check_ian(rng);
  } else {
    throw ConfigError("unknown gradcheck component \"" + std::string(component) + "\"");
  }
  out.component = std::string(component);
  const bool model = component == "ote" || component == "ian";
  out.threshold = model ? kModelTolerance : kComponentTolerance;
  out.passed = out.report.max_relative_error < out.threshold &&
               (!out.enumeration_error || *out.enumeration_error < kEnumerationTolerance);
  return out;
}

}  // namespace absa::tools
