#include "absa/recurrent.hpp"

#include <algorithm>

#include "absa/errors.hpp"

namespace absa {

namespace {

Tensor uniform_matrix(Index rows, Index cols, double scale, Rng& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return Tensor::from_matrix(std::move(m), true);
}

Tensor gate(Tape& tape, const Tensor& w, const Tensor& x, const Tensor& u, const Tensor& h,
            const Tensor& b) {
  return add(tape, add(tape, matmul(tape, w, x), matmul(tape, u, h)), b);
}

}  // namespace

GruParams GruParams::zeros(Index input_dim, Index hidden_dim) {
  auto m = [&](Index cols) { return Tensor::zeros(Shape{hidden_dim, cols}, true); };
  auto v = [&] { return Tensor::zeros(Shape{hidden_dim}, true); };
  return GruParams{m(input_dim),  m(hidden_dim), v(), m(input_dim), m(hidden_dim),
                   v(),           m(input_dim),  m(hidden_dim), v()};
}

GruParams GruParams::uniform(Index input_dim, Index hidden_dim, double scale, Rng& rng) {
  GruParams p = zeros(input_dim, hidden_dim);
  p.update_input = uniform_matrix(hidden_dim, input_dim, scale, rng);
  p.update_hidden = uniform_matrix(hidden_dim, hidden_dim, scale, rng);
  p.reset_input = uniform_matrix(hidden_dim, input_dim, scale, rng);
  p.reset_hidden = uniform_matrix(hidden_dim, hidden_dim, scale, rng);
  p.candidate_input = uniform_matrix(hidden_dim, input_dim, scale, rng);
  p.candidate_hidden = uniform_matrix(hidden_dim, hidden_dim, scale, rng);
  return p;
}

std::vector<NamedTensor> GruParams::named(const std::string& prefix) const {
  return {
      {prefix + "update.input", update_input},       {prefix + "update.hidden", update_hidden},
      {prefix + "update.bias", update_bias},         {prefix + "reset.input", reset_input},
      {prefix + "reset.hidden", reset_hidden},       {prefix + "reset.bias", reset_bias},
      {prefix + "candidate.input", candidate_input}, {prefix + "candidate.hidden", candidate_hidden},
      {prefix + "candidate.bias", candidate_bias},
  };
}

BgruParams BgruParams::uniform(Index input_dim, Index hidden_dim, double scale, Rng& rng) {
  GruParams fwd = GruParams::uniform(input_dim, hidden_dim, scale, rng);
  GruParams bwd = GruParams::uniform(input_dim, hidden_dim, scale, rng);
  return BgruParams{std::move(fwd), std::move(bwd)};
}

std::vector<NamedTensor> BgruParams::named(const std::string& prefix) const {
  auto out = forward.named(prefix + "forward.");
  auto back = backward.named(prefix + "backward.");
  out.insert(out.end(), back.begin(), back.end());
  return out;
}

GruStep gru_cell_step_traced(Tape& tape, const GruParams& p, const Tensor& x, const Tensor& h_prev) {
  if (x.rank() != 1 || x.size() != p.input_dim() || h_prev.rank() != 1 ||
      h_prev.size() != p.hidden_dim()) {
    throw ShapeError("gru_cell_step: input " + shape_string(x.shape()) + " and state " +
                     shape_string(h_prev.shape()) + " do not fit a GRU with input " +
                     std::to_string(p.input_dim()) + " and hidden " +
                     std::to_string(p.hidden_dim()));
  }
  GruStep s;
  s.update = sigmoid(tape, gate(tape, p.update_input, x, p.update_hidden, h_prev, p.update_bias));
  s.reset = sigmoid(tape, gate(tape, p.reset_input, x, p.reset_hidden, h_prev, p.reset_bias));
  Tensor recurrent = mul(tape, s.reset, matmul(tape, p.candidate_hidden, h_prev));
  s.candidate = tanh_act(
      tape, add(tape, add(tape, matmul(tape, p.candidate_input, x), recurrent), p.candidate_bias));
  // (1 - z) * h + z * c == h + z * (c - h)
  s.hidden = add(tape, h_prev, mul(tape, s.update, sub(tape, s.candidate, h_prev)));
  return s;
}

Tensor gru_cell_step(Tape& tape, const GruParams& p, const Tensor& x, const Tensor& h_prev) {
  return gru_cell_step_traced(tape, p, x, h_prev).hidden;
}

std::vector<Tensor> gru_forward(Tape& tape, const GruParams& p, std::span<const Tensor> xs,
                                std::optional<Tensor> h0) {
  Tensor h = h0 ? *h0 : Tensor::zeros(Shape{p.hidden_dim()});
  std::vector<Tensor> states;
  states.reserve(xs.size());
  for (const auto& x : xs) {
    h = gru_cell_step(tape, p, x, h);
    states.push_back(h);
  }
  return states;
}

std::vector<Tensor> bgru_forward(Tape& tape, const BgruParams& p, std::span<const Tensor> xs) {
  auto fwd = gru_forward(tape, p.forward, xs);
  std::vector<Tensor> reversed(xs.rbegin(), xs.rend());
  auto bwd = gru_forward(tape, p.backward, reversed);
  std::reverse(bwd.begin(), bwd.end());

  std::vector<Tensor> out;
  out.reserve(xs.size());
  for (std::size_t t = 0; t < xs.size(); ++t) {
    Tensor parts[] = {fwd[t], bwd[t]};
    out.push_back(concat(tape, parts));
  }
  return out;
}

}  // namespace absa
