#ifndef ABSA_RECURRENT_HPP_
#define ABSA_RECURRENT_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absa/gradcheck.hpp"
#include "absa/tensor.hpp"

namespace absa {

/// Gated recurrent unit:
///   z = sigmoid(Wz x + Uz h + bz)
///   r = sigmoid(Wr x + Ur h + br)
///   c = tanh(W x + r * (U h) + b)
///   h' = (1 - z) * h + z * c
struct GruParams {
  Tensor update_input, update_hidden, update_bias;
  Tensor reset_input, reset_hidden, reset_bias;
  Tensor candidate_input, candidate_hidden, candidate_bias;

  Index input_dim() const { return update_input.cols(); }
  Index hidden_dim() const { return update_input.rows(); }

  static GruParams zeros(Index input_dim, Index hidden_dim);
  /// Weights from U(-scale, scale), biases zero.
  static GruParams uniform(Index input_dim, Index hidden_dim, double scale, Rng& rng);

  std::vector<NamedTensor> named(const std::string& prefix) const;
};

struct BgruParams {
  GruParams forward;
  GruParams backward;

  Index input_dim() const { return forward.input_dim(); }
  Index hidden_dim() const { return forward.hidden_dim(); }
  Index output_dim() const { return 2 * forward.hidden_dim(); }

  static BgruParams uniform(Index input_dim, Index hidden_dim, double scale, Rng& rng);
  std::vector<NamedTensor> named(const std::string& prefix) const;
};

struct GruStep {
  Tensor update;
  Tensor reset;
  Tensor candidate;
  Tensor hidden;
};

/// One step with its gate activations exposed.
GruStep gru_cell_step_traced(Tape& tape, const GruParams& p, const Tensor& x, const Tensor& h_prev);
Tensor gru_cell_step(Tape& tape, const GruParams& p, const Tensor& x, const Tensor& h_prev);

/// Left-to-right unrolling from h0 (zeros when absent).
std::vector<Tensor> gru_forward(Tape& tape, const GruParams& p, std::span<const Tensor> xs,
                                std::optional<Tensor> h0 = std::nullopt);

/// Per position: concat(forward state, backward state), where the backward
/// GRU runs over the reversed sequence and its states are re-reversed.
std::vector<Tensor> bgru_forward(Tape& tape, const BgruParams& p, std::span<const Tensor> xs);

}  // namespace absa

#endif  // ABSA_RECURRENT_HPP_
