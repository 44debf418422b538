#include "absa/crf.hpp"

namespace absa {

CrfParams CrfParams::create(std::vector<std::string> labels) {
  if (labels.empty()) throw ConfigError("CRF needs at least one label");
  const auto n = static_cast<Index>(labels.size()) + 2;
  Matrix x = Matrix::Zero(n, n);
  const Index start = n - 2;
  const Index stop = n - 1;
  x.col(start).setConstant(kForbiddenTransition);
  x.row(stop).setConstant(kForbiddenTransition);
  return CrfParams{Tensor::from_matrix(std::move(x), true), std::move(labels)};
}

void CrfParams::constrain_iob(Index inside, Index outside) {
  Matrix& x = transitions.mutable_value();
  x(outside, inside) = kForbiddenTransition;
  x(start_state(), inside) = kForbiddenTransition;
}

namespace {

void check_labels(const Tensor& emissions, const CrfParams& p) {
  if (emissions.rank() != 2 || emissions.cols() != p.num_labels()) {
    throw ShapeError("CRF emissions " + shape_string(emissions.shape()) + " do not match " +
                     std::to_string(p.num_labels()) + " labels");
  }
}

}  // namespace

double crf_score(const Tensor& emissions, const CrfParams& p, std::span<const Index> tags) {
  check_labels(emissions, p);
  return crf::sequence_score(emissions.value(), p.transitions.value(), tags);
}

double crf_log_partition(const Tensor& emissions, const CrfParams& p) {
  check_labels(emissions, p);
  return crf::log_partition(emissions.value(), p.transitions.value());
}

crf::Decoded<double> viterbi_decode(const Tensor& emissions, const CrfParams& p) {
  check_labels(emissions, p);
  return crf::viterbi(emissions.value(), p.transitions.value());
}

Tensor crf_nll(Tape& tape, const Tensor& emissions, const CrfParams& p,
               std::span<const Index> gold) {
  check_labels(emissions, p);
  const Matrix& e = emissions.value();
  const Matrix& x = p.transitions.value();
  double gold_score = crf::sequence_score(e, x, gold);
  auto marg = crf::marginals(e, x);
  double loss = marg.log_partition - gold_score;

  // d(loss)/d(emissions) = marginals - gold indicator; same for transitions
  // with expected minus observed counts.
  Matrix d_emissions = marg.unary;
  Matrix d_transitions = marg.transitions;
  const Index L = p.num_labels();
  const Index T = e.rows();
  for (Index t = 0; t < T; ++t) {
    Index y = gold[static_cast<std::size_t>(t)];
    d_emissions(t, y) -= 1.0;
    if (t == 0) {
      d_transitions(L, y) -= 1.0;
    } else {
      d_transitions(gold[static_cast<std::size_t>(t - 1)], y) -= 1.0;
    }
  }
  d_transitions(gold[static_cast<std::size_t>(T - 1)], L + 1) -= 1.0;

  Tensor inputs[] = {emissions, p.transitions};
  return tape.record(
      Shape{1}, Matrix::Constant(1, 1, loss), inputs,
      [emissions, transitions = p.transitions, d_emissions = std::move(d_emissions),
       d_transitions = std::move(d_transitions)](const Matrix& g, const Matrix&) {
        const double scale = g(0, 0);
        if (emissions.requires_grad()) Tape::accumulate(emissions, scale * d_emissions);
        if (transitions.requires_grad()) Tape::accumulate(transitions, scale * d_transitions);
      });
}

}  // namespace absa
