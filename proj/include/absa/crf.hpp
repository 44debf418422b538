#ifndef ABSA_CRF_HPP_
#define ABSA_CRF_HPP_

// Linear-chain CRF over L labels plus synthetic START (index L) and STOP
// (index L + 1) states. transitions(i, j) scores moving from label i to j.
//
// The dynamic programs are templates over Eigen expressions so they run on
// plain matrices of any scalar type; crf_nll wraps them as a tape op.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "absa/errors.hpp"
#include "absa/tensor.hpp"

namespace absa {

inline constexpr double kForbiddenTransition = -1e4;

struct CrfParams {
  Tensor transitions;  // [(L + 2) x (L + 2)]
  std::vector<std::string> labels;

  Index num_labels() const { return static_cast<Index>(labels.size()); }
  Index start_state() const { return num_labels(); }
  Index stop_state() const { return num_labels() + 1; }

  /// Zero transitions, except moves into START and out of STOP, which are
  /// fixed at kForbiddenTransition.
  static CrfParams create(std::vector<std::string> labels);

  /// Forbids O -> I and START -> I for a {B, I, O} label set.
  void constrain_iob(Index inside, Index outside);
};

namespace crf {

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> v) {
  Scalar mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  Scalar acc = 0;
  for (Scalar x : v) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

template <typename Emissions, typename Transitions>
void check_shapes(const Eigen::MatrixBase<Emissions>& e, const Eigen::MatrixBase<Transitions>& x) {
  if (e.rows() < 1) throw ContractError("CRF needs at least one position");
  if (x.rows() != e.cols() + 2 || x.cols() != e.cols() + 2) {
    throw ShapeError("CRF transitions must be " + std::to_string(e.cols() + 2) + " square, got " +
                     std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  }
}

template <typename Emissions, typename Transitions>
typename Emissions::Scalar sequence_score(const Eigen::MatrixBase<Emissions>& e,
                                          const Eigen::MatrixBase<Transitions>& x,
                                          std::span<const Index> tags) {
  check_shapes(e, x);
  const Index T = e.rows();
  const Index L = e.cols();
  if (static_cast<Index>(tags.size()) != T) {
    throw ContractError("CRF score: " + std::to_string(tags.size()) + " tags for " +
                        std::to_string(T) + " positions");
  }
  for (Index t : tags) {
    if (t < 0 || t >= L) throw ContractError("CRF score: tag " + std::to_string(t) + " invalid");
  }
  auto s = x(L, tags[0]) + x(tags[static_cast<std::size_t>(T - 1)], L + 1);
  for (Index t = 0; t < T; ++t) {
    s += e(t, tags[static_cast<std::size_t>(t)]);
    if (t > 0) s += x(tags[static_cast<std::size_t>(t - 1)], tags[static_cast<std::size_t>(t)]);
  }
  return s;
}

/// Forward log-messages alpha(t, j): log-sum over prefixes ending in j at t.
template <typename Emissions, typename Transitions>
Eigen::Matrix<typename Emissions::Scalar, Eigen::Dynamic, Eigen::Dynamic> forward_messages(
    const Eigen::MatrixBase<Emissions>& e, const Eigen::MatrixBase<Transitions>& x) {
  using Scalar = typename Emissions::Scalar;
  const Index T = e.rows();
  const Index L = e.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> alpha(T, L);
  std::vector<Scalar> buf(static_cast<std::size_t>(L));
  for (Index j = 0; j < L; ++j) alpha(0, j) = x(L, j) + e(0, j);
  for (Index t = 1; t < T; ++t) {
    for (Index j = 0; j < L; ++j) {
      for (Index i = 0; i < L; ++i) buf[static_cast<std::size_t>(i)] = alpha(t - 1, i) + x(i, j);
      alpha(t, j) = e(t, j) + log_sum_exp<Scalar>(buf);
    }
  }
  return alpha;
}

/// Backward log-messages beta(t, i): log-sum over suffixes after label i at t.
template <typename Emissions, typename Transitions>
Eigen::Matrix<typename Emissions::Scalar, Eigen::Dynamic, Eigen::Dynamic> backward_messages(
    const Eigen::MatrixBase<Emissions>& e, const Eigen::MatrixBase<Transitions>& x) {
  using Scalar = typename Emissions::Scalar;
  const Index T = e.rows();
  const Index L = e.cols();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> beta(T, L);
  std::vector<Scalar> buf(static_cast<std::size_t>(L));
  for (Index i = 0; i < L; ++i) beta(T - 1, i) = x(i, L + 1);
  for (Index t = T - 1; t-- > 0;) {
    for (Index i = 0; i < L; ++i) {
      for (Index j = 0; j < L; ++j) {
        buf[static_cast<std::size_t>(j)] = x(i, j) + e(t + 1, j) + beta(t + 1, j);
      }
      beta(t, i) = log_sum_exp<Scalar>(buf);
    }
  }
  return beta;
}

template <typename Emissions, typename Transitions>
typename Emissions::Scalar log_partition(const Eigen::MatrixBase<Emissions>& e,
                                         const Eigen::MatrixBase<Transitions>& x) {
  using Scalar = typename Emissions::Scalar;
  check_shapes(e, x);
  auto alpha = forward_messages(e, x);
  const Index L = e.cols();
  std::vector<Scalar> buf(static_cast<std::size_t>(L));
  for (Index j = 0; j < L; ++j) buf[static_cast<std::size_t>(j)] = alpha(e.rows() - 1, j) + x(j, L + 1);
  return log_sum_exp<Scalar>(buf);
}

template <typename Scalar>
struct Marginals {
  Scalar log_partition;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unary;        // [T x L]
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> transitions;  // expected counts, (L+2)^2
};

/// Posterior label marginals and expected transition counts.
template <typename Emissions, typename Transitions>
Marginals<typename Emissions::Scalar> marginals(const Eigen::MatrixBase<Emissions>& e,
                                                const Eigen::MatrixBase<Transitions>& x) {
  using Scalar = typename Emissions::Scalar;
  check_shapes(e, x);
  const Index T = e.rows();
  const Index L = e.cols();
  auto alpha = forward_messages(e, x);
  auto beta = backward_messages(e, x);
  std::vector<Scalar> buf(static_cast<std::size_t>(L));
  for (Index j = 0; j < L; ++j) buf[static_cast<std::size_t>(j)] = alpha(T - 1, j) + x(j, L + 1);
  const Scalar log_z = log_sum_exp<Scalar>(buf);

  Marginals<Scalar> m{log_z, (alpha + beta).array().unaryExpr([&](Scalar v) {
                               return std::exp(v - log_z);
                             }).matrix(),
                      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(L + 2, L + 2)};
  for (Index j = 0; j < L; ++j) {
    m.transitions(L, j) = m.unary(0, j);
    m.transitions(j, L + 1) = m.unary(T - 1, j);
  }
  for (Index t = 0; t + 1 < T; ++t) {
    for (Index i = 0; i < L; ++i) {
      for (Index j = 0; j < L; ++j) {
        m.transitions(i, j) += std::exp(alpha(t, i) + x(i, j) + e(t + 1, j) + beta(t + 1, j) - log_z);
      }
    }
  }
  return m;
}

template <typename Scalar>
struct Decoded {
  std::vector<Index> tags;
  Scalar score;
};

/// Exact argmax; among equal-scoring sequences the lexicographically
/// smallest (lowest label at the earliest differing position) wins.
template <typename Emissions, typename Transitions>
Decoded<typename Emissions::Scalar> viterbi(const Eigen::MatrixBase<Emissions>& e,
                                            const Eigen::MatrixBase<Transitions>& x) {
  using Scalar = typename Emissions::Scalar;
  check_shapes(e, x);
  const Index T = e.rows();
  const Index L = e.cols();
  // suffix(t, j): best score of positions t.. given label j at t, STOP included.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> suffix(T, L);
  for (Index j = 0; j < L; ++j) suffix(T - 1, j) = e(T - 1, j) + x(j, L + 1);
  for (Index k = 1; k < T; ++k) {
    const Index t = T - 1 - k;
    for (Index i = 0; i < L; ++i) {
      Scalar best = -std::numeric_limits<Scalar>::infinity();
      for (Index j = 0; j < L; ++j) best = std::max(best, x(i, j) + suffix(t + 1, j));
      suffix(t, i) = e(t, i) + best;
    }
  }
  auto pick_first_best = [&](Index from, Index t) {
    Index arg = 0;
    Scalar best = x(from, 0) + suffix(t, 0);
    for (Index j = 1; j < L; ++j) {
      Scalar v = x(from, j) + suffix(t, j);
      if (v > best) {
        best = v;
        arg = j;
      }
    }
    return arg;
  };
  Decoded<Scalar> out;
  out.tags.reserve(static_cast<std::size_t>(T));
  out.tags.push_back(pick_first_best(L, 0));
  for (Index t = 1; t < T; ++t) out.tags.push_back(pick_first_best(out.tags.back(), t));
  out.score = sequence_score(e, x, out.tags);
  return out;
}

}  // namespace crf

double crf_score(const Tensor& emissions, const CrfParams& p, std::span<const Index> tags);
double crf_log_partition(const Tensor& emissions, const CrfParams& p);
crf::Decoded<double> viterbi_decode(const Tensor& emissions, const CrfParams& p);

/// log Z - score(gold) as a scalar tape op over emissions and transitions.
Tensor crf_nll(Tape& tape, const Tensor& emissions, const CrfParams& p,
               std::span<const Index> gold);

}  // namespace absa

#endif  // ABSA_CRF_HPP_
