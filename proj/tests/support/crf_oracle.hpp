#ifndef ABSA_TESTS_CRF_ORACLE_HPP_
#define ABSA_TESTS_CRF_ORACLE_HPP_

// Brute-force CRF reference: scores every label sequence directly.

#include <cmath>
#include <string>
#include <vector>

#include "absa/crf.hpp"

namespace absa::testing {

struct CrfInstance {
  Tensor emissions;
  CrfParams params;
};

/// Emissions and free transitions drawn from U(-2, 2); boundary entries stay
/// as CrfParams::create leaves them.
inline CrfInstance random_crf_instance(Index T, Index L, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Matrix e(T, L);
  for (Index i = 0; i < e.size(); ++i) e.data()[i] = u(rng);
  std::vector<std::string> labels;
  for (Index j = 0; j < L; ++j) labels.push_back("L" + std::to_string(j));
  CrfParams p = CrfParams::create(labels);
  Matrix& x = p.transitions.mutable_value();
  for (Index i = 0; i < L + 2; ++i) {
    for (Index j = 0; j < L + 2; ++j) {
      if (j != L && i != L + 1) x(i, j) = u(rng);
    }
  }
  return {Tensor::from_matrix(e, true), p};
}

inline double oracle_score(const Matrix& e, const Matrix& x, const std::vector<Index>& tags) {
  const Index L = e.cols();
  double s = x(L, tags.front()) + x(tags.back(), L + 1);
  for (std::size_t t = 0; t < tags.size(); ++t) {
    s += e(static_cast<Index>(t), tags[t]);
    if (t > 0) s += x(tags[t - 1], tags[t]);
  }
  return s;
}

/// All L^T sequences in lexicographic order.
inline std::vector<std::vector<Index>> all_sequences(Index T, Index L) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(static_cast<std::size_t>(T), 0);
  while (true) {
    out.push_back(cur);
    Index pos = T - 1;
    while (pos >= 0 && ++cur[static_cast<std::size_t>(pos)] == L) {
      cur[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

struct Enumerated {
  double log_z = 0.0;
  std::vector<double> scores;
  std::vector<std::vector<Index>> seqs;
  std::size_t best = 0;  // first maximum in lexicographic order
};

inline Enumerated enumerate(const CrfInstance& in) {
  const Matrix& e = in.emissions.value();
  const Matrix& x = in.params.transitions.value();
  Enumerated r;
  r.seqs = all_sequences(e.rows(), e.cols());
  double mx = -INFINITY;
  for (std::size_t k = 0; k < r.seqs.size(); ++k) {
    r.scores.push_back(oracle_score(e, x, r.seqs[k]));
    if (r.scores.back() > mx) {
      mx = r.scores.back();
      r.best = k;
    }
  }
  double acc = 0.0;
  for (double s : r.scores) acc += std::exp(s - mx);
  r.log_z = mx + std::log(acc);
  return r;
}

}  // namespace absa::testing

#endif  // ABSA_TESTS_CRF_ORACLE_HPP_
