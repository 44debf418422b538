#ifndef ABSA_GRADCHECK_HPP_
#define ABSA_GRADCHECK_HPP_

#include <functional>
#include <string>
#include <vector>

#include "absa/tensor.hpp"

namespace absa {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates_checked = 0;
};

/// |a - n| / max(|a|, |n|, floor). The floor keeps coordinates whose true
/// gradient is zero from dividing rounding noise by zero.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compares the tape gradient of `loss_fn` against central differences for
/// every coordinate of every tensor in `params`. `loss_fn` must be a pure
/// function of the parameter values (reseed any RNG inside it).
GradCheckReport check_gradients(const std::function<Tensor(Tape&)>& loss_fn,
                                const std::vector<NamedTensor>& params, double epsilon = 1e-5);

}  // namespace absa

#endif  // ABSA_GRADCHECK_HPP_
