#include "absa/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace absa {

double relative_error(double analytic, double numeric, double floor) {
  double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(const std::function<Tensor(Tape&)>& loss_fn,
                                const std::vector<NamedTensor>& params, double epsilon) {
  for (auto p : params) p.tensor.zero_grad();
  {
    Tape tape;
    Tensor loss = loss_fn(tape);
    backward(tape, loss);
  }

  auto evaluate = [&] {
    Tape tape;
    return loss_fn(tape).item();
  };

  GradCheckReport report;
  for (auto p : params) {
    Matrix analytic = p.tensor.grad();
    Matrix& value = p.tensor.mutable_value();
    for (Index i = 0; i < value.size(); ++i) {
      double saved = value.data()[i];
      value.data()[i] = saved + epsilon;
      double up = evaluate();
      value.data()[i] = saved - epsilon;
      double down = evaluate();
      value.data()[i] = saved;

      double numeric = (up - down) / (2.0 * epsilon);
      double a = analytic.data()[i];
      double err = relative_error(a, numeric);
      ++report.coordinates_checked;
      if (err > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace absa
