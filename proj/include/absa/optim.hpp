#ifndef ABSA_OPTIM_HPP_
#define ABSA_OPTIM_HPP_

#include <span>
#include <vector>

#include "absa/tensor.hpp"

namespace absa {

/// eta_t = eta_0 / (1 + decay * t), t = completed epochs.
double lr_schedule(double initial_lr, double decay, int epoch);

struct SgdMomentumConfig {
  double initial_lr = 0.01;
  double decay = 0.04;
  double momentum = 0.9;
};

/// Classical momentum: v <- mu v - eta g; theta <- theta + v.
class SgdMomentum {
 public:
  SgdMomentum(std::vector<Tensor> params, SgdMomentumConfig config = {});

  /// Applies one update with the learning rate scheduled for `epoch`.
  void step(int epoch);
  /// Applies one update at an explicit learning rate.
  void step_with_lr(double lr);
  void zero_grad();

  const std::vector<Matrix>& velocity() const { return velocity_; }
  const SgdMomentumConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<Matrix> velocity_;
  SgdMomentumConfig config_;
};

struct AdamConfig {
  double lr = 3e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 2e-5;
};

/// Bias-corrected Adam with coupled L2: g <- g + lambda * theta before the
/// moment updates, for parameters flagged as decayed.
class Adam {
 public:
  Adam(std::vector<Tensor> params, std::vector<bool> decayed, AdamConfig config = {});
  Adam(std::vector<Tensor> params, AdamConfig config = {});

  void step();
  void zero_grad();

  long step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<bool> decayed_;
  std::vector<Matrix> first_;
  std::vector<Matrix> second_;
  AdamConfig config_;
  long steps_ = 0;
};

}  // namespace absa

#endif  // ABSA_OPTIM_HPP_
