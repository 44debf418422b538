#include "absa/optim.hpp"

#include <cmath>

#include "absa/errors.hpp"

namespace absa {

double lr_schedule(double initial_lr, double decay, int epoch) {
  if (epoch < 0) throw ContractError("lr_schedule: epoch must be non-negative");
  return initial_lr / (1.0 + decay * static_cast<double>(epoch));
}

SgdMomentum::SgdMomentum(std::vector<Tensor> params, SgdMomentumConfig config)
    : params_(std::move(params)), config_(config) {
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.push_back(Matrix::Zero(p.rows(), p.cols()));
}

void SgdMomentum::step(int epoch) {
  step_with_lr(lr_schedule(config_.initial_lr, config_.decay, epoch));
}

void SgdMomentum::step_with_lr(double lr) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad()) {
      velocity_[i] *= config_.momentum;
    } else {
      if (p.grad().rows() != velocity_[i].rows() || p.grad().cols() != velocity_[i].cols()) {
        throw ContractError("sgd: gradient shape does not match parameter");
      }
      velocity_[i] = config_.momentum * velocity_[i] - lr * p.grad();
    }
    p.mutable_value() += velocity_[i];
  }
}

void SgdMomentum::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Adam::Adam(std::vector<Tensor> params, std::vector<bool> decayed, AdamConfig config)
    : params_(std::move(params)), decayed_(std::move(decayed)), config_(config) {
  if (decayed_.size() != params_.size()) {
    throw ContractError("adam: one decay flag per parameter required");
  }
  for (const auto& p : params_) {
    first_.push_back(Matrix::Zero(p.rows(), p.cols()));
    second_.push_back(Matrix::Zero(p.rows(), p.cols()));
  }
}

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : Adam(params, std::vector<bool>(params.size(), true), config) {}

void Adam::step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    Matrix g = p.has_grad() ? p.grad() : Matrix::Zero(p.rows(), p.cols());
    if (g.rows() != p.rows() || g.cols() != p.cols()) {
      throw ContractError("adam: gradient shape does not match parameter");
    }
    if (decayed_[i] && config_.weight_decay != 0.0) g += config_.weight_decay * p.value();
    first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
    second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g.cwiseAbs2();
    p.mutable_value().array() -= config_.lr * (first_[i].array() / bc1) /
                                 ((second_[i].array() / bc2).sqrt() + config_.epsilon);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace absa
