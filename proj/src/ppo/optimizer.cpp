#include <cmath>

#include "maskrl/errors.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::ppo {

double global_norm(std::span<const Tensor2> grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<Tensor2> grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& g : grads) g *= scale;
  }
  return norm;
}

RmsProp::RmsProp(double learning_rate, double decay, double eps) : lr_(learning_rate), decay_(decay), eps_(eps) {}

void RmsProp::step(std::span<Tensor2> params, std::span<const Tensor2> grads) {
  if (params.size() != grads.size()) throw DimensionError("rmsprop: parameter/gradient count mismatch");
  if (square_avg_.empty()) {
    for (const auto& p : params) square_avg_.push_back(Tensor2::Zero(p.rows(), p.cols()));
  }
  if (square_avg_.size() != params.size()) throw DimensionError("rmsprop: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].rows() || grads[i].cols() != params[i].cols()) {
      throw DimensionError("rmsprop: gradient shape mismatch");
    }
    Tensor2& v = square_avg_[i];
    v.array() = decay_ * v.array() + (1.0 - decay_) * grads[i].array().square();
    params[i].array() -= lr_ * grads[i].array() / (v.array().sqrt() + eps_);
  }
}

double apply_update(std::span<Tensor2> params, std::span<Tensor2> grads, RmsProp& optimizer,
                    const PpoConfig& config) {
  const double norm = clip_grad_norm(grads, config.grad_clip);
  optimizer.step(params, grads);
  return norm;
}

}  // namespace maskrl::ppo
