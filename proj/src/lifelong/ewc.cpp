#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/lifelong.hpp"
#include "maskrl/random.hpp"

namespace maskrl::lifelong {

namespace {

void check_same_shapes(std::span<const Tensor2> a, std::span<const Tensor2> b) {
  if (a.size() != b.size()) throw DimensionError("parameter list length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
      throw DimensionError("parameter " + std::to_string(i) + " shape mismatch");
    }
  }
}

}  // namespace

EwcAgent::EwcAgent(const nnx::Arch& arch, int tasks, const EwcConfig& config, std::uint64_t seed)
    : arch_(arch), config_(config) {
  if (tasks < 1) throw ConfigError("EWC needs at least one task");
  shared_ = init_plain_network(arch, seed);
  const std::size_t actor = arch.actor_layer();
  for (int t = 0; t < tasks; ++t) {
    const auto head = init_plain_network(arch, derive_seed(seed, "head", static_cast<std::uint64_t>(t)));
    head_weights_.push_back(head.weights[actor]);
    head_biases_.push_back(head.biases[actor]);
  }
  shared_.weights[actor] = head_weights_[0];
  shared_.biases[actor] = head_biases_[0];
  for (const auto& p : flatten(shared_)) {
    fisher_.push_back(Tensor2::Zero(p.rows(), p.cols()));
    anchor_.push_back(p);
  }
}

void EwcAgent::begin_task(int task) {
  if (task < 0 || static_cast<std::size_t>(task) >= head_weights_.size()) throw ConfigError("task index out of range");
  current_ = task;
}

nnx::LayerStack EwcAgent::policy(int task) const {
  nnx::LayerStack s = shared_;
  const std::size_t actor = arch_.actor_layer();
  s.weights[actor] = head_weights_.at(static_cast<std::size_t>(task));
  s.biases[actor] = head_biases_.at(static_cast<std::size_t>(task));
  return s;
}

void EwcAgent::set_parameters(std::span<const Tensor2> params) {
  check_same_shapes(flatten(stack()), params);
  nnx::LayerStack s = unflatten(params, arch_.layer_count());
  const std::size_t actor = arch_.actor_layer();
  head_weights_[static_cast<std::size_t>(current_)] = s.weights[actor];
  head_biases_[static_cast<std::size_t>(current_)] = s.biases[actor];
  shared_ = std::move(s);
}

bool EwcAgent::is_shared(std::size_t param_index) const {
  const std::size_t actor = arch_.actor_layer();
  return param_index != actor && param_index != arch_.layer_count() + actor;
}

double EwcAgent::add_regularizer(std::span<const Tensor2> params, std::span<Tensor2> grads) const {
  double penalty = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!is_shared(i)) continue;
    const Tensor2 diff = params[i] - anchor_[i];
    penalty += 0.5 * config_.lambda * fisher_[i].cwiseProduct(diff.cwiseProduct(diff)).sum();
    grads[i] += config_.lambda * fisher_[i].cwiseProduct(diff);
  }
  return penalty;
}

std::vector<Tensor2> EwcAgent::squared_gradients(const ppo::RolloutBuffer& buffer) const {
  const nnx::LayerStack s = stack();
  std::vector<Tensor2> sum;
  for (const auto& p : flatten(s)) sum.push_back(Tensor2::Zero(p.rows(), p.cols()));
  const std::size_t n = buffer.size();
  if (n == 0) return sum;
  for (std::size_t i = 0; i < n; ++i) {
    nnx::GradTape tape;
    const Tensor2 x = buffer.observations.row(static_cast<Eigen::Index>(i));
    const auto out = nnx::forward(s, x, tape);
    // d log π(a|s) / d logits = onehot(a) - softmax.
    Tensor2 dlogits = -nnx::softmax_rows(out.logits);
    dlogits(0, buffer.actions[i]) += 1.0;
    const auto g = flatten(nnx::backward(tape, dlogits, Vector::Zero(1)));
    for (std::size_t k = 0; k < g.size(); ++k) sum[k] += g[k].cwiseProduct(g[k]);
  }
  for (auto& t : sum) t /= static_cast<double>(n);
  return sum;
}

void EwcAgent::consolidate(const std::vector<Tensor2>& squared) {
  if (squared.size() != fisher_.size()) throw DimensionError("Fisher estimate has the wrong parameter count");
  const auto params = flatten(stack());
  for (std::size_t i = 0; i < fisher_.size(); ++i) {
    if (is_shared(i)) fisher_[i] = config_.alpha * fisher_[i] + (1.0 - config_.alpha) * squared[i];
    anchor_[i] = params[i];
  }
}

void EwcAgent::end_task(int task) {
  if (task != current_) throw UsageError("end_task does not match the task in progress");
}

}  // namespace maskrl::lifelong
