#include <algorithm>
#include <cmath>
#include <numeric>

#include "maskrl/errors.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::ppo {

double Trainable::add_regularizer(std::span<const Tensor2>, std::span<Tensor2>) const { return 0.0; }

namespace {

std::vector<double> normalized(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) return std::vector<double>(x.size(), 0.0);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / (n - 1.0));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / (sd + 1e-8);
  return out;
}

void check_finite(std::span<const Tensor2> grads) {
  for (const auto& g : grads) {
    if (!g.allFinite()) throw TrainingError("non-finite gradient encountered during PPO update");
  }
}

}  // namespace

UpdateStats ppo_update(Trainable& model, RolloutBuffer& buffer, RmsProp& optimizer, const PpoConfig& config,
                       Rng& rng) {
  const std::size_t n = buffer.size();
  if (buffer.advantages.size() != n) throw UsageError("ppo_update: compute_gae() must run before the update");
  const std::vector<double> adv = config.normalize_advantages ? normalized(buffer.advantages) : buffer.advantages;
  const LossWeights weights{config.ratio_clip, config.entropy_coef, config.value_coef};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto mb = static_cast<std::size_t>(config.minibatch);

  UpdateStats stats;
  std::vector<int> actions;
  std::vector<double> old_logp, mb_adv, mb_ret;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const auto rows = static_cast<Eigen::Index>(end - start);
      Tensor2 x(rows, buffer.observations.cols());
      actions.clear();
      old_logp.clear();
      mb_adv.clear();
      mb_ret.clear();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        x.row(static_cast<Eigen::Index>(k - start)) = buffer.observations.row(static_cast<Eigen::Index>(i));
        actions.push_back(buffer.actions[i]);
        old_logp.push_back(buffer.log_probs[i]);
        mb_adv.push_back(adv[i]);
        mb_ret.push_back(buffer.returns[i]);
      }

      nnx::GradTape tape;
      const auto out = nnx::forward(model.stack(), x, tape);
      const LossOutput loss = ppo_loss(out, actions, old_logp, mb_adv, mb_ret, weights);
      std::vector<Tensor2> grads = model.parameter_gradients(nnx::backward(tape, loss.dlogits, loss.dvalues));
      std::vector<Tensor2> params = model.parameters();
      const double penalty = model.add_regularizer(params, grads);
      check_finite(grads);
      stats.grad_norm += apply_update(params, grads, optimizer, config);
      model.set_parameters(params);

      stats.loss += loss.loss + penalty;
      stats.policy_loss += loss.policy_loss;
      stats.value_loss += loss.value_loss;
      stats.entropy += loss.entropy;
      stats.penalty += penalty;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    const double m = stats.minibatches;
    stats.loss /= m;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.penalty /= m;
    stats.grad_norm /= m;
  }
  return stats;
}

}  // namespace maskrl::ppo
