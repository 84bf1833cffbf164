#pragma once

// On-policy PPO: rollouts over parallel CT-graph workers, GAE, the clipped
// surrogate with value and entropy terms, global-norm clipping and RMSprop.
// The optimiser only ever sees the tensors a Trainable hands out, so for
// masked agents the backbone is structurally out of reach.

#include <cstdint>
#include <span>
#include <vector>

#include "maskrl/ctgraph.hpp"
#include "maskrl/nnx.hpp"
#include "maskrl/random.hpp"

namespace maskrl::ppo {

using nnx::Tensor2;
using nnx::Vector;

struct PpoConfig {
  double learning_rate = 1.5e-4;
  double discount = 0.99;
  double grad_clip = 5.0;
  double entropy_coef = 0.1;
  double gae_lambda = 0.99;
  int rollout_length = 128;
  int workers = 4;
  double ratio_clip = 0.1;
  int epochs = 8;
  int minibatch = 64;
  long train_steps_per_task = 102400;
  double value_coef = 0.5;
  double rms_decay = 0.99;
  double rms_eps = 1e-8;
  bool normalize_advantages = true;

  int steps_per_iteration() const { return rollout_length * workers; }
  int iterations_per_task() const { return static_cast<int>(train_steps_per_task / steps_per_iteration()); }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Transitions stored time-major: index = t * workers + w.
struct RolloutBuffer {
  int steps = 0;
  int workers = 0;
  Tensor2 observations;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<double> log_probs;
  std::vector<double> values;
  std::vector<double> bootstrap_values;  // V(s_T) per worker
  std::vector<double> advantages;
  std::vector<double> returns;
  std::vector<double> episode_returns;  // episodes that finished during collection

  std::size_t size() const { return actions.size(); }
  std::size_t index(int t, int w) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(workers) + static_cast<std::size_t>(w);
  }
};

/// GAE over one worker's sequence. dones[t] marks that the episode ended after step t.
std::vector<double> gae_sequence(std::span<const double> rewards, std::span<const double> values,
                                 std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda);

/// Fills buffer.advantages and buffer.returns (= advantage + value).
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

/// Independent environments stepped in fixed worker order; episodes auto-reset.
class WorkerPool {
 public:
  WorkerPool(const ctgraph::TaskSpec& task, int workers);

  void set_task(const ctgraph::TaskSpec& task);
  int size() const { return static_cast<int>(envs_.size()); }
  const Tensor2& observations() const { return observations_; }
  const ctgraph::TaskSpec& task() const { return envs_.front().task(); }

  struct Step {
    double reward;
    bool done;
  };
  Step step(int worker, int action);
  std::vector<double> take_finished_returns();

 private:
  std::vector<ctgraph::Environment> envs_;
  Tensor2 observations_;
  std::vector<double> running_;
  std::vector<double> finished_;
};

/// Samples `steps` actions per worker from softmax(actor logits).
RolloutBuffer collect_rollout(const nnx::LayerStack& policy, WorkerPool& pool, int steps, Rng& rng);

struct LossOutput {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  Tensor2 dlogits;
  Vector dvalues;
};

struct LossWeights {
  double ratio_clip = 0.1;
  double entropy_coef = 0.1;
  double value_coef = 0.5;
};

/// loss = -mean(min(rA, clip(r)A)) + value_coef·mean((V - R)²) - entropy_coef·mean(H).
/// Throws TrainingError if the loss is not finite.
LossOutput ppo_loss(const nnx::ForwardOutput& out, std::span<const int> actions,
                    std::span<const double> old_log_probs, std::span<const double> advantages,
                    std::span<const double> returns, const LossWeights& weights);

double global_norm(std::span<const Tensor2> grads);
/// Scales grads in place so the global norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(std::span<Tensor2> grads, double max_norm);

/// v ← ρ v + (1-ρ) g²;  p ← p - lr · g / (sqrt(v) + eps)
class RmsProp {
 public:
  RmsProp(double learning_rate, double decay, double eps);
  explicit RmsProp(const PpoConfig& config) : RmsProp(config.learning_rate, config.rms_decay, config.rms_eps) {}

  void step(std::span<Tensor2> params, std::span<const Tensor2> grads);
  void reset() { square_avg_.clear(); }

 private:
  double lr_, decay_, eps_;
  std::vector<Tensor2> square_avg_;
};

/// Global-norm clipping followed by one RMSprop step. Returns the pre-clip norm.
double apply_update(std::span<Tensor2> params, std::span<Tensor2> grads, RmsProp& optimizer, const PpoConfig& config);

/// Anything PPO can optimise: a parameter list plus the map from effective-weight
/// gradients back onto those parameters.
class Trainable {
 public:
  virtual ~Trainable() = default;
  virtual nnx::LayerStack stack() const = 0;
  virtual std::vector<Tensor2> parameters() const = 0;
  virtual void set_parameters(std::span<const Tensor2> params) = 0;
  virtual std::vector<Tensor2> parameter_gradients(const nnx::StackGradients& grads) const = 0;
  /// Adds penalty gradients into grads and returns the penalty value. Default: none.
  virtual double add_regularizer(std::span<const Tensor2> params, std::span<Tensor2> grads) const;
};

struct UpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double penalty = 0.0;
  double grad_norm = 0.0;
  int minibatches = 0;
};

/// Runs `epochs` passes of shuffled minibatch updates over a filled buffer.
UpdateStats ppo_update(Trainable& model, RolloutBuffer& buffer, RmsProp& optimizer, const PpoConfig& config, Rng& rng);

}  // namespace maskrl::ppo
