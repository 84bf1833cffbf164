#pragma once

// Curriculum execution. One run trains a single agent on each task in turn
// for a fixed step budget, evaluating the agent on every task of the
// curriculum at a fixed iteration cadence.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maskrl/ctgraph.hpp"
#include "maskrl/masknet.hpp"
#include "maskrl/metrics.hpp"
#include "maskrl/nnx.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::lifelong {

using nnx::Tensor2;
using nnx::Vector;

enum class Variant { mask_ri, mask_lc, mask_blc, ewc_mh, ppo_plain, ste };

std::string to_string(Variant variant);
/// Accepts MASK_RI, MASK_LC, MASK_BLC, EWC_MH, PPO_PLAIN, STE (case-insensitive).
Variant parse_variant(const std::string& text);
bool is_mask_variant(Variant variant);

/// Which policy stands in for a task that has not been trained yet.
enum class UnseenRule { random_mask, current };

struct EvalConfig {
  int interval = 10;  // iterations between evaluations
  int episodes = 10;
  bool greedy = false;  // argmax instead of sampling
  UnseenRule unseen = UnseenRule::random_mask;
};

struct EwcConfig {
  double lambda = 100.0;
  double alpha = 0.5;
  int fisher_steps = 128;  // rollout length per worker for the Fisher estimate
};

struct RunConfig {
  std::vector<ctgraph::TaskSpec> tasks;
  std::string curriculum;
  Variant variant = Variant::mask_ri;
  std::uint64_t seed = 0;
  ppo::PpoConfig ppo;
  EvalConfig eval;
  EwcConfig ewc;
  nnx::Arch arch;
  masknet::MaskMode mask_mode = masknet::MaskMode::binary;
  double mask_threshold = 0.0;
  /// Pins LC/BLC combination weights to the new mask (no β training).
  bool one_hot_betas = false;
  /// Backbone seed; derived from `seed` when unset.
  std::optional<std::uint64_t> backbone_seed;

  std::uint64_t resolved_backbone_seed() const;
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Flattened parameter helpers for networks with biases: all weights, then all biases as n×1 tensors.
std::vector<Tensor2> flatten(const nnx::LayerStack& stack);
nnx::LayerStack unflatten(std::span<const Tensor2> params, std::size_t layers);
std::vector<Tensor2> flatten(const nnx::StackGradients& grads);

/// Trainable actor-critic with biases: orthogonal trunk, heads scaled by 1e-3, zero biases.
nnx::LayerStack init_plain_network(const nnx::Arch& arch, std::uint64_t seed);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin_task(int task) = 0;
  virtual ppo::Trainable& trainable() = 0;
  virtual void end_task(int task) = 0;
  /// Policy used to act on `task` right now.
  virtual nnx::LayerStack policy(int task) const = 0;
};

/// Modulating-mask agent (RI, LC, BLC) over a frozen backbone.
class MaskAgent final : public Agent {
 public:
  explicit MaskAgent(const RunConfig& config);
  ~MaskAgent() override;

  void begin_task(int task) override;
  ppo::Trainable& trainable() override;
  void end_task(int task) override;
  nnx::LayerStack policy(int task) const override;

  const nnx::BackboneNetwork& backbone() const { return backbone_; }
  const masknet::MaskStore& store() const { return store_; }
  const masknet::MaskModel* model() const { return model_.get(); }
  /// Adopts a previously stored set of masks (e.g. loaded from a checkpoint).
  void restore(masknet::MaskStore store);

 private:
  class Adapter;

  RunConfig config_;
  nnx::BackboneNetwork backbone_;
  masknet::MaskStore store_;
  std::unique_ptr<masknet::MaskModel> model_;
  std::unique_ptr<Adapter> adapter_;
  int current_ = -1;
};

/// One trainable network shared by every task (PPO_PLAIN and STE).
class PlainAgent final : public Agent, public ppo::Trainable {
 public:
  PlainAgent(const nnx::Arch& arch, std::uint64_t seed);

  void begin_task(int) override {}
  ppo::Trainable& trainable() override { return *this; }
  void end_task(int) override {}
  nnx::LayerStack policy(int) const override { return net_; }

  nnx::LayerStack stack() const override { return net_; }
  std::vector<Tensor2> parameters() const override { return flatten(net_); }
  void set_parameters(std::span<const Tensor2> params) override;
  std::vector<Tensor2> parameter_gradients(const nnx::StackGradients& grads) const override { return flatten(grads); }

 private:
  nnx::LayerStack net_;
};

/// Online EWC with a shared trunk and value head and one actor head per task.
class EwcAgent final : public Agent, public ppo::Trainable {
 public:
  EwcAgent(const nnx::Arch& arch, int tasks, const EwcConfig& config, std::uint64_t seed);

  void begin_task(int task) override;
  ppo::Trainable& trainable() override { return *this; }
  void end_task(int task) override;
  nnx::LayerStack policy(int task) const override;

  nnx::LayerStack stack() const override { return policy(current_); }
  std::vector<Tensor2> parameters() const override { return flatten(stack()); }
  void set_parameters(std::span<const Tensor2> params) override;
  std::vector<Tensor2> parameter_gradients(const nnx::StackGradients& grads) const override { return flatten(grads); }
  /// (λ/2) Σ F (θ - θ*)² over shared parameters.
  double add_regularizer(std::span<const Tensor2> params, std::span<Tensor2> grads) const override;

  /// Mean squared per-sample gradient of log π(a|s) over a buffer, per flattened parameter.
  std::vector<Tensor2> squared_gradients(const ppo::RolloutBuffer& buffer) const;
  /// F ← αF + (1-α)·sq and θ* ← current parameters.
  void consolidate(const std::vector<Tensor2>& squared);

  bool is_shared(std::size_t param_index) const;
  const std::vector<Tensor2>& fisher() const { return fisher_; }
  const std::vector<Tensor2>& anchor() const { return anchor_; }
  int current_task() const { return current_; }

 private:
  nnx::Arch arch_;
  EwcConfig config_;
  nnx::LayerStack shared_;  // full layer list; the actor slot is filled from the per-task heads
  std::vector<Tensor2> head_weights_;
  std::vector<Vector> head_biases_;
  std::vector<Tensor2> fisher_;  // flattened-parameter order of the current stack; actor entries stay zero
  std::vector<Tensor2> anchor_;
  int current_ = 0;
};

std::unique_ptr<Agent> make_agent(const RunConfig& config);

/// Mean return of `episodes` episodes on one task.
double evaluate_policy(const nnx::LayerStack& policy, const ctgraph::TaskSpec& task, int episodes, bool greedy,
                       Rng& rng);
double evaluate_policy(const nnx::LayerStack& policy, ctgraph::Environment& env, int episodes, bool greedy, Rng& rng);

/// Softmax action probabilities along the task's optimal trajectory (2d+1 rows).
metrics::ProbeTable probe_optimal_trajectory(const nnx::LayerStack& policy, const ctgraph::TaskSpec& task, int index);

struct Hooks {
  std::function<void(int task, const Agent& agent)> on_task_end;
  std::function<void(int task, int iteration, const ppo::UpdateStats& stats)> on_iteration;
  std::function<void(const Agent& agent)> on_run_end;
};

struct RunResult {
  metrics::MetricsLedger ledger;
  masknet::MaskStore store;  // empty for non-mask variants
  std::vector<metrics::ProbeTable> probes;
  std::uint64_t backbone_hash = 0;
  bool aborted = false;
  std::string error;
};

/// Trains the configured agent on every task in order. A TrainingError stops
/// the run and returns the partial ledger with `aborted` set.
RunResult run_lifelong(const RunConfig& config, const Hooks& hooks = {});

/// Single-task expert: plain PPO from scratch on tasks[task] only.
RunResult run_ste(const RunConfig& config, int task, const Hooks& hooks = {});

/// Rebuilds the pre-training policy of a mask run for task k from the final store.
metrics::ProbeTable probe_from_store(const RunConfig& config, const masknet::MaskStore& store, int task);

}  // namespace maskrl::lifelong
