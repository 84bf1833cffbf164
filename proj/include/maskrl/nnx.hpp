#pragma once

// Fixed-shape MLP actor-critic with a hand-written reverse pass.
//
// Every policy in the toolkit (masked backbone, plain PPO, EWC multi-head)
// reduces to the same computation: a ReLU trunk followed by an actor head
// and a value head. Callers build a LayerStack of *effective* weights
// (W ⊙ M for masked nets, trainable W for plain ones), run forward() with a
// tape, and receive gradients with respect to those effective weights from
// backward(). Mapping effective-weight gradients back onto scores, β logits
// or trainable weights is the caller's job.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace maskrl::nnx {

using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Layer sizes. Layers are indexed trunk first, then the actor head, then the value head.
struct Arch {
  int input = 144;
  std::vector<int> hidden{200, 200, 200};
  int actions = 3;

  std::size_t layer_count() const { return hidden.size() + 2; }
  std::size_t actor_layer() const { return hidden.size(); }
  std::size_t value_layer() const { return hidden.size() + 1; }
  /// (rows = fan-out, cols = fan-in) of layer l.
  std::pair<int, int> layer_shape(std::size_t l) const;
  std::size_t parameter_count() const;

  /// Throws ConfigError on empty trunk or non-positive sizes.
  void validate() const;

  bool operator==(const Arch&) const = default;
};

/// Effective weights for one forward pass. `biases` is either empty or holds one vector per layer.
struct LayerStack {
  std::vector<Tensor2> weights;
  std::vector<Vector> biases;

  bool has_bias() const { return !biases.empty(); }
};

/// Activations recorded by forward(); owns the stack it was computed with.
class GradTape {
 public:
  GradTape() = default;

  bool recorded() const { return recorded_; }
  const LayerStack& stack() const { return stack_; }
  Eigen::Index batch() const { return input_.rows(); }

 private:
  friend struct Engine;
  bool recorded_ = false;
  LayerStack stack_;
  Tensor2 input_;
  std::vector<Tensor2> hidden_;  // post-ReLU activations of each trunk layer
};

struct ForwardOutput {
  Tensor2 logits;  // batch × actions
  Vector values;   // batch
};

struct StackGradients {
  std::vector<Tensor2> weights;
  std::vector<Vector> biases;  // empty when the stack has no biases
};

/// Pure inference; no tape.
ForwardOutput infer(const LayerStack& stack, const Tensor2& x);

/// Forward pass that records a tape. The stack is moved into the tape.
ForwardOutput forward(LayerStack stack, const Tensor2& x, GradTape& tape);

/// Reverse pass. dlogits is batch × actions, dvalues has length batch.
/// Throws UsageError when the tape was never recorded.
StackGradients backward(const GradTape& tape, const Tensor2& dlogits, const Vector& dvalues);

/// Checks that the stack matches an architecture; throws DimensionError otherwise.
void check_stack(const LayerStack& stack, const Arch& arch);

/// Frozen, bias-free network with signed-constant weights. Only const access is exposed.
class BackboneNetwork {
 public:
  BackboneNetwork(Arch arch, std::uint64_t seed);

  const Arch& arch() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t layer_count() const { return weights_.size(); }
  const Tensor2& weight(std::size_t l) const { return weights_.at(l); }
  std::span<const Tensor2> weights() const { return weights_; }

  /// Kaiming constant of layer l: sqrt(2 / fan_in).
  double constant(std::size_t l) const;

  /// FNV-1a over shapes and weight bytes.
  std::uint64_t content_hash() const;

 private:
  Arch arch_;
  std::uint64_t seed_;
  std::vector<Tensor2> weights_;
};

/// Signed Kaiming constant initialisation: each weight is ±sqrt(2/fan_in), sign from the seeded stream.
BackboneNetwork init_backbone(const Arch& arch, std::uint64_t seed);

/// W ⊙ M. Throws DimensionError on mismatch.
Tensor2 modulate(const Tensor2& weight, const Tensor2& mask);

/// Builds the bias-free stack W ⊙ M for every layer.
LayerStack modulated_stack(const BackboneNetwork& net, std::span<const Tensor2> masks);

struct MaskedForward {
  ForwardOutput output;
  GradTape tape;
};

/// Forward through the backbone modulated by one mask per layer.
MaskedForward forward(const BackboneNetwork& net, std::span<const Tensor2> masks, const Tensor2& x);

/// Row-wise softmax / log-softmax of logits.
Tensor2 softmax_rows(const Tensor2& logits);
Tensor2 log_softmax_rows(const Tensor2& logits);

/// Hash of a list of tensors (shapes + bytes).
std::uint64_t tensors_hash(std::span<const Tensor2> tensors);

}  // namespace maskrl::nnx
