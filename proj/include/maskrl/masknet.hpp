#pragma once

// Modulating masks over a frozen backbone.
//
// A task owns a ScoreSet (one real tensor per layer). Masks are produced by
// thresholding scores: binary masks select weights, continuous masks scale
// them by the surviving score. With stored masks available, a new task
// trains a softmax-weighted linear combination of the stored scores and a
// fresh random ScoreSet; the combination is folded into a single ScoreSet
// when the task ends.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskrl/nnx.hpp"

namespace maskrl::masknet {

using nnx::Tensor2;
using nnx::Vector;

enum class MaskMode { binary, continuous };

std::string to_string(MaskMode mode);
MaskMode parse_mask_mode(const std::string& text);

struct ScoreSet {
  std::vector<Tensor2> layers;
  MaskMode mode = MaskMode::binary;
  double threshold = 0.0;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t parameter_count() const;
};

/// Uniform scores in [-u, u] with u = sqrt(1 / fan_in), one tensor per backbone layer.
ScoreSet random_scores(const nnx::Arch& arch, MaskMode mode, std::uint64_t seed, double threshold = 0.0);

/// Elementwise threshold: binary → 1 where score > threshold; continuous → score where score > threshold.
Tensor2 gen_mask(const Tensor2& scores, MaskMode mode, double threshold);
std::vector<Tensor2> gen_mask(const ScoreSet& scores);

/// One completed task.
struct StoredMask {
  int task_id = 0;
  ScoreSet scores;
  /// Final normalised combination weights per layer (length k+1); empty when no combination was trained.
  std::vector<Vector> betas;
};

/// Append-only list of consolidated task masks.
class MaskStore {
 public:
  void append(StoredMask entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const StoredMask& operator[](std::size_t i) const { return entries_.at(i); }
  std::span<const StoredMask> entries() const { return entries_; }

  bool contains_task(int task_id) const;
  /// Throws std::out_of_range when the task has no stored mask.
  const StoredMask& by_task(int task_id) const;

  std::uint64_t entry_hash(std::size_t i) const;

 private:
  std::vector<StoredMask> entries_;
};

enum class BetaScheme { lc, blc };

/// Per-layer raw combination logits of length k+1: stored masks 0..k-1, then the new mask.
struct BetaLogits {
  std::vector<Vector> layers;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t width() const { return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().size()); }
  Vector normalized(std::size_t layer) const;
  std::vector<Vector> normalized() const;
};

/// Numerically stable softmax of one logit vector.
Vector softmax(const Vector& logits);

/// Logits whose softmax is the LC (uniform) or BLC (0.5 on the new mask) starting point.
BetaLogits init_betas(std::size_t stored, std::size_t layer_count, BetaScheme scheme);

/// Logits that put all weight on the new mask (one-hot); used to pin LC to RI dynamics.
BetaLogits one_hot_new_betas(std::size_t stored, std::size_t layer_count);

/// β̄_new·S_new + Σ β̄_i·S_i* for one layer. With an empty store the fresh scores are returned unchanged.
/// Throws ConfigError when the β width differs from store.size() + 1.
Tensor2 combine_scores(const MaskStore& store, const ScoreSet& fresh, const BetaLogits* betas, std::size_t layer);

/// Folds the trained combination into one ScoreSet and appends it to the store.
ScoreSet consolidate(MaskStore& store, const ScoreSet& fresh, const BetaLogits* betas, int task_id);

/// L2 norm of the difference between the generated masks of one layer.
double mask_distance(const ScoreSet& a, const ScoreSet& b, std::size_t layer);

/// Trainable parameters of the task currently being learned, plus the rule that
/// turns them into effective backbone weights.
///
/// Parameter order: fresh score tensors (one per layer), then β logits
/// (one column per layer) when a combination is trained.
class MaskModel {
 public:
  /// Independent mask (RI); the store is not consulted.
  MaskModel(const nnx::BackboneNetwork& backbone, ScoreSet fresh);
  /// Linear combination over `store` (LC/BLC). With an empty store this degenerates to RI.
  MaskModel(const nnx::BackboneNetwork& backbone, const MaskStore& store, ScoreSet fresh, BetaLogits betas,
            bool train_betas = true);

  const nnx::BackboneNetwork& backbone() const { return *backbone_; }
  bool combines() const { return store_ != nullptr && !store_->empty(); }
  bool trains_betas() const { return combines() && train_betas_; }

  const ScoreSet& fresh() const { return fresh_; }
  const std::optional<BetaLogits>& betas() const { return betas_; }

  /// Scores fed to the threshold, per layer (combination happens before thresholding).
  std::vector<Tensor2> combined_scores() const;
  std::vector<Tensor2> masks() const;
  nnx::LayerStack stack() const;

  /// Copies of the parameter tensors in optimiser order.
  std::vector<Tensor2> parameters() const;
  /// Writes updated parameter tensors back (same order/shapes as parameters()).
  void set_parameters(std::span<const Tensor2> params);
  std::size_t trainable_count() const;

  /// Maps gradients w.r.t. effective weights onto the trainable parameters using the
  /// straight-through rule ∂M/∂S ≡ 1 (dL/dS = dL/dW_eff ⊙ W).
  std::vector<Tensor2> parameter_gradients(const nnx::StackGradients& grads) const;

  /// Ends the task: consolidates into the store (when combining) and returns the stored entry.
  StoredMask finish(MaskStore& store, int task_id) const;

 private:
  const nnx::BackboneNetwork* backbone_;
  const MaskStore* store_ = nullptr;
  ScoreSet fresh_;
  std::optional<BetaLogits> betas_;
  bool train_betas_ = false;
};

}  // namespace maskrl::masknet
