#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/masknet.hpp"

namespace maskrl::masknet {

namespace {

void check_scores(const nnx::BackboneNetwork& backbone, const ScoreSet& scores) {
  if (scores.layers.size() != backbone.layer_count()) {
    throw DimensionError("score set has " + std::to_string(scores.layers.size()) + " layers, backbone has " +
                         std::to_string(backbone.layer_count()));
  }
  for (std::size_t l = 0; l < scores.layers.size(); ++l) {
    const auto& w = backbone.weight(l);
    if (scores.layers[l].rows() != w.rows() || scores.layers[l].cols() != w.cols()) {
      throw DimensionError("score layer " + std::to_string(l) + " shape does not match backbone");
    }
  }
}

}  // namespace

MaskModel::MaskModel(const nnx::BackboneNetwork& backbone, ScoreSet fresh)
    : backbone_(&backbone), fresh_(std::move(fresh)) {
  check_scores(backbone, fresh_);
}

MaskModel::MaskModel(const nnx::BackboneNetwork& backbone, const MaskStore& store, ScoreSet fresh, BetaLogits betas,
                     bool train_betas)
    : backbone_(&backbone), store_(&store), fresh_(std::move(fresh)), betas_(std::move(betas)),
      train_betas_(train_betas) {
  check_scores(backbone, fresh_);
  if (betas_->layers.size() != fresh_.layers.size()) throw ConfigError("beta logits must cover every layer");
  for (const auto& b : betas_->layers) {
    if (static_cast<std::size_t>(b.size()) != store.size() + 1) {
      throw ConfigError("beta width " + std::to_string(b.size()) + " != stored masks + 1 (" +
                        std::to_string(store.size() + 1) + ")");
    }
  }
}

std::vector<Tensor2> MaskModel::combined_scores() const {
  if (!combines()) return fresh_.layers;
  std::vector<Tensor2> out;
  out.reserve(fresh_.layers.size());
  for (std::size_t l = 0; l < fresh_.layers.size(); ++l) out.push_back(combine_scores(*store_, fresh_, &*betas_, l));
  return out;
}

std::vector<Tensor2> MaskModel::masks() const {
  std::vector<Tensor2> scores = combined_scores();
  for (auto& s : scores) s = gen_mask(s, fresh_.mode, fresh_.threshold);
  return scores;
}

nnx::LayerStack MaskModel::stack() const { return nnx::modulated_stack(*backbone_, masks()); }

std::vector<Tensor2> MaskModel::parameters() const {
  std::vector<Tensor2> p = fresh_.layers;
  if (trains_betas()) {
    for (const auto& b : betas_->layers) p.emplace_back(b);
  }
  return p;
}

std::size_t MaskModel::trainable_count() const {
  std::size_t n = fresh_.parameter_count();
  if (trains_betas()) n += betas_->layers.size() * betas_->width();
  return n;
}

void MaskModel::set_parameters(std::span<const Tensor2> params) {
  const std::size_t layers = fresh_.layers.size();
  const std::size_t expected = layers + (trains_betas() ? layers : 0);
  if (params.size() != expected) throw DimensionError("parameter list length mismatch");
  for (std::size_t l = 0; l < layers; ++l) {
    if (params[l].rows() != fresh_.layers[l].rows() || params[l].cols() != fresh_.layers[l].cols()) {
      throw DimensionError("score parameter shape mismatch");
    }
    fresh_.layers[l] = params[l];
  }
  if (trains_betas()) {
    for (std::size_t l = 0; l < layers; ++l) {
      const Tensor2& b = params[layers + l];
      if (b.size() != betas_->layers[l].size()) throw DimensionError("beta parameter shape mismatch");
      betas_->layers[l] = Eigen::Map<const Vector>(b.data(), b.size());
    }
  }
}

std::vector<Tensor2> MaskModel::parameter_gradients(const nnx::StackGradients& grads) const {
  const std::size_t layers = fresh_.layers.size();
  if (grads.weights.size() != layers) throw DimensionError("gradient layer count mismatch");
  std::vector<Tensor2> out;
  out.reserve(layers * 2);
  std::vector<Tensor2> dcombined;
  dcombined.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    // Straight-through: the threshold is treated as identity in the backward pass.
    dcombined.push_back(grads.weights[l].cwiseProduct(backbone_->weight(l)));
  }
  if (!combines()) return dcombined;

  const std::size_t k = store_->size();
  for (std::size_t l = 0; l < layers; ++l) {
    const Vector w = betas_->normalized(l);
    out.push_back(w(static_cast<Eigen::Index>(k)) * dcombined[l]);
  }
  if (!train_betas_) return out;
  for (std::size_t l = 0; l < layers; ++l) {
    const Vector w = betas_->normalized(l);
    Vector dw(static_cast<Eigen::Index>(k + 1));
    for (std::size_t i = 0; i < k; ++i) {
      dw(static_cast<Eigen::Index>(i)) = dcombined[l].cwiseProduct((*store_)[i].scores.layers[l]).sum();
    }
    dw(static_cast<Eigen::Index>(k)) = dcombined[l].cwiseProduct(fresh_.layers[l]).sum();
    // Softmax Jacobian: dL/db_j = w_j (dL/dw_j - Σ_i w_i dL/dw_i).
    const double mean = w.dot(dw);
    Vector db = w.cwiseProduct((dw.array() - mean).matrix());
    out.emplace_back(Eigen::Map<const Tensor2>(db.data(), db.size(), 1));
  }
  return out;
}

StoredMask MaskModel::finish(MaskStore& store, int task_id) const {
  if (combines() || betas_) {
    consolidate(store, fresh_, betas_ ? &*betas_ : nullptr, task_id);
  } else {
    StoredMask entry;
    entry.task_id = task_id;
    entry.scores = fresh_;
    store.append(std::move(entry));
  }
  return store[store.size() - 1];
}

}  // namespace maskrl::masknet
