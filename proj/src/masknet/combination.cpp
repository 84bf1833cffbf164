#include <cmath>
#include <limits>
#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/masknet.hpp"

namespace maskrl::masknet {

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

Vector BetaLogits::normalized(std::size_t layer) const { return softmax(layers.at(layer)); }

std::vector<Vector> BetaLogits::normalized() const {
  std::vector<Vector> out;
  out.reserve(layers.size());
  for (const auto& b : layers) out.push_back(softmax(b));
  return out;
}

BetaLogits init_betas(std::size_t stored, std::size_t layer_count, BetaScheme scheme) {
  // Softmax of log-targets reproduces the targets, so the logits are just logs.
  Vector targets(static_cast<Eigen::Index>(stored + 1));
  if (stored == 0) {
    targets(0) = 1.0;
  } else if (scheme == BetaScheme::lc) {
    targets.setConstant(1.0 / static_cast<double>(stored + 1));
  } else {
    targets.setConstant(0.5 / static_cast<double>(stored));
    targets(static_cast<Eigen::Index>(stored)) = 0.5;
  }
  BetaLogits b;
  b.layers.assign(layer_count, targets.array().log().matrix());
  return b;
}

BetaLogits one_hot_new_betas(std::size_t stored, std::size_t layer_count) {
  Vector logits = Vector::Constant(static_cast<Eigen::Index>(stored + 1), -std::numeric_limits<double>::infinity());
  logits(static_cast<Eigen::Index>(stored)) = 0.0;
  BetaLogits b;
  b.layers.assign(layer_count, logits);
  return b;
}

Tensor2 combine_scores(const MaskStore& store, const ScoreSet& fresh, const BetaLogits* betas, std::size_t layer) {
  if (layer >= fresh.layers.size()) throw DimensionError("layer " + std::to_string(layer) + " out of range");
  if (store.empty()) return fresh.layers[layer];
  if (betas == nullptr) throw ConfigError("combination over stored masks needs beta logits");
  if (betas->layers.size() != fresh.layers.size()) {
    throw ConfigError("beta logits cover " + std::to_string(betas->layers.size()) + " layers, scores cover " +
                      std::to_string(fresh.layers.size()));
  }
  const std::size_t k = store.size();
  if (static_cast<std::size_t>(betas->layers[layer].size()) != k + 1) {
    throw ConfigError("beta width " + std::to_string(betas->layers[layer].size()) + " != stored masks + 1 (" +
                      std::to_string(k + 1) + ")");
  }
  const Vector w = betas->normalized(layer);
  Tensor2 p = w(static_cast<Eigen::Index>(k)) * fresh.layers[layer];
  for (std::size_t i = 0; i < k; ++i) {
    const Tensor2& s = store[i].scores.layers.at(layer);
    if (s.rows() != p.rows() || s.cols() != p.cols()) throw DimensionError("stored mask shape mismatch");
    p += w(static_cast<Eigen::Index>(i)) * s;
  }
  return p;
}

ScoreSet consolidate(MaskStore& store, const ScoreSet& fresh, const BetaLogits* betas, int task_id) {
  ScoreSet out;
  out.mode = fresh.mode;
  out.threshold = fresh.threshold;
  for (std::size_t l = 0; l < fresh.layers.size(); ++l) out.layers.push_back(combine_scores(store, fresh, betas, l));
  StoredMask entry;
  entry.task_id = task_id;
  entry.scores = out;
  if (betas != nullptr) entry.betas = betas->normalized();
  store.append(std::move(entry));
  return out;
}

}  // namespace maskrl::masknet
