#include <cmath>
#include <stdexcept>
#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/hash.hpp"
#include "maskrl/masknet.hpp"
#include "maskrl/random.hpp"

namespace maskrl::masknet {

std::string to_string(MaskMode mode) { return mode == MaskMode::binary ? "binary" : "continuous"; }

MaskMode parse_mask_mode(const std::string& text) {
  if (text == "binary") return MaskMode::binary;
  if (text == "continuous") return MaskMode::continuous;
  throw ConfigError("unknown mask mode '" + text + "' (expected binary or continuous)");
}

std::size_t ScoreSet::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : layers) n += static_cast<std::size_t>(t.size());
  return n;
}

ScoreSet random_scores(const nnx::Arch& arch, MaskMode mode, std::uint64_t seed, double threshold) {
  arch.validate();
  Rng rng(seed);
  ScoreSet s;
  s.mode = mode;
  s.threshold = threshold;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    auto [rows, cols] = arch.layer_shape(l);
    const double bound = std::sqrt(1.0 / cols);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor2 t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = dist(rng);
    s.layers.push_back(std::move(t));
  }
  return s;
}

Tensor2 gen_mask(const Tensor2& scores, MaskMode mode, double threshold) {
  if (mode == MaskMode::binary) {
    return (scores.array() > threshold).cast<double>().matrix();
  }
  return (scores.array() > threshold).select(scores, 0.0);
}

std::vector<Tensor2> gen_mask(const ScoreSet& scores) {
  std::vector<Tensor2> masks;
  masks.reserve(scores.layers.size());
  for (const auto& s : scores.layers) masks.push_back(gen_mask(s, scores.mode, scores.threshold));
  return masks;
}

void MaskStore::append(StoredMask entry) { entries_.push_back(std::move(entry)); }

bool MaskStore::contains_task(int task_id) const {
  for (const auto& e : entries_) {
    if (e.task_id == task_id) return true;
  }
  return false;
}

const StoredMask& MaskStore::by_task(int task_id) const {
  for (const auto& e : entries_) {
    if (e.task_id == task_id) return e;
  }
  throw std::out_of_range("no stored mask for task " + std::to_string(task_id));
}

std::uint64_t MaskStore::entry_hash(std::size_t i) const {
  const StoredMask& e = entries_.at(i);
  Fnv1a h;
  h.update_u64(static_cast<std::uint64_t>(e.task_id));
  h.update_u64(e.scores.mode == MaskMode::binary ? 0 : 1);
  h.update_f64(e.scores.threshold);
  h.update_u64(nnx::tensors_hash(e.scores.layers));
  for (const auto& b : e.betas) h.update_f64(std::span<const double>(b.data(), static_cast<std::size_t>(b.size())));
  return h.digest();
}

double mask_distance(const ScoreSet& a, const ScoreSet& b, std::size_t layer) {
  if (layer >= a.layers.size() || layer >= b.layers.size()) {
    throw DimensionError("layer " + std::to_string(layer) + " out of range for mask distance");
  }
  const Tensor2& sa = a.layers[layer];
  const Tensor2& sb = b.layers[layer];
  if (sa.rows() != sb.rows() || sa.cols() != sb.cols()) throw DimensionError("mask shapes differ");
  return (gen_mask(sa, a.mode, a.threshold) - gen_mask(sb, b.mode, b.threshold)).norm();
}

}  // namespace maskrl::masknet
