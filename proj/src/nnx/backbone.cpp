#include <cmath>
#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/hash.hpp"
#include "maskrl/nnx.hpp"
#include "maskrl/random.hpp"

namespace maskrl::nnx {

BackboneNetwork::BackboneNetwork(Arch arch, std::uint64_t seed) : arch_(std::move(arch)), seed_(seed) {
  arch_.validate();
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  weights_.reserve(arch_.layer_count());
  for (std::size_t l = 0; l < arch_.layer_count(); ++l) {
    auto [rows, cols] = arch_.layer_shape(l);
    const double c = std::sqrt(2.0 / cols);
    Tensor2 w(rows, cols);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = coin(rng) ? c : -c;
    weights_.push_back(std::move(w));
  }
}

double BackboneNetwork::constant(std::size_t l) const {
  return std::sqrt(2.0 / arch_.layer_shape(l).second);
}

std::uint64_t BackboneNetwork::content_hash() const { return tensors_hash(weights_); }

BackboneNetwork init_backbone(const Arch& arch, std::uint64_t seed) { return BackboneNetwork(arch, seed); }

Tensor2 modulate(const Tensor2& weight, const Tensor2& mask) {
  if (weight.rows() != mask.rows() || weight.cols() != mask.cols()) {
    throw DimensionError("mask shape " + std::to_string(mask.rows()) + "x" + std::to_string(mask.cols()) +
                         " does not match weight shape " + std::to_string(weight.rows()) + "x" +
                         std::to_string(weight.cols()));
  }
  return weight.cwiseProduct(mask);
}

LayerStack modulated_stack(const BackboneNetwork& net, std::span<const Tensor2> masks) {
  if (masks.size() != net.layer_count()) {
    throw DimensionError("expected " + std::to_string(net.layer_count()) + " masks, got " +
                         std::to_string(masks.size()));
  }
  LayerStack stack;
  stack.weights.reserve(masks.size());
  for (std::size_t l = 0; l < masks.size(); ++l) stack.weights.push_back(modulate(net.weight(l), masks[l]));
  return stack;
}

MaskedForward forward(const BackboneNetwork& net, std::span<const Tensor2> masks, const Tensor2& x) {
  if (x.cols() != net.arch().input) {
    throw DimensionError("observation length " + std::to_string(x.cols()) + " != input size " +
                         std::to_string(net.arch().input));
  }
  MaskedForward out;
  out.output = forward(modulated_stack(net, masks), x, out.tape);
  return out;
}

}  // namespace maskrl::nnx
