#pragma once

// Shared builders for unit and acceptance tests.

#include <cstring>
#include <vector>

#include "maskrl/masknet.hpp"
#include "maskrl/nnx.hpp"
#include "maskrl/random.hpp"
#include "oracles.hpp"

namespace fixtures {

using maskrl::Rng;
using maskrl::nnx::Tensor2;
using maskrl::nnx::Vector;

inline Tensor2 random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = u(rng);
  return t;
}

inline maskrl::nnx::Arch small_arch() {
  maskrl::nnx::Arch a;
  a.input = 6;
  a.hidden = {5, 4};
  a.actions = 3;
  return a;
}

inline maskrl::masknet::ScoreSet random_score_set(const maskrl::nnx::Arch& arch, maskrl::masknet::MaskMode mode,
                                                  Rng& rng, double lo, double hi) {
  maskrl::masknet::ScoreSet s;
  s.mode = mode;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    auto [r, c] = arch.layer_shape(l);
    s.layers.push_back(random_tensor(r, c, rng, lo, hi));
  }
  return s;
}

inline bool bit_equal(const Tensor2& a, const Tensor2& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

inline bool bit_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// One random continuous-mask instance: k ∈ [0, 3] stored masks, positive scores so the
/// threshold is locally the identity, a linear loss on logits and values. Returns the
/// relative error of the analytic score and β gradients against central differences.
inline double continuous_gradient_error(Rng& rng) {
  using namespace maskrl;
  const auto arch = small_arch();
  const nnx::BackboneNetwork net(arch, rng());
  std::uniform_int_distribution<int> kd(0, 3);
  const int k = kd(rng);
  masknet::MaskStore store;
  for (int i = 0; i < k; ++i) {
    masknet::StoredMask e;
    e.task_id = i;
    e.scores = random_score_set(arch, masknet::MaskMode::continuous, rng, 0.05, 1.0);
    store.append(std::move(e));
  }
  auto fresh = random_score_set(arch, masknet::MaskMode::continuous, rng, 0.05, 1.0);
  masknet::BetaLogits betas = masknet::init_betas(store.size(), arch.layer_count(), masknet::BetaScheme::lc);
  for (auto& b : betas.layers) b += random_tensor(b.size(), 1, rng, -0.5, 0.5).col(0);
  masknet::MaskModel model(net, store, fresh, betas);

  const Tensor2 x = random_tensor(4, arch.input, rng, 0.0, 1.0);
  const Tensor2 cl = random_tensor(4, arch.actions, rng);
  const Vector cv = random_tensor(4, 1, rng).col(0);

  auto params = model.parameters();
  std::vector<double> flat;
  for (const auto& p : params) flat.insert(flat.end(), p.data(), p.data() + p.size());
  auto loss = [&](const std::vector<double>& v) {
    auto ps = params;
    std::size_t o = 0;
    for (auto& p : ps) {
      std::copy(v.begin() + static_cast<std::ptrdiff_t>(o), v.begin() + static_cast<std::ptrdiff_t>(o + p.size()), p.data());
      o += static_cast<std::size_t>(p.size());
    }
    masknet::MaskModel m = model;
    m.set_parameters(ps);
    const auto out = nnx::infer(m.stack(), x);
    return out.logits.cwiseProduct(cl).sum() + out.values.dot(cv);
  };

  nnx::GradTape tape;
  nnx::forward(model.stack(), x, tape);
  const auto grads = model.parameter_gradients(nnx::backward(tape, cl, cv));
  std::vector<double> analytic;
  for (const auto& g : grads) analytic.insert(analytic.end(), g.data(), g.data() + g.size());
  const auto numeric = oracle::fd_gradient(loss, flat, 1e-5);
  return oracle::relative_error(analytic, numeric);
}

/// Live combination vs consolidated scores on `inputs` random observations; true when every
/// forward is bit-identical.
inline bool consolidation_equivalent(maskrl::masknet::MaskMode mode, std::uint64_t seed, int inputs = 100) {
  using namespace maskrl;
  Rng rng(seed);
  const nnx::Arch arch;
  const nnx::BackboneNetwork net(arch, seed);
  masknet::MaskStore store;
  for (int i = 0; i < 3; ++i) {
    masknet::StoredMask e;
    e.task_id = i;
    e.scores = masknet::random_scores(arch, mode, rng());
    store.append(std::move(e));
  }
  auto fresh = masknet::random_scores(arch, mode, rng());
  auto betas = masknet::init_betas(store.size(), arch.layer_count(), masknet::BetaScheme::blc);
  for (auto& b : betas.layers) b += random_tensor(b.size(), 1, rng).col(0);
  const masknet::MaskModel live(net, store, fresh, betas);
  const auto live_stack = live.stack();

  masknet::MaskStore copy = store;
  live.finish(copy, 3);
  const auto consolidated = nnx::modulated_stack(net, masknet::gen_mask(copy.by_task(3).scores));

  const Tensor2 x = random_tensor(inputs, arch.input, rng, 0.0, 1.0);
  const auto a = nnx::infer(live_stack, x);
  const auto b = nnx::infer(consolidated, x);
  return bit_equal(a.logits, b.logits) && bit_equal(a.values, b.values);
}

}  // namespace fixtures
