#include <cmath>
#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/hash.hpp"
#include "maskrl/nnx.hpp"

namespace maskrl::nnx {

std::pair<int, int> Arch::layer_shape(std::size_t l) const {
  const std::size_t trunk = hidden.size();
  if (l < trunk) return {hidden[l], l == 0 ? input : hidden[l - 1]};
  const int last = hidden.empty() ? input : hidden.back();
  if (l == actor_layer()) return {actions, last};
  if (l == value_layer()) return {1, last};
  throw DimensionError("layer index " + std::to_string(l) + " out of range");
}

std::size_t Arch::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < layer_count(); ++l) {
    auto [r, c] = layer_shape(l);
    n += static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
  }
  return n;
}

void Arch::validate() const {
  if (input < 1) throw ConfigError("arch.input must be >= 1");
  if (actions < 1) throw ConfigError("arch.actions must be >= 1");
  if (hidden.empty()) throw ConfigError("arch.hidden must list at least one layer");
  for (int h : hidden) {
    if (h < 1) throw ConfigError("arch.hidden sizes must be >= 1");
  }
}

void check_stack(const LayerStack& stack, const Arch& arch) {
  if (stack.weights.size() != arch.layer_count()) {
    throw DimensionError("stack has " + std::to_string(stack.weights.size()) + " layers, arch expects " +
                         std::to_string(arch.layer_count()));
  }
  for (std::size_t l = 0; l < stack.weights.size(); ++l) {
    auto [r, c] = arch.layer_shape(l);
    if (stack.weights[l].rows() != r || stack.weights[l].cols() != c) {
      throw DimensionError("layer " + std::to_string(l) + " weight shape mismatch");
    }
  }
  if (stack.has_bias()) {
    if (stack.biases.size() != stack.weights.size()) throw DimensionError("bias count mismatch");
    for (std::size_t l = 0; l < stack.biases.size(); ++l) {
      if (stack.biases[l].size() != stack.weights[l].rows()) {
        throw DimensionError("layer " + std::to_string(l) + " bias length mismatch");
      }
    }
  }
}

struct Engine {
  // Trunk layers are weights[0 .. n-3]; weights[n-2] is the actor, weights[n-1] the value head.
  static void validate(const LayerStack& s, const Tensor2& x) {
    if (s.weights.size() < 3) throw DimensionError("stack needs a trunk layer plus two heads");
    if (x.cols() != s.weights.front().cols()) {
      throw DimensionError("input has " + std::to_string(x.cols()) + " features, first layer expects " +
                           std::to_string(s.weights.front().cols()));
    }
    for (std::size_t l = 1; l + 2 < s.weights.size(); ++l) {
      if (s.weights[l].cols() != s.weights[l - 1].rows()) throw DimensionError("trunk layers do not chain");
    }
    const auto trunk_out = s.weights[s.weights.size() - 3].rows();
    if (s.weights[s.weights.size() - 2].cols() != trunk_out || s.weights.back().cols() != trunk_out) {
      throw DimensionError("head fan-in does not match trunk output");
    }
    if (s.weights.back().rows() != 1) throw DimensionError("value head must have one output");
    if (s.has_bias() && s.biases.size() != s.weights.size()) throw DimensionError("bias count mismatch");
  }

  static Tensor2 affine(const LayerStack& s, std::size_t l, const Tensor2& in) {
    Tensor2 z = in * s.weights[l].transpose();
    if (s.has_bias()) z.rowwise() += s.biases[l].transpose();
    return z;
  }

  static ForwardOutput run(const LayerStack& s, const Tensor2& x, std::vector<Tensor2>* hidden) {
    validate(s, x);
    const std::size_t trunk = s.weights.size() - 2;
    Tensor2 h = x;
    for (std::size_t l = 0; l < trunk; ++l) {
      h = affine(s, l, h).cwiseMax(0.0);
      if (hidden) hidden->push_back(h);
    }
    ForwardOutput out;
    out.logits = affine(s, trunk, h);
    Tensor2 v = affine(s, trunk + 1, h);
    out.values = v.col(0);
    return out;
  }

  static StackGradients reverse(const GradTape& tape, const Tensor2& dlogits, const Vector& dvalues) {
    const LayerStack& s = tape.stack_;
    const std::size_t n = s.weights.size();
    const std::size_t trunk = n - 2;
    const Eigen::Index batch = tape.input_.rows();
    if (dlogits.rows() != batch || dlogits.cols() != s.weights[trunk].rows()) {
      throw DimensionError("dlogits shape does not match the recorded forward pass");
    }
    if (dvalues.size() != batch) throw DimensionError("dvalues length does not match batch");

    StackGradients g;
    g.weights.resize(n);
    if (s.has_bias()) g.biases.resize(n);

    const Tensor2& top = tape.hidden_.back();
    g.weights[trunk] = dlogits.transpose() * top;
    g.weights[trunk + 1] = dvalues.transpose() * top;
    if (s.has_bias()) {
      g.biases[trunk] = dlogits.colwise().sum().transpose();
      g.biases[trunk + 1] = Vector::Constant(1, dvalues.sum());
    }

    Tensor2 dh = dlogits * s.weights[trunk] + dvalues * s.weights[trunk + 1];
    for (std::size_t l = trunk; l-- > 0;) {
      const Tensor2& act = tape.hidden_[l];
      Tensor2 dz = dh.cwiseProduct((act.array() > 0.0).cast<double>().matrix());
      const Tensor2& below = l == 0 ? tape.input_ : tape.hidden_[l - 1];
      g.weights[l] = dz.transpose() * below;
      if (s.has_bias()) g.biases[l] = dz.colwise().sum().transpose();
      if (l > 0) dh = dz * s.weights[l];
    }
    return g;
  }

  static void record(GradTape& tape, LayerStack&& stack, const Tensor2& x) {
    tape.stack_ = std::move(stack);
    tape.input_ = x;
    tape.hidden_.clear();
    tape.recorded_ = true;
  }

  static std::vector<Tensor2>& hidden(GradTape& tape) { return tape.hidden_; }
  static const LayerStack& stack(const GradTape& tape) { return tape.stack_; }
};

ForwardOutput infer(const LayerStack& stack, const Tensor2& x) { return Engine::run(stack, x, nullptr); }

ForwardOutput forward(LayerStack stack, const Tensor2& x, GradTape& tape) {
  Engine::record(tape, std::move(stack), x);
  return Engine::run(Engine::stack(tape), x, &Engine::hidden(tape));
}

StackGradients backward(const GradTape& tape, const Tensor2& dlogits, const Vector& dvalues) {
  if (!tape.recorded()) throw UsageError("backward() called on a tape without a recorded forward pass");
  return Engine::reverse(tape, dlogits, dvalues);
}

Tensor2 softmax_rows(const Tensor2& logits) {
  Tensor2 p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

Tensor2 log_softmax_rows(const Tensor2& logits) {
  Tensor2 out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = (logits.row(i).array() - lse).matrix();
  }
  return out;
}

std::uint64_t tensors_hash(std::span<const Tensor2> tensors) {
  Fnv1a h;
  for (const auto& t : tensors) {
    h.update_u64(static_cast<std::uint64_t>(t.rows()));
    h.update_u64(static_cast<std::uint64_t>(t.cols()));
    h.update_f64(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
  }
  return h.digest();
}

}  // namespace maskrl::nnx
