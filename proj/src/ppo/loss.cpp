#include <algorithm>
#include <cmath>
#include <sstream>

#include "maskrl/errors.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::ppo {

LossOutput ppo_loss(const nnx::ForwardOutput& out, std::span<const int> actions,
                    std::span<const double> old_log_probs, std::span<const double> advantages,
                    std::span<const double> returns, const LossWeights& weights) {
  const Eigen::Index batch = out.logits.rows();
  const auto n = static_cast<std::size_t>(batch);
  if (actions.size() != n || old_log_probs.size() != n || advantages.size() != n || returns.size() != n ||
      out.values.size() != batch) {
    throw DimensionError("ppo_loss: minibatch arrays disagree on batch size");
  }
  LossOutput r;
  r.dlogits = Tensor2::Zero(batch, out.logits.cols());
  r.dvalues = Vector::Zero(batch);
  if (batch == 0) return r;

  const Tensor2 logp = nnx::log_softmax_rows(out.logits);
  const double inv_b = 1.0 / static_cast<double>(batch);
  int clipped = 0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const int a = actions[si];
    const double adv = advantages[si];
    const double ratio = std::exp(logp(i, a) - old_log_probs[si]);
    const double ratio_c = std::clamp(ratio, 1.0 - weights.ratio_clip, 1.0 + weights.ratio_clip);
    const double surr = ratio * adv;
    const double surr_c = ratio_c * adv;
    r.policy_loss -= std::min(surr, surr_c) * inv_b;
    if (ratio != ratio_c) ++clipped;

    double entropy = 0.0;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) entropy -= std::exp(logp(i, j)) * logp(i, j);
    r.entropy += entropy * inv_b;

    const double verr = out.values(i) - returns[si];
    r.value_loss += verr * verr * inv_b;
    r.dvalues(i) = 2.0 * weights.value_coef * verr * inv_b;

    // The unclipped branch carries gradient whenever it is the active minimum.
    const double dlogp = surr <= surr_c ? -adv * ratio * inv_b : 0.0;
    for (Eigen::Index j = 0; j < logp.cols(); ++j) {
      const double p = std::exp(logp(i, j));
      const double onehot = j == a ? 1.0 : 0.0;
      r.dlogits(i, j) = dlogp * (onehot - p) + weights.entropy_coef * inv_b * p * (logp(i, j) + entropy);
    }
  }
  r.clip_fraction = static_cast<double>(clipped) * inv_b;
  r.loss = r.policy_loss + weights.value_coef * r.value_loss - weights.entropy_coef * r.entropy;
  if (!std::isfinite(r.loss)) {
    std::ostringstream os;
    os << "non-finite PPO loss (policy " << r.policy_loss << ", value " << r.value_loss << ", entropy " << r.entropy
       << ")";
    throw TrainingError(os.str());
  }
  return r;
}

}  // namespace maskrl::ppo
