#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::ppo {

void PpoConfig::validate() const {
  auto positive = [](double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(std::string("ppo.") + field + " must be > 0");
  };
  auto unit = [](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("ppo.") + field + " must lie in [0, 1]");
  };
  positive(learning_rate, "learning_rate");
  unit(discount, "discount");
  positive(grad_clip, "grad_clip");
  if (!(entropy_coef >= 0.0)) throw ConfigError("ppo.entropy_coef must be >= 0");
  unit(gae_lambda, "gae_lambda");
  if (rollout_length < 1) throw ConfigError("ppo.rollout_length must be >= 1");
  if (workers < 1) throw ConfigError("ppo.workers must be >= 1");
  positive(ratio_clip, "ratio_clip");
  if (epochs < 1) throw ConfigError("ppo.epochs must be >= 1");
  if (minibatch < 1) throw ConfigError("ppo.minibatch must be >= 1");
  if (train_steps_per_task < steps_per_iteration()) {
    throw ConfigError("ppo.train_steps_per_task must cover at least one rollout (rollout_length * workers)");
  }
  if (!(value_coef >= 0.0)) throw ConfigError("ppo.value_coef must be >= 0");
  unit(rms_decay, "rms_decay");
  positive(rms_eps, "rms_eps");
}

std::vector<double> gae_sequence(std::span<const double> rewards, std::span<const double> values,
                                 std::span<const std::uint8_t> dones, double bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw DimensionError("gae: rewards/values/dones lengths differ");
  std::vector<double> adv(n);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t t = n; t-- > 0;) {
    const double live = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + gamma * next_value * live - values[t];
    next_adv = delta + gamma * lambda * live * next_adv;
    adv[t] = next_adv;
    next_value = values[t];
  }
  return adv;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const std::size_t n = buffer.size();
  if (buffer.bootstrap_values.size() != static_cast<std::size_t>(buffer.workers)) {
    throw DimensionError("gae: one bootstrap value per worker required");
  }
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  std::vector<double> r(static_cast<std::size_t>(buffer.steps)), v(r.size());
  std::vector<std::uint8_t> d(r.size());
  for (int w = 0; w < buffer.workers; ++w) {
    for (int t = 0; t < buffer.steps; ++t) {
      const std::size_t i = buffer.index(t, w);
      r[static_cast<std::size_t>(t)] = buffer.rewards[i];
      v[static_cast<std::size_t>(t)] = buffer.values[i];
      d[static_cast<std::size_t>(t)] = buffer.dones[i];
    }
    const auto adv = gae_sequence(r, v, d, buffer.bootstrap_values[static_cast<std::size_t>(w)], gamma, lambda);
    for (int t = 0; t < buffer.steps; ++t) {
      const std::size_t i = buffer.index(t, w);
      buffer.advantages[i] = adv[static_cast<std::size_t>(t)];
      buffer.returns[i] = adv[static_cast<std::size_t>(t)] + buffer.values[i];
    }
  }
}

}  // namespace maskrl::ppo
