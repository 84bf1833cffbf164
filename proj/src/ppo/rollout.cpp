#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/ppo.hpp"

namespace maskrl::ppo {

WorkerPool::WorkerPool(const ctgraph::TaskSpec& task, int workers) {
  if (workers < 1) throw ConfigError("ppo.workers must be >= 1");
  envs_.reserve(static_cast<std::size_t>(workers));
  auto images = std::make_shared<const ctgraph::ImageBank>(task.config);
  for (int w = 0; w < workers; ++w) envs_.emplace_back(task, images);
  set_task(task);
}

void WorkerPool::set_task(const ctgraph::TaskSpec& task) {
  auto images = envs_.front().config() == task.config ? envs_.front().images()
                                                      : std::make_shared<const ctgraph::ImageBank>(task.config);
  observations_.resize(static_cast<Eigen::Index>(envs_.size()), ctgraph::kObservationSize);
  for (std::size_t w = 0; w < envs_.size(); ++w) {
    envs_[w] = ctgraph::Environment(task, images);
    observations_.row(static_cast<Eigen::Index>(w)) = envs_[w].reset().transpose();
  }
  running_.assign(envs_.size(), 0.0);
  finished_.clear();
}

WorkerPool::Step WorkerPool::step(int worker, int action) {
  auto& env = envs_.at(static_cast<std::size_t>(worker));
  auto result = env.step(action);
  running_[static_cast<std::size_t>(worker)] += result.reward;
  if (result.done) {
    finished_.push_back(running_[static_cast<std::size_t>(worker)]);
    running_[static_cast<std::size_t>(worker)] = 0.0;
    observations_.row(worker) = env.reset().transpose();
  } else {
    observations_.row(worker) = result.observation.transpose();
  }
  return {result.reward, result.done};
}

std::vector<double> WorkerPool::take_finished_returns() {
  std::vector<double> out;
  out.swap(finished_);
  return out;
}

RolloutBuffer collect_rollout(const nnx::LayerStack& policy, WorkerPool& pool, int steps, Rng& rng) {
  const int workers = pool.size();
  RolloutBuffer buf;
  buf.steps = steps;
  buf.workers = workers;
  const auto n = static_cast<std::size_t>(steps) * static_cast<std::size_t>(workers);
  buf.observations.resize(static_cast<Eigen::Index>(n), pool.observations().cols());
  buf.actions.reserve(n);
  buf.rewards.reserve(n);
  buf.dones.reserve(n);
  buf.log_probs.reserve(n);
  buf.values.reserve(n);
  pool.take_finished_returns();

  for (int t = 0; t < steps; ++t) {
    const auto out = nnx::infer(policy, pool.observations());
    const Tensor2 logp = nnx::log_softmax_rows(out.logits);
    const Tensor2 probs = logp.array().exp().matrix();
    for (int w = 0; w < workers; ++w) {
      const std::size_t i = buf.index(t, w);
      buf.observations.row(static_cast<Eigen::Index>(i)) = pool.observations().row(w);
      const Eigen::RowVectorXd p = probs.row(w);
      const int a = sample_categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), rng);
      buf.actions.push_back(a);
      buf.log_probs.push_back(logp(w, a));
      buf.values.push_back(out.values(w));
      const auto s = pool.step(w, a);
      buf.rewards.push_back(s.reward);
      buf.dones.push_back(s.done ? 1 : 0);
    }
  }
  const auto tail = nnx::infer(policy, pool.observations());
  buf.bootstrap_values.assign(tail.values.data(), tail.values.data() + tail.values.size());
  buf.episode_returns = pool.take_finished_returns();
  return buf;
}

}  // namespace maskrl::ppo
