#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/lifelong.hpp"

namespace maskrl::lifelong {

namespace {

Tensor2 as_row(const ctgraph::Observation& obs) { return obs.transpose(); }

}  // namespace

double evaluate_policy(const nnx::LayerStack& policy, ctgraph::Environment& env, int episodes, bool greedy,
                       Rng& rng) {
  if (episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    ctgraph::Observation obs = env.reset();
    for (;;) {
      const auto out = nnx::infer(policy, as_row(obs));
      int action = 0;
      if (greedy) {
        out.logits.row(0).maxCoeff(&action);
      } else {
        const Tensor2 p = nnx::softmax_rows(out.logits);
        action = sample_categorical(std::span<const double>(p.data(), static_cast<std::size_t>(p.cols())), rng);
      }
      auto step = env.step(action);
      total += step.reward;
      if (step.done) break;
      obs = std::move(step.observation);
    }
  }
  return total / static_cast<double>(episodes);
}

double evaluate_policy(const nnx::LayerStack& policy, const ctgraph::TaskSpec& task, int episodes, bool greedy,
                       Rng& rng) {
  ctgraph::Environment env(task);
  return evaluate_policy(policy, env, episodes, greedy, rng);
}

metrics::ProbeTable probe_optimal_trajectory(const nnx::LayerStack& policy, const ctgraph::TaskSpec& task, int index) {
  ctgraph::Environment env(task);
  metrics::ProbeTable table;
  table.task = index;
  table.optimal_actions = env.optimal_actions();
  ctgraph::Observation obs = env.reset();
  for (std::size_t i = 0; i < table.optimal_actions.size(); ++i) {
    const Tensor2 p = nnx::softmax_rows(nnx::infer(policy, as_row(obs)).logits);
    table.probabilities.emplace_back(p.data(), p.data() + p.cols());
    auto step = env.step(table.optimal_actions[i]);
    obs = std::move(step.observation);
  }
  return table;
}

metrics::ProbeTable probe_from_store(const RunConfig& config, const masknet::MaskStore& store, int task) {
  if (!is_mask_variant(config.variant)) {
    throw ConfigError("probe reconstruction needs a mask variant, got " + to_string(config.variant));
  }
  if (task < 0 || static_cast<std::size_t>(task) >= config.tasks.size()) throw ConfigError("task index out of range");
  masknet::MaskStore prefix;
  for (const auto& e : store.entries()) {
    if (e.task_id < task) prefix.append(e);
  }
  MaskAgent agent(config);
  agent.restore(std::move(prefix));
  agent.begin_task(task);
  return probe_optimal_trajectory(agent.policy(task), config.tasks[static_cast<std::size_t>(task)], task);
}

}  // namespace maskrl::lifelong
