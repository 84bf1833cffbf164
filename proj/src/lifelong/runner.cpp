#include <memory>
#include <numeric>

#include "maskrl/errors.hpp"
#include "maskrl/lifelong.hpp"
#include "maskrl/random.hpp"

namespace maskrl::lifelong {

namespace {

std::vector<ctgraph::Environment> make_eval_envs(const std::vector<ctgraph::TaskSpec>& tasks) {
  std::vector<ctgraph::Environment> envs;
  for (const auto& t : tasks) {
    std::shared_ptr<const ctgraph::ImageBank> bank;
    for (const auto& e : envs) {
      if (e.config() == t.config) bank = e.images();
    }
    if (!bank) bank = std::make_shared<const ctgraph::ImageBank>(t.config);
    envs.emplace_back(t, bank);
  }
  return envs;
}

void fisher_boundary(EwcAgent& agent, ppo::WorkerPool& pool, const RunConfig& config, int task) {
  Rng rng(derive_seed(config.seed, "fisher", static_cast<std::uint64_t>(task)));
  const auto buffer = ppo::collect_rollout(agent.stack(), pool, config.ewc.fisher_steps, rng);
  agent.consolidate(agent.squared_gradients(buffer));
}

}  // namespace

RunResult run_lifelong(const RunConfig& config, const Hooks& hooks) {
  config.validate();
  RunResult result;
  auto& info = result.ledger.info;
  info.variant = to_string(config.variant);
  info.curriculum = config.curriculum;
  info.seed = config.seed;
  for (const auto& t : config.tasks) info.task_labels.push_back(t.label);

  auto agent = make_agent(config);
  auto* masks = dynamic_cast<MaskAgent*>(agent.get());
  auto* ewc = dynamic_cast<EwcAgent*>(agent.get());
  if (masks) result.backbone_hash = masks->backbone().content_hash();

  auto eval_envs = make_eval_envs(config.tasks);
  ppo::WorkerPool pool(config.tasks.front(), config.ppo.workers);
  const int iterations = config.ppo.iterations_per_task();
  const int steps = config.ppo.steps_per_iteration();
  const auto n_tasks = static_cast<int>(config.tasks.size());
  long global_step = 0;
  std::uint64_t eval_index = 0;

  try {
    for (int k = 0; k < n_tasks; ++k) {
      const auto& task = config.tasks[static_cast<std::size_t>(k)];
      agent->begin_task(k);
      result.probes.push_back(probe_optimal_trajectory(agent->policy(k), task, k));
      pool.set_task(task);
      ppo::RmsProp optimizer(config.ppo);
      Rng rng(derive_seed(config.seed, "train", static_cast<std::uint64_t>(k)));
      auto& model = agent->trainable();
      double last_return = 0.0;

      for (int it = 1; it <= iterations; ++it) {
        auto buffer = ppo::collect_rollout(model.stack(), pool, config.ppo.rollout_length, rng);
        ppo::compute_gae(buffer, config.ppo.discount, config.ppo.gae_lambda);
        const auto stats = ppo::ppo_update(model, buffer, optimizer, config.ppo, rng);
        if (!buffer.episode_returns.empty()) {
          last_return = std::accumulate(buffer.episode_returns.begin(), buffer.episode_returns.end(), 0.0) /
                        static_cast<double>(buffer.episode_returns.size());
        }
        result.ledger.add_training_point(k, last_return);
        global_step += steps;
        if (hooks.on_iteration) hooks.on_iteration(k, it, stats);

        if (it % config.eval.interval == 0) {
          metrics::EvalRecord rec;
          rec.step = global_step;
          rec.training_task = k;
          rec.iteration = it;
          for (int j = 0; j < n_tasks; ++j) {
            Rng eval_rng(derive_seed(config.seed, "eval", eval_index * static_cast<std::uint64_t>(n_tasks) +
                                                              static_cast<std::uint64_t>(j)));
            rec.task_returns.push_back(evaluate_policy(agent->policy(j), eval_envs[static_cast<std::size_t>(j)],
                                                       config.eval.episodes, config.eval.greedy, eval_rng));
          }
          ++eval_index;
          result.ledger.add_evaluation(std::move(rec));
        }
      }

      if (ewc) fisher_boundary(*ewc, pool, config, k);
      agent->end_task(k);
      if (hooks.on_task_end) hooks.on_task_end(k, *agent);
    }
  } catch (const TrainingError& e) {
    result.aborted = true;
    result.error = e.what();
  }

  if (masks) result.store = masks->store();
  if (hooks.on_run_end) hooks.on_run_end(*agent);
  return result;
}

RunResult run_ste(const RunConfig& config, int task, const Hooks& hooks) {
  if (task < 0 || static_cast<std::size_t>(task) >= config.tasks.size()) throw ConfigError("task index out of range");
  RunConfig single = config;
  single.tasks = {config.tasks[static_cast<std::size_t>(task)]};
  single.variant = Variant::ste;
  single.seed = derive_seed(config.seed, "ste", static_cast<std::uint64_t>(task));
  auto result = run_lifelong(single, hooks);
  result.ledger.info.seed = config.seed;
  return result;
}

}  // namespace maskrl::lifelong
