#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/metrics.hpp"

namespace maskrl::metrics {

void MetricsLedger::add_evaluation(EvalRecord record) {
  if (!evaluations_.empty() && record.step <= evaluations_.back().step) {
    throw UsageError("evaluation step " + std::to_string(record.step) + " does not follow " +
                     std::to_string(evaluations_.back().step));
  }
  double total = 0.0;
  for (double r : record.task_returns) total += r;
  record.total = total;
  evaluations_.push_back(std::move(record));
}

void MetricsLedger::add_training_point(int task, double mean_return) {
  if (task < 0) throw UsageError("negative task index");
  if (curves_.size() <= static_cast<std::size_t>(task)) curves_.resize(static_cast<std::size_t>(task) + 1);
  curves_[static_cast<std::size_t>(task)].push_back(mean_return);
}

const std::vector<double>& MetricsLedger::training_curve(int task) const {
  if (task < 0 || static_cast<std::size_t>(task) >= curves_.size()) {
    throw std::out_of_range("no training curve for task " + std::to_string(task));
  }
  return curves_[static_cast<std::size_t>(task)];
}

}  // namespace maskrl::metrics
