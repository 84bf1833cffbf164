#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "maskrl/masknet.hpp"

namespace maskrl::metrics {

/// One lifelong evaluation: mean return on every curriculum task at a global step.
struct EvalRecord {
  long step = 0;
  int training_task = 0;  // task being trained when the evaluation ran
  int iteration = 0;      // 1-based iteration within that task
  std::vector<double> task_returns;
  double total = 0.0;  // Σ task_returns
};

struct RunInfo {
  std::string variant;
  std::string curriculum;
  std::uint64_t seed = 0;
  std::vector<std::string> task_labels;
};

class MetricsLedger {
 public:
  RunInfo info;

  /// Throws UsageError unless step stamps strictly increase.
  void add_evaluation(EvalRecord record);
  /// Per-task training curve entry (mean return of episodes finished in the iteration's rollout).
  void add_training_point(int task, double mean_return);

  const std::vector<EvalRecord>& evaluations() const { return evaluations_; }
  const std::vector<std::vector<double>>& training_curves() const { return curves_; }
  const std::vector<double>& training_curve(int task) const;

 private:
  std::vector<EvalRecord> evaluations_;
  std::vector<std::vector<double>> curves_;
};

/// Plain sum of the across-task totals over the evaluation grid. Throws ConfigError when empty.
double total_eval_auc(std::span<const EvalRecord> records);
double total_eval_auc(const MetricsLedger& ledger);

/// Mean of the curve after mapping [low, high] onto [0, 1].
double curve_auc(std::span<const double> curve, double low = 0.0, double high = 1.0);

/// (AUC - AUC_ref) / (1 - AUC_ref); nullopt when AUC_ref == 1. Throws DimensionError on grid mismatch.
std::optional<double> forward_transfer(std::span<const double> curve, std::span<const double> reference,
                                       double low = 0.0, double high = 1.0);

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

double student_t_cdf(double t, double dof);
double student_t_quantile(double p, double dof);

struct WelchResult {
  double t = 0.0;
  double dof = 0.0;
  double p = 1.0;
};

/// Two-sided Welch t-test. Both samples constant: p = 1 if the means agree, 0 otherwise.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double estimate = 0.0;

  bool excludes_zero() const { return lower > 0.0 || upper < 0.0; }
};

/// Percentile bootstrap interval for mean(a) - mean(b); deterministic per seed.
Interval bootstrap_ci(std::span<const double> a, std::span<const double> b, int iterations = 10000,
                      double level = 0.95, std::uint64_t seed = 0);

struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;  // NaN for n < 2
  std::size_t n = 0;
};

/// Student-t confidence interval of the mean.
MeanCi mean_ci(std::span<const double> values, double level = 0.95);

// Analysis exports ---------------------------------------------------------

/// Row k holds the final normalised combination weights for task k (k+1 values).
/// Throws ConfigError if any stored entry lacks combination weights (independent masks).
std::vector<std::vector<double>> beta_matrix(const masknet::MaskStore& store, std::size_t layer);

/// Pairwise mask distances of one layer; symmetric with a zero diagonal.
std::vector<std::vector<double>> distance_matrix(const masknet::MaskStore& store, std::size_t layer);

/// Softmax action probabilities recorded while walking the optimal trajectory.
struct ProbeTable {
  int task = 0;
  std::vector<int> optimal_actions;
  std::vector<std::vector<double>> probabilities;  // one row per step
};

}  // namespace maskrl::metrics
