#include <numeric>

#include "maskrl/errors.hpp"
#include "maskrl/metrics.hpp"

namespace maskrl::metrics {

double total_eval_auc(std::span<const EvalRecord> records) {
  if (records.empty()) throw ConfigError("total evaluation AUC needs at least one evaluation record");
  double auc = 0.0;
  for (const auto& r : records) auc += r.total;
  return auc;
}

double total_eval_auc(const MetricsLedger& ledger) { return total_eval_auc(ledger.evaluations()); }

double curve_auc(std::span<const double> curve, double low, double high) {
  if (curve.empty()) throw ConfigError("cannot take the AUC of an empty curve");
  if (!(high > low)) throw ConfigError("normalisation range must satisfy high > low");
  double sum = 0.0;
  for (double v : curve) sum += (v - low) / (high - low);
  return sum / static_cast<double>(curve.size());
}

std::optional<double> forward_transfer(std::span<const double> curve, std::span<const double> reference, double low,
                                       double high) {
  if (curve.size() != reference.size()) {
    throw DimensionError("forward transfer needs curves on the same grid (" + std::to_string(curve.size()) + " vs " +
                         std::to_string(reference.size()) + " points)");
  }
  const double auc = curve_auc(curve, low, high);
  const double ref = curve_auc(reference, low, high);
  if (ref == 1.0) return std::nullopt;
  return (auc - ref) / (1.0 - ref);
}

}  // namespace maskrl::metrics
