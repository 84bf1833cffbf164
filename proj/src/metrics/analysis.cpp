#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/metrics.hpp"

namespace maskrl::metrics {

std::vector<std::vector<double>> beta_matrix(const masknet::MaskStore& store, std::size_t layer) {
  std::vector<std::vector<double>> rows;
  for (const auto& e : store.entries()) {
    if (e.betas.empty()) {
      throw ConfigError("task " + std::to_string(e.task_id) +
                        " has no combination weights; beta export needs a linear-combination run");
    }
    if (layer >= e.betas.size()) throw DimensionError("layer " + std::to_string(layer) + " out of range");
    const auto& b = e.betas[layer];
    rows.emplace_back(b.data(), b.data() + b.size());
  }
  return rows;
}

std::vector<std::vector<double>> distance_matrix(const masknet::MaskStore& store, std::size_t layer) {
  const std::size_t n = store.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = masknet::mask_distance(store[i].scores, store[j].scores, layer);
    }
  }
  return d;
}

}  // namespace maskrl::metrics
