#include <fstream>
#include <sstream>

#include "maskrl/cli.hpp"
#include "maskrl/errors.hpp"

namespace maskrl::cli {

std::string eval_csv(const metrics::MetricsLedger& ledger) {
  std::string out = "step";
  const std::size_t tasks = ledger.evaluations().empty() ? ledger.info.task_labels.size()
                                                         : ledger.evaluations().front().task_returns.size();
  for (std::size_t j = 0; j < tasks; ++j) out += ",task_" + std::to_string(j);
  out += ",sum\n";
  for (const auto& r : ledger.evaluations()) {
    out += std::to_string(r.step);
    for (double v : r.task_returns) out += "," + format_double(v);
    out += "," + format_double(r.total) + "\n";
  }
  return out;
}

std::string train_csv(const metrics::MetricsLedger& ledger) {
  std::string out = "task,iteration,mean_return\n";
  const auto& curves = ledger.training_curves();
  for (std::size_t k = 0; k < curves.size(); ++k) {
    for (std::size_t i = 0; i < curves[k].size(); ++i) {
      out += std::to_string(k) + "," + std::to_string(i + 1) + "," + format_double(curves[k][i]) + "\n";
    }
  }
  return out;
}

std::string curve_csv(const std::vector<double>& curve) {
  std::string out = "iteration,mean_return\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out += std::to_string(i + 1) + "," + format_double(curve[i]) + "\n";
  return out;
}

std::string matrix_csv(const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) out += (j ? "," : "") + format_double(row[j]);
    out += "\n";
  }
  return out;
}

std::string probe_csv(const metrics::ProbeTable& probe) {
  std::string out = "step,optimal_action";
  const std::size_t actions = probe.probabilities.empty() ? 0 : probe.probabilities.front().size();
  for (std::size_t a = 0; a < actions; ++a) out += ",p_" + std::to_string(a);
  out += "\n";
  for (std::size_t i = 0; i < probe.probabilities.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(probe.optimal_actions[i]);
    for (double p : probe.probabilities[i]) out += "," + format_double(p);
    out += "\n";
  }
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty CSV file");
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, path.string()));
    if (row.size() != t.header.size()) throw ConfigError(path.string() + ": ragged row");
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_file(const fs::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw ConfigError("write failed for " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace maskrl::cli
