#pragma once

// Experiment plumbing: configuration files, run directories, checkpoints and
// the train / ste / report / analyze subcommands.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "maskrl/lifelong.hpp"
#include "maskrl/masknet.hpp"
#include "maskrl/metrics.hpp"

namespace maskrl::cli {

namespace fs = std::filesystem;

struct ExperimentConfig {
  std::string curriculum = "CT4";
  std::uint64_t curriculum_seed = 1;
  lifelong::Variant variant = lifelong::Variant::mask_ri;
  std::vector<std::uint64_t> seeds{0};
  std::string out_dir;
  ppo::PpoConfig ppo;
  lifelong::EvalConfig eval;
  lifelong::EwcConfig ewc;
  std::vector<int> hidden{200, 200, 200};
  masknet::MaskMode mask_mode = masknet::MaskMode::binary;
  double mask_threshold = 0.0;
  bool one_hot_betas = false;
  std::optional<std::uint64_t> backbone_seed;

  /// Keys set away from their defaults, in the order they were applied.
  std::map<std::string, std::string> overrides;

  lifelong::RunConfig run_config(std::uint64_t seed) const;
  void validate() const;
};

/// Sets one "section.key" entry. Throws ConfigError naming the key on bad input.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);
/// Every setting as "section.key" → text; apply_setting on each reproduces the config.
std::map<std::string, std::string> settings(const ExperimentConfig& config);

/// Reads "[section]" headers and "key = value" lines; '#' and ';' start comments.
std::map<std::string, std::string> parse_ini(std::istream& in, const std::string& source = "config");
ExperimentConfig load_config(const fs::path& path);

// Numbers -------------------------------------------------------------------

/// Shortest decimal that round-trips, independent of the C locale.
std::string format_double(double value);
double parse_double(std::string_view text, const std::string& what);
std::int64_t parse_int(std::string_view text, const std::string& what);
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Checkpoints ---------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct MaskCheckpoint {
  std::uint64_t backbone_seed = 0;
  nnx::Arch arch;
  masknet::MaskMode mode = masknet::MaskMode::binary;
  double threshold = 0.0;
  std::vector<std::string> labels;  // one per stored entry
  masknet::MaskStore store;
};

std::string encode_checkpoint(const MaskCheckpoint& checkpoint);
/// Throws ConfigError on bad magic, unknown version, truncation or shape mismatch.
MaskCheckpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const fs::path& path, const MaskCheckpoint& checkpoint);
MaskCheckpoint load_checkpoint(const fs::path& path);

// CSV -----------------------------------------------------------------------

std::string eval_csv(const metrics::MetricsLedger& ledger);
std::string train_csv(const metrics::MetricsLedger& ledger);
/// "iteration,mean_return" for one task's training curve.
std::string curve_csv(const std::vector<double>& curve);
std::string matrix_csv(const std::vector<std::vector<double>>& rows);
std::string probe_csv(const metrics::ProbeTable& probe);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const fs::path& path);

void write_file(const fs::path& path, std::string_view contents);
std::string read_file(const fs::path& path);

// Commands ------------------------------------------------------------------

fs::path run_directory(const fs::path& out, lifelong::Variant variant, std::uint64_t seed);

/// Runs one (variant, seed) and writes eval.csv, train.csv, masks.ckpt and meta.json. Returns false if aborted.
bool train_one(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir);
/// One STE run per task; writes ste_task_<i>.csv and meta.json.
void ste_one(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir);

/// Runs every seed, in separate processes unless `serial`. Returns a process exit code.
int cmd_train(const ExperimentConfig& config, bool serial, std::ostream& log);
int cmd_ste(const ExperimentConfig& config, bool serial, std::ostream& log);

struct RunSummary {
  fs::path dir;
  std::string variant;
  std::string curriculum;
  std::uint64_t seed = 0;
  double total_eval = 0.0;
  std::vector<double> forward_transfer;  // one per task; empty when no STE reference
};

/// Loads run directories, optionally computing FT against the averaged STE curves.
std::vector<RunSummary> summarize_runs(const std::vector<fs::path>& runs, const std::vector<fs::path>& ste_dirs);
int cmd_report(const std::vector<fs::path>& runs, const std::vector<fs::path>& ste_dirs, std::ostream& out,
               std::uint64_t bootstrap_seed = 0);

struct AnalyzeRequest {
  bool betas = false;
  bool distances = false;
  bool probes = false;
  bool all_available = true;  // ignore the flags above and emit whatever the variant supports
};
int cmd_analyze(const fs::path& run, const AnalyzeRequest& request, const fs::path& out, std::ostream& log);

/// Rebuilds the run configuration recorded in a run's meta.json.
ExperimentConfig config_from_meta(const fs::path& run, std::uint64_t* seed = nullptr);

}  // namespace maskrl::cli
