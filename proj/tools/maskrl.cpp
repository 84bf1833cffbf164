#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "maskrl/cli.hpp"
#include "maskrl/errors.hpp"

namespace cli = maskrl::cli;

namespace {

struct RunFlags {
  std::string config;
  std::string seeds;
  std::string variant;
  std::string curriculum;
  std::string out;
  bool serial = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "INI experiment file");
  cmd->add_option("--seed", f.seeds, "Comma-separated seeds, e.g. 0,1,2");
  cmd->add_option("--variant", f.variant, "MASK_RI, MASK_LC, MASK_BLC, EWC_MH, PPO_PLAIN");
  cmd->add_option("--curriculum", f.curriculum, "CT4, CT8, CT12, CT8_MULTI_DEPTH or custom:b2d2:0,1;...");
  cmd->add_option("--out", f.out, "Output root (default: $MASKRL_OUT or ./runs)");
  cmd->add_flag("--serial", f.serial, "Run seeds one after another in this process");
}

cli::ExperimentConfig resolve(const RunFlags& f) {
  cli::ExperimentConfig c = f.config.empty() ? cli::ExperimentConfig{} : cli::load_config(f.config);
  auto set = [&](const std::string& key, const std::string& value) {
    if (value.empty()) return;
    cli::apply_setting(c, key, value);
    c.overrides[key] = value;
  };
  set("run.seeds", f.seeds);
  set("run.variant", f.variant);
  set("run.curriculum", f.curriculum);
  if (!f.out.empty()) {
    c.out_dir = f.out;
  } else if (c.out_dir.empty()) {
    const char* env = std::getenv("MASKRL_OUT");
    c.out_dir = env && *env ? env : "runs";
  }
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong RL with modulating masks on the CT-graph"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "Train one variant over a curriculum for each seed");
  add_run_flags(train, train_flags);

  RunFlags ste_flags;
  auto* ste = app.add_subcommand("ste", "Train single-task experts for every task of a curriculum");
  add_run_flags(ste, ste_flags);

  std::vector<std::string> report_runs, report_ste;
  std::uint64_t report_seed = 0;
  auto* report = app.add_subcommand("report", "Summarise runs: total evaluation, forward transfer, pairwise tests");
  report->add_option("runs", report_runs, "Run directories")->required();
  report->add_option("--ste", report_ste, "STE directories (enables forward transfer)");
  report->add_option("--bootstrap-seed", report_seed, "Seed for the bootstrap intervals");

  std::string analyze_run, analyze_out;
  cli::AnalyzeRequest request;
  auto* analyze = app.add_subcommand("analyze", "Export beta matrices, mask distances and probe tables");
  analyze->add_option("run", analyze_run, "Run directory")->required();
  analyze->add_option("--out", analyze_out, "Output directory (default: <run>/analysis)");
  analyze->add_flag("--beta", request.betas, "Only export beta matrices");
  analyze->add_flag("--distance", request.distances, "Only export mask distances");
  analyze->add_flag("--probe", request.probes, "Only export probe tables");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto c = resolve(train_flags);
      if (c.variant == maskrl::lifelong::Variant::ste) throw maskrl::ConfigError("run.variant: use the ste subcommand");
      return cli::cmd_train(c, train_flags.serial, std::cout);
    }
    if (*ste) return cli::cmd_ste(resolve(ste_flags), ste_flags.serial, std::cout);
    if (*report) {
      std::vector<cli::fs::path> runs(report_runs.begin(), report_runs.end());
      std::vector<cli::fs::path> stes(report_ste.begin(), report_ste.end());
      return cli::cmd_report(runs, stes, std::cout, report_seed);
    }
    if (*analyze) {
      request.all_available = !(request.betas || request.distances || request.probes);
      const cli::fs::path out = analyze_out.empty() ? cli::fs::path(analyze_run) / "analysis" : cli::fs::path(analyze_out);
      return cli::cmd_analyze(analyze_run, request, out, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
