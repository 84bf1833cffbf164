#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "maskrl/cli.hpp"
#include "maskrl/errors.hpp"
#include "maskrl/hash.hpp"

namespace maskrl::cli {

using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + dir.string());
}

std::string content_hash(std::string_view bytes) {
  Fnv1a h;
  h.update(bytes);
  return hex_digest(h.digest());
}

/// Writes a file and records its hash under `files`.
void emit(const fs::path& dir, const std::string& name, const std::string& contents, json& files) {
  write_file(dir / name, contents);
  files[name] = content_hash(contents);
}

json base_meta(const ExperimentConfig& config, std::uint64_t seed) {
  json meta;
  meta["format"] = 1;
  meta["variant"] = lifelong::to_string(config.variant);
  meta["curriculum"] = config.curriculum;
  meta["seed"] = seed;
  meta["settings"] = settings(config);
  meta["overrides"] = config.overrides;
  return meta;
}

template <typename Fn>
int run_seeds(const ExperimentConfig& config, bool serial, std::ostream& log, Fn&& body) {
  if (serial || config.seeds.size() == 1) {
    int code = 0;
    for (auto seed : config.seeds) {
      if (!body(seed)) code = 1;
    }
    return code;
  }
  std::cout.flush();
  std::cerr.flush();
  log.flush();
  std::vector<pid_t> children;
  for (auto seed : config.seeds) {
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("fork failed");
    if (pid == 0) {
      int code = 1;
      try {
        code = body(seed) ? 0 : 1;
      } catch (const std::exception& e) {
        std::cerr << "seed " << seed << ": " << e.what() << "\n";
      }
      std::cout.flush();
      std::cerr.flush();
      _exit(code);
    }
    children.push_back(pid);
  }
  int code = 0;
  for (pid_t pid : children) {
    int status = 0;
    waitpid(pid, &status, 0);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) code = 1;
  }
  return code;
}

}  // namespace

fs::path run_directory(const fs::path& out, lifelong::Variant variant, std::uint64_t seed) {
  return out / (lifelong::to_string(variant) + "_seed" + std::to_string(seed));
}

bool train_one(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir) {
  ensure_dir(dir);
  const auto rc = config.run_config(seed);
  const auto result = lifelong::run_lifelong(rc);

  json meta = base_meta(config, seed);
  json files = json::object();
  emit(dir, "eval.csv", eval_csv(result.ledger), files);
  emit(dir, "train.csv", train_csv(result.ledger), files);
  if (lifelong::is_mask_variant(config.variant)) {
    MaskCheckpoint ckpt;
    ckpt.backbone_seed = rc.resolved_backbone_seed();
    ckpt.arch = rc.arch;
    ckpt.mode = rc.mask_mode;
    ckpt.threshold = rc.mask_threshold;
    ckpt.store = result.store;
    for (const auto& e : result.store.entries()) ckpt.labels.push_back(rc.tasks.at(static_cast<std::size_t>(e.task_id)).label);
    emit(dir, "masks.ckpt", encode_checkpoint(ckpt), files);
    meta["backbone_seed"] = ckpt.backbone_seed;
    meta["backbone_hash"] = hex_digest(result.backbone_hash);
  }
  meta["tasks"] = result.ledger.info.task_labels;
  meta["total_eval_auc"] = result.ledger.evaluations().empty() ? 0.0 : metrics::total_eval_auc(result.ledger);
  meta["aborted"] = result.aborted;
  meta["error"] = result.error;
  meta["files"] = files;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  return !result.aborted;
}

void ste_one(const ExperimentConfig& config, std::uint64_t seed, const fs::path& dir) {
  ensure_dir(dir);
  auto rc = config.run_config(seed);
  ExperimentConfig ste = config;
  ste.variant = lifelong::Variant::ste;
  json meta = base_meta(ste, seed);
  json files = json::object();
  json aborted = json::array();
  for (std::size_t k = 0; k < rc.tasks.size(); ++k) {
    const auto result = lifelong::run_ste(rc, static_cast<int>(k));
    emit(dir, "ste_task_" + std::to_string(k) + ".csv", curve_csv(result.ledger.training_curve(0)), files);
    if (result.aborted) aborted.push_back(k);
  }
  meta["aborted_tasks"] = aborted;
  meta["files"] = files;
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

int cmd_train(const ExperimentConfig& config, bool serial, std::ostream& log) {
  config.validate();
  const fs::path out = config.out_dir;
  ensure_dir(out);
  return run_seeds(config, serial, log, [&](std::uint64_t seed) {
    const auto dir = run_directory(out, config.variant, seed);
    const bool ok = train_one(config, seed, dir);
    log << (ok ? "finished " : "aborted ") << dir.string() << "\n";
    return ok;
  });
}

int cmd_ste(const ExperimentConfig& config, bool serial, std::ostream& log) {
  config.validate();
  const fs::path out = config.out_dir;
  ensure_dir(out);
  return run_seeds(config, serial, log, [&](std::uint64_t seed) {
    const auto dir = run_directory(out, lifelong::Variant::ste, seed);
    ste_one(config, seed, dir);
    log << "finished " << dir.string() << "\n";
    return true;
  });
}

ExperimentConfig config_from_meta(const fs::path& run, std::uint64_t* seed) {
  json meta;
  try {
    meta = json::parse(read_file(run / "meta.json"));
  } catch (const json::exception& e) {
    throw ConfigError((run / "meta.json").string() + ": " + e.what());
  }
  ExperimentConfig c;
  for (const auto& [k, v] : meta.at("settings").items()) apply_setting(c, k, v.get<std::string>());
  if (meta.contains("overrides")) {
    for (const auto& [k, v] : meta.at("overrides").items()) c.overrides[k] = v.get<std::string>();
  }
  if (seed) *seed = meta.at("seed").get<std::uint64_t>();
  return c;
}

std::vector<RunSummary> summarize_runs(const std::vector<fs::path>& runs, const std::vector<fs::path>& ste_dirs) {
  if (runs.empty()) throw ConfigError("report needs at least one run directory");
  std::vector<RunSummary> out;
  for (const auto& dir : runs) {
    RunSummary s;
    s.dir = dir;
    const auto c = config_from_meta(dir, &s.seed);
    s.variant = lifelong::to_string(c.variant);
    s.curriculum = c.curriculum;
    const auto eval = read_csv(dir / "eval.csv");
    if (eval.rows.empty()) throw ConfigError((dir / "eval.csv").string() + ": no evaluation records");
    for (const auto& row : eval.rows) s.total_eval += row.back();
    out.push_back(std::move(s));
  }
  for (const auto& s : out) {
    if (s.curriculum != out.front().curriculum) {
      throw ConfigError("mixed curricula in one report: " + out.front().curriculum + " and " + s.curriculum);
    }
  }
  if (ste_dirs.empty()) return out;

  const std::size_t n_tasks = config_from_meta(runs.front()).run_config(0).tasks.size();
  std::vector<std::vector<double>> reference(n_tasks);
  for (std::size_t k = 0; k < n_tasks; ++k) {
    for (const auto& sd : ste_dirs) {
      const fs::path file = sd / ("ste_task_" + std::to_string(k) + ".csv");
      if (!fs::exists(file)) throw ConfigError("missing STE reference file " + file.string());
      const auto t = read_csv(file);
      if (reference[k].empty()) reference[k].assign(t.rows.size(), 0.0);
      if (reference[k].size() != t.rows.size()) throw DimensionError(file.string() + ": curve length differs across seeds");
      for (std::size_t i = 0; i < t.rows.size(); ++i) reference[k][i] += t.rows[i][1] / static_cast<double>(ste_dirs.size());
    }
  }
  for (auto& s : out) {
    const auto train = read_csv(s.dir / "train.csv");
    std::vector<std::vector<double>> curves(n_tasks);
    for (const auto& row : train.rows) curves.at(static_cast<std::size_t>(row[0])).push_back(row[2]);
    for (std::size_t k = 0; k < n_tasks; ++k) {
      const auto ft = metrics::forward_transfer(curves[k], reference[k]);
      s.forward_transfer.push_back(ft ? *ft : std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

namespace {

std::string fmt(double v, int precision = 4) {
  if (std::isnan(v)) return "n/a";
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss << std::fixed << std::setprecision(precision) << v;
  return ss.str();
}

struct Group {
  std::string variant;
  std::vector<double> totals;
  std::vector<double> fts;
};

void pairwise(std::ostream& out, const std::string& metric, const Group& a, const std::vector<double>& xa,
              const Group& b, const std::vector<double>& xb, std::uint64_t seed) {
  out << metric << "  " << a.variant << " vs " << b.variant << "  ";
  if (xa.size() < 2 || xb.size() < 2) {
    out << "n/a (need >= 2 samples per method)\n";
    return;
  }
  const auto w = metrics::welch_ttest(xa, xb);
  const auto ci = metrics::bootstrap_ci(xa, xb, 10000, 0.95, seed);
  out << "diff " << fmt(ci.estimate) << "  t " << fmt(w.t) << "  dof " << fmt(w.dof, 2) << "  p " << fmt(w.p)
      << "  bci95 [" << fmt(ci.lower) << ", " << fmt(ci.upper) << "]"
      << "  welch " << (w.p < 0.05 ? "significant" : "not significant") << "  bci "
      << (ci.excludes_zero() ? "excludes 0" : "includes 0") << "\n";
}

}  // namespace

int cmd_report(const std::vector<fs::path>& runs, const std::vector<fs::path>& ste_dirs, std::ostream& out,
               std::uint64_t bootstrap_seed) {
  const auto summaries = summarize_runs(runs, ste_dirs);
  std::vector<Group> groups;
  for (const auto& s : summaries) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.variant == s.variant; });
    if (it == groups.end()) {
      groups.push_back(Group{s.variant, {}, {}});
      it = groups.end() - 1;
    }
    it->totals.push_back(s.total_eval);
    for (double ft : s.forward_transfer) {
      if (!std::isnan(ft)) it->fts.push_back(ft);
    }
  }

  out << "curriculum " << summaries.front().curriculum << "\n\n";
  out << "method        runs  total_eval mean ± ci95        ft mean ± ci95 (n)\n";
  for (const auto& g : groups) {
    const auto t = metrics::mean_ci(g.totals);
    out << std::left << std::setw(14) << g.variant << std::setw(6) << g.totals.size() << std::setw(28)
        << (fmt(t.mean, 2) + " ± " + fmt(t.half_width, 2));
    if (!g.fts.empty()) {
      const auto f = metrics::mean_ci(g.fts);
      out << fmt(f.mean) << " ± " << fmt(f.half_width) << " (" << g.fts.size() << ")";
    } else {
      out << "n/a";
    }
    out << "\n";
  }
  out << "\n";
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      pairwise(out, "total_eval", groups[i], groups[i].totals, groups[j], groups[j].totals, bootstrap_seed);
      if (!groups[i].fts.empty() && !groups[j].fts.empty()) {
        pairwise(out, "ft", groups[i], groups[i].fts, groups[j], groups[j].fts, bootstrap_seed);
      }
    }
  }
  return 0;
}

int cmd_analyze(const fs::path& run, const AnalyzeRequest& request, const fs::path& out, std::ostream& log) {
  std::uint64_t seed = 0;
  const auto config = config_from_meta(run, &seed);
  if (!lifelong::is_mask_variant(config.variant)) {
    throw ConfigError("analysis unavailable for variant " + lifelong::to_string(config.variant) +
                      ": the run has no mask checkpoint");
  }
  const fs::path ckpt_path = run / "masks.ckpt";
  if (!fs::exists(ckpt_path)) throw ConfigError("missing checkpoint " + ckpt_path.string());
  const auto ckpt = load_checkpoint(ckpt_path);
  const bool combines = config.variant != lifelong::Variant::mask_ri;
  const bool want_betas = request.all_available ? combines : request.betas;
  const bool want_dist = request.all_available || request.distances;
  const bool want_probes = request.all_available || request.probes;
  if (want_betas && !combines) {
    throw ConfigError("beta export unavailable for variant " + lifelong::to_string(config.variant) +
                      ": masks were not trained as combinations");
  }
  ensure_dir(out);
  const std::size_t layers = ckpt.arch.layer_count();
  if (want_betas) {
    for (std::size_t l = 0; l < layers; ++l) {
      write_file(out / ("beta_layer_" + std::to_string(l) + ".csv"), matrix_csv(metrics::beta_matrix(ckpt.store, l)));
    }
    log << "wrote beta matrices for " << layers << " layers\n";
  }
  if (want_dist) {
    for (std::size_t l = 0; l < layers; ++l) {
      write_file(out / ("distance_layer_" + std::to_string(l) + ".csv"),
                 matrix_csv(metrics::distance_matrix(ckpt.store, l)));
    }
    log << "wrote distance matrices for " << layers << " layers\n";
  }
  if (want_probes) {
    auto rc = config.run_config(seed);
    rc.backbone_seed = ckpt.backbone_seed;
    for (const auto& e : ckpt.store.entries()) {
      const auto probe = lifelong::probe_from_store(rc, ckpt.store, e.task_id);
      write_file(out / ("probe_task_" + std::to_string(e.task_id) + ".csv"), probe_csv(probe));
    }
    log << "wrote probe tables for " << ckpt.store.size() << " tasks\n";
  }
  return 0;
}

}  // namespace maskrl::cli
