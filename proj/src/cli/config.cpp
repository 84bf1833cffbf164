#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

#include "maskrl/cli.hpp"
#include "maskrl/errors.hpp"

namespace maskrl::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool parse_bool(const std::string& text, const std::string& key) {
  std::string v = text;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + text + "'");
}

int as_int(const std::string& text, const std::string& key) {
  const auto v = parse_int(text, key);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError(key + ": value out of range");
  return static_cast<int>(v);
}

std::uint64_t as_u64(const std::string& text, const std::string& key) {
  std::uint64_t v = 0;
  const std::string t = trim(text);
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc{} || p != t.data() + t.size()) throw ConfigError(key + ": expected an unsigned integer, got '" + text + "'");
  return v;
}

std::string join(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + std::to_string(xs[i]);
  return out;
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
  return std::string(buf, p);
}

double parse_double(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size()) {
    throw ConfigError(what + ": expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view text, const std::string& what) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || p != t.data() + t.size()) {
    throw ConfigError(what + ": expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    seeds.push_back(as_u64(item, "run.seeds"));
  }
  if (seeds.empty()) throw ConfigError("run.seeds: need at least one seed");
  return seeds;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "run.curriculum") c.curriculum = v;
  else if (key == "run.curriculum_seed") c.curriculum_seed = as_u64(v, key);
  else if (key == "run.variant") c.variant = lifelong::parse_variant(v);
  else if (key == "run.seeds") c.seeds = parse_seed_list(v);
  else if (key == "run.out") c.out_dir = v;
  else if (key == "ppo.learning_rate") c.ppo.learning_rate = parse_double(v, key);
  else if (key == "ppo.discount") c.ppo.discount = parse_double(v, key);
  else if (key == "ppo.grad_clip") c.ppo.grad_clip = parse_double(v, key);
  else if (key == "ppo.entropy_coef") c.ppo.entropy_coef = parse_double(v, key);
  else if (key == "ppo.gae_lambda") c.ppo.gae_lambda = parse_double(v, key);
  else if (key == "ppo.rollout_length") c.ppo.rollout_length = as_int(v, key);
  else if (key == "ppo.workers") c.ppo.workers = as_int(v, key);
  else if (key == "ppo.ratio_clip") c.ppo.ratio_clip = parse_double(v, key);
  else if (key == "ppo.epochs") c.ppo.epochs = as_int(v, key);
  else if (key == "ppo.minibatch") c.ppo.minibatch = as_int(v, key);
  else if (key == "ppo.train_steps_per_task") c.ppo.train_steps_per_task = parse_int(v, key);
  else if (key == "ppo.value_coef") c.ppo.value_coef = parse_double(v, key);
  else if (key == "ppo.rms_decay") c.ppo.rms_decay = parse_double(v, key);
  else if (key == "ppo.rms_eps") c.ppo.rms_eps = parse_double(v, key);
  else if (key == "ppo.normalize_advantages") c.ppo.normalize_advantages = parse_bool(v, key);
  else if (key == "eval.interval") c.eval.interval = as_int(v, key);
  else if (key == "eval.episodes") c.eval.episodes = as_int(v, key);
  else if (key == "eval.greedy") c.eval.greedy = parse_bool(v, key);
  else if (key == "eval.unseen") {
    if (v == "random_mask") c.eval.unseen = lifelong::UnseenRule::random_mask;
    else if (v == "current") c.eval.unseen = lifelong::UnseenRule::current;
    else throw ConfigError(key + ": expected random_mask or current, got '" + v + "'");
  }
  else if (key == "ewc.lambda") c.ewc.lambda = parse_double(v, key);
  else if (key == "ewc.alpha") c.ewc.alpha = parse_double(v, key);
  else if (key == "ewc.fisher_steps") c.ewc.fisher_steps = as_int(v, key);
  else if (key == "network.hidden") {
    std::vector<int> h;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) h.push_back(as_int(item, key));
    c.hidden = h;
  }
  else if (key == "mask.mode") {
    try {
      c.mask_mode = masknet::parse_mask_mode(v);
    } catch (const std::exception&) {
      throw ConfigError(key + ": expected binary or continuous, got '" + v + "'");
    }
  }
  else if (key == "mask.threshold") c.mask_threshold = parse_double(v, key);
  else if (key == "mask.one_hot_betas") c.one_hot_betas = parse_bool(v, key);
  else if (key == "mask.backbone_seed") {
    if (v.empty() || v == "auto") c.backbone_seed.reset();
    else c.backbone_seed = as_u64(v, key);
  }
  else throw ConfigError(key + ": unknown setting");
}

std::map<std::string, std::string> settings(const ExperimentConfig& c) {
  std::map<std::string, std::string> s;
  s["run.curriculum"] = c.curriculum;
  s["run.curriculum_seed"] = std::to_string(c.curriculum_seed);
  s["run.variant"] = lifelong::to_string(c.variant);
  std::string seeds;
  for (std::size_t i = 0; i < c.seeds.size(); ++i) seeds += (i ? "," : "") + std::to_string(c.seeds[i]);
  s["run.seeds"] = seeds;
  s["run.out"] = c.out_dir;
  s["ppo.learning_rate"] = format_double(c.ppo.learning_rate);
  s["ppo.discount"] = format_double(c.ppo.discount);
  s["ppo.grad_clip"] = format_double(c.ppo.grad_clip);
  s["ppo.entropy_coef"] = format_double(c.ppo.entropy_coef);
  s["ppo.gae_lambda"] = format_double(c.ppo.gae_lambda);
  s["ppo.rollout_length"] = std::to_string(c.ppo.rollout_length);
  s["ppo.workers"] = std::to_string(c.ppo.workers);
  s["ppo.ratio_clip"] = format_double(c.ppo.ratio_clip);
  s["ppo.epochs"] = std::to_string(c.ppo.epochs);
  s["ppo.minibatch"] = std::to_string(c.ppo.minibatch);
  s["ppo.train_steps_per_task"] = std::to_string(c.ppo.train_steps_per_task);
  s["ppo.value_coef"] = format_double(c.ppo.value_coef);
  s["ppo.rms_decay"] = format_double(c.ppo.rms_decay);
  s["ppo.rms_eps"] = format_double(c.ppo.rms_eps);
  s["ppo.normalize_advantages"] = c.ppo.normalize_advantages ? "true" : "false";
  s["eval.interval"] = std::to_string(c.eval.interval);
  s["eval.episodes"] = std::to_string(c.eval.episodes);
  s["eval.greedy"] = c.eval.greedy ? "true" : "false";
  s["eval.unseen"] = c.eval.unseen == lifelong::UnseenRule::random_mask ? "random_mask" : "current";
  s["ewc.lambda"] = format_double(c.ewc.lambda);
  s["ewc.alpha"] = format_double(c.ewc.alpha);
  s["ewc.fisher_steps"] = std::to_string(c.ewc.fisher_steps);
  s["network.hidden"] = join(c.hidden);
  s["mask.mode"] = masknet::to_string(c.mask_mode);
  s["mask.threshold"] = format_double(c.mask_threshold);
  s["mask.one_hot_betas"] = c.one_hot_betas ? "true" : "false";
  s["mask.backbone_seed"] = c.backbone_seed ? std::to_string(*c.backbone_seed) : "auto";
  return s;
}

std::map<std::string, std::string> parse_ini(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> out;
  std::string section, line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto cut = line.find_first_of("#;");
    std::string t = trim(cut == std::string::npos ? line : line.substr(0, cut));
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(source + ":" + std::to_string(lineno) + ": unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    out[section.empty() ? key : section + "." + key] = trim(std::string_view(t).substr(eq + 1));
  }
  return out;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  ExperimentConfig c;
  const auto defaults = settings(c);
  for (const auto& [k, v] : parse_ini(in, path.string())) {
    apply_setting(c, k, v);
    const auto d = defaults.find(k);
    if (d == defaults.end() || settings(c).at(k) != d->second) c.overrides[k] = v;
  }
  c.validate();
  return c;
}

lifelong::RunConfig ExperimentConfig::run_config(std::uint64_t seed) const {
  lifelong::RunConfig r;
  r.tasks = ctgraph::make_curriculum(curriculum, curriculum_seed);
  r.curriculum = curriculum;
  r.variant = variant;
  r.seed = seed;
  r.ppo = ppo;
  r.eval = eval;
  r.ewc = ewc;
  r.arch.hidden = hidden;
  r.arch.actions = r.tasks.front().config.action_count();
  r.mask_mode = mask_mode;
  r.mask_threshold = mask_threshold;
  r.one_hot_betas = one_hot_betas;
  r.backbone_seed = backbone_seed;
  return r;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("run.seeds: need at least one seed");
  run_config(seeds.front()).validate();
}

}  // namespace maskrl::cli
