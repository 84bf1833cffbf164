#include <set>
#include <string>

#include "maskrl/ctgraph.hpp"
#include "maskrl/errors.hpp"
#include "maskrl/hash.hpp"
#include "maskrl/random.hpp"

namespace maskrl::ctgraph {

void Config::validate() const {
  if (branch < 2) throw ConfigError("ctgraph.branch must be >= 2 (got " + std::to_string(branch) + ")");
  if (depth < 1) throw ConfigError("ctgraph.depth must be >= 1 (got " + std::to_string(depth) + ")");
  if (depth > 20) throw ConfigError("ctgraph.depth must be <= 20");
}

long Config::leaf_count() const {
  long n = 1;
  for (int i = 0; i < depth; ++i) n *= branch;
  return n;
}

char kind_letter(NodeKind kind) {
  switch (kind) {
    case NodeKind::home: return 'H';
    case NodeKind::wait: return 'W';
    case NodeKind::decision: return 'D';
    case NodeKind::end: return 'E';
    case NodeKind::fail: return 'F';
  }
  return '?';
}

long TaskSpec::leaf_index() const {
  long idx = 0;
  for (int b : goal) idx = idx * config.branch + b;
  return idx;
}

TaskSpec TaskSpec::for_leaf(const Config& config, long leaf, std::string label) {
  config.validate();
  if (leaf < 0 || leaf >= config.leaf_count()) {
    throw ConfigError("goal leaf " + std::to_string(leaf) + " outside [0, " + std::to_string(config.leaf_count()) +
                      ")");
  }
  TaskSpec t;
  t.config = config;
  t.goal.assign(static_cast<std::size_t>(config.depth), 0);
  for (int i = config.depth - 1; i >= 0; --i) {
    t.goal[static_cast<std::size_t>(i)] = static_cast<int>(leaf % config.branch);
    leaf /= config.branch;
  }
  t.label = label.empty() ? "b" + std::to_string(config.branch) + "d" + std::to_string(config.depth) + "_leaf" +
                                std::to_string(t.leaf_index())
                          : std::move(label);
  return t;
}

void TaskSpec::validate() const {
  config.validate();
  if (static_cast<int>(goal.size()) != config.depth) throw ConfigError("goal length must equal graph depth");
  for (int b : goal) {
    if (b < 0 || b >= config.branch) throw ConfigError("goal branch index out of range");
  }
}

Observation node_pattern(std::uint64_t seed, NodeKind kind, const std::vector<int>& path, std::uint64_t salt) {
  Fnv1a key;
  key.update_u64(static_cast<std::uint64_t>(kind_letter(kind)));
  key.update_u64(path.size());
  for (int b : path) key.update_u64(static_cast<std::uint64_t>(b));
  key.update_u64(salt);
  Rng rng(derive_seed(seed, "ctgraph.image", key.digest()));
  std::bernoulli_distribution pixel(0.5);
  Observation img(kObservationSize);
  for (int i = 0; i < kObservationSize; ++i) img(i) = pixel(rng) ? 1.0 : 0.0;
  return img;
}

namespace {

std::string node_key(const State& s) {
  std::string k(1, kind_letter(s.kind));
  k += std::to_string(s.level);
  for (int b : s.path) {
    k += ',';
    k += std::to_string(b);
  }
  return k;
}

void enumerate_prefixes(int branch, int length, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == length) {
    out.push_back(cur);
    return;
  }
  for (int b = 0; b < branch; ++b) {
    cur.push_back(b);
    enumerate_prefixes(branch, length, cur, out);
    cur.pop_back();
  }
}

}  // namespace

ImageBank::ImageBank(const Config& config) : config_(config) {
  config_.validate();
  nodes_.push_back(State{NodeKind::home, {}, 0});
  for (int level = 1; level <= config_.depth; ++level) {
    std::vector<std::vector<int>> prefixes;
    std::vector<int> cur;
    enumerate_prefixes(config_.branch, level - 1, cur, prefixes);
    for (const auto& p : prefixes) {
      nodes_.push_back(State{NodeKind::wait, p, level});
      nodes_.push_back(State{NodeKind::decision, p, level});
    }
  }
  {
    std::vector<std::vector<int>> leaves;
    std::vector<int> cur;
    enumerate_prefixes(config_.branch, config_.depth, cur, leaves);
    for (const auto& p : leaves) nodes_.push_back(State{NodeKind::end, p, config_.depth});
  }
  nodes_.push_back(State{NodeKind::fail, {}, 0});

  std::set<std::vector<double>> seen;
  images_.reserve(nodes_.size());
  for (const auto& n : nodes_) {
    for (std::uint64_t salt = 0;; ++salt) {
      Observation img = node_pattern(config_.seed, n.kind, n.path, salt);
      std::vector<double> raw(img.data(), img.data() + img.size());
      if (seen.insert(std::move(raw)).second) {
        images_.push_back(std::move(img));
        break;
      }
    }
  }
}

std::size_t ImageBank::index_of(const State& s) const {
  // Nodes are laid out level by level; compute the slot directly.
  switch (s.kind) {
    case NodeKind::home: return 0;
    case NodeKind::fail: return nodes_.size() - 1;
    case NodeKind::wait:
    case NodeKind::decision: {
      std::size_t offset = 1;
      std::size_t width = 1;
      for (int level = 1; level < s.level; ++level) {
        offset += 2 * width;
        width *= static_cast<std::size_t>(config_.branch);
      }
      std::size_t prefix = 0;
      for (int b : s.path) prefix = prefix * static_cast<std::size_t>(config_.branch) + static_cast<std::size_t>(b);
      return offset + 2 * prefix + (s.kind == NodeKind::decision ? 1 : 0);
    }
    case NodeKind::end: {
      std::size_t offset = 1;
      std::size_t width = 1;
      for (int level = 1; level <= config_.depth; ++level) {
        offset += 2 * width;
        width *= static_cast<std::size_t>(config_.branch);
      }
      std::size_t leaf = 0;
      for (int b : s.path) leaf = leaf * static_cast<std::size_t>(config_.branch) + static_cast<std::size_t>(b);
      return offset + leaf;
    }
  }
  throw UsageError("invalid node");
}

const Observation& ImageBank::image(const State& state) const {
  const std::size_t i = index_of(state);
  if (i >= nodes_.size() || !(nodes_[i] == state)) throw UsageError("state " + node_key(state) + " not in graph");
  return images_[i];
}

Environment::Environment(TaskSpec task) : Environment(task, std::make_shared<const ImageBank>(task.config)) {}

Environment::Environment(TaskSpec task, std::shared_ptr<const ImageBank> images)
    : task_(std::move(task)), images_(std::move(images)) {
  task_.validate();
  if (!images_) images_ = std::make_shared<const ImageBank>(task_.config);
}

Observation Environment::reset() {
  state_ = State{NodeKind::home, {}, 0};
  done_ = false;
  return observe(state_);
}

State Environment::transition(const State& from, int action) const {
  const Config& c = task_.config;
  const State fail{NodeKind::fail, {}, 0};
  switch (from.kind) {
    case NodeKind::home:
      return action == 0 ? State{NodeKind::wait, {}, 1} : fail;
    case NodeKind::wait:
      return action == 0 ? State{NodeKind::decision, from.path, from.level} : fail;
    case NodeKind::decision: {
      if (action < 1 || action > c.branch) return fail;
      State next;
      next.path = from.path;
      next.path.push_back(action - 1);
      if (from.level < c.depth) {
        next.kind = NodeKind::wait;
        next.level = from.level + 1;
      } else {
        next.kind = NodeKind::end;
        next.level = c.depth;
      }
      return next;
    }
    case NodeKind::end:
    case NodeKind::fail:
      return from;
  }
  return fail;
}

StepResult Environment::step(int action) {
  if (done_) throw UsageError("step() called after the episode ended; call reset()");
  if (action < 0 || action >= action_count()) {
    throw UsageError("action " + std::to_string(action) + " outside [0, " + std::to_string(action_count()) + ")");
  }
  state_ = transition(state_, action);
  StepResult r;
  if (state_.kind == NodeKind::end) {
    done_ = true;
    r.reward = state_.path == task_.goal ? 1.0 : 0.0;
  } else if (state_.kind == NodeKind::fail) {
    done_ = true;
  }
  r.done = done_;
  r.observation = observe(state_);
  return r;
}

Observation Environment::observe(const State& state) const { return images_->image(state); }

std::vector<int> Environment::optimal_actions() const {
  std::vector<int> actions{0};
  for (int b : task_.goal) {
    actions.push_back(0);
    actions.push_back(b + 1);
  }
  return actions;
}

}  // namespace maskrl::ctgraph
