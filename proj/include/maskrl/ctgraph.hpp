#pragma once

// Configurable tree graph: a sparse-reward MDP.
//
//   H --0--> W1 --0--> D1 --a--> W2 --0--> D2 ... Dd --a--> E(leaf)
//
// Action 0 proceeds from home and wait states; actions 1..b pick a branch at
// decision states. Anything else moves to the fail state and ends the
// episode. Entering the goal leaf pays 1, every other transition pays 0.
// Each node is observed as a fixed 12×12 pattern in [0, 1].

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace maskrl::ctgraph {

inline constexpr int kImageSide = 12;
inline constexpr int kObservationSize = kImageSide * kImageSide;

using Observation = Eigen::VectorXd;

struct Config {
  int branch = 2;
  int depth = 3;
  std::uint64_t seed = 1;

  void validate() const;
  long leaf_count() const;
  int action_count() const { return branch + 1; }
  /// Actions of the single goal-reaching episode: 2*depth + 1.
  int optimal_length() const { return 2 * depth + 1; }

  bool operator==(const Config&) const = default;
};

enum class NodeKind { home, wait, decision, end, fail };

char kind_letter(NodeKind kind);

struct State {
  NodeKind kind = NodeKind::home;
  /// Branches taken so far (0-based).
  std::vector<int> path;
  /// 1-based level for wait/decision nodes, 0 for home, depth for leaves.
  int level = 0;

  bool operator==(const State&) const = default;
};

struct TaskSpec {
  Config config;
  /// Length-depth branch sequence of the rewarded leaf.
  std::vector<int> goal;
  std::string label;

  long leaf_index() const;
  /// Builds the task whose goal is leaf `leaf` (branch digits, most significant first).
  static TaskSpec for_leaf(const Config& config, long leaf, std::string label = {});
  void validate() const;
};

/// Deterministic per-node images, shared by every environment built from the same config.
class ImageBank {
 public:
  explicit ImageBank(const Config& config);

  const Observation& image(const State& state) const;
  const std::vector<State>& nodes() const { return nodes_; }
  std::size_t node_count() const { return nodes_.size(); }

 private:
  std::size_t index_of(const State& state) const;

  Config config_;
  std::vector<State> nodes_;
  std::vector<Observation> images_;
};

/// Pattern for a node key. Depends only on (seed, kind, path, salt).
Observation node_pattern(std::uint64_t seed, NodeKind kind, const std::vector<int>& path, std::uint64_t salt = 0);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

class Environment {
 public:
  explicit Environment(TaskSpec task);
  Environment(TaskSpec task, std::shared_ptr<const ImageBank> images);

  const TaskSpec& task() const { return task_; }
  const Config& config() const { return task_.config; }
  const State& state() const { return state_; }
  bool done() const { return done_; }
  int action_count() const { return task_.config.action_count(); }

  Observation reset();
  /// Throws UsageError after the episode ended or for an out-of-range action.
  StepResult step(int action);
  Observation observe() const { return observe(state_); }
  Observation observe(const State& state) const;

  /// The unique action sequence that reaches the goal leaf from home.
  std::vector<int> optimal_actions() const;

  /// Pure transition function (ignores episode bookkeeping).
  State transition(const State& from, int action) const;

  std::shared_ptr<const ImageBank> images() const { return images_; }

 private:
  TaskSpec task_;
  std::shared_ptr<const ImageBank> images_;
  State state_;
  bool done_ = false;
};

/// Named curricula: CT4, CT8, CT12, CT8_MULTI_DEPTH, or a custom list
/// "b2d2:0,1;b2d3:0,1" (graphs separated by ';', leaf indices by ',').
std::vector<TaskSpec> make_curriculum(const std::string& name, std::uint64_t seed = 1);

}  // namespace maskrl::ctgraph
