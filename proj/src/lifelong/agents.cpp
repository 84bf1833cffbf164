#include <algorithm>
#include <cctype>
#include <string>

#include "maskrl/errors.hpp"
#include "maskrl/lifelong.hpp"
#include "maskrl/random.hpp"

namespace maskrl::lifelong {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::mask_ri: return "MASK_RI";
    case Variant::mask_lc: return "MASK_LC";
    case Variant::mask_blc: return "MASK_BLC";
    case Variant::ewc_mh: return "EWC_MH";
    case Variant::ppo_plain: return "PPO_PLAIN";
    case Variant::ste: return "STE";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  std::string up = text;
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  for (Variant v : {Variant::mask_ri, Variant::mask_lc, Variant::mask_blc, Variant::ewc_mh, Variant::ppo_plain,
                    Variant::ste}) {
    if (to_string(v) == up) return v;
  }
  throw ConfigError("variant: unknown value '" + text + "'");
}

bool is_mask_variant(Variant variant) {
  return variant == Variant::mask_ri || variant == Variant::mask_lc || variant == Variant::mask_blc;
}

std::uint64_t RunConfig::resolved_backbone_seed() const {
  return backbone_seed ? *backbone_seed : derive_seed(seed, "backbone");
}

void RunConfig::validate() const {
  if (tasks.empty()) throw ConfigError("curriculum: no tasks");
  for (const auto& t : tasks) t.validate();
  ppo.validate();
  arch.validate();
  if (arch.input != ctgraph::kObservationSize) throw ConfigError("arch.input must equal the observation size (144)");
  for (const auto& t : tasks) {
    if (t.config.action_count() != arch.actions) {
      throw ConfigError("arch.actions must equal branch + 1 for every task in the curriculum");
    }
  }
  if (eval.interval < 1) throw ConfigError("eval.interval must be >= 1");
  if (eval.episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  if (ewc.lambda < 0.0) throw ConfigError("ewc.lambda must be >= 0");
  if (!(ewc.alpha >= 0.0 && ewc.alpha <= 1.0)) throw ConfigError("ewc.alpha must lie in [0, 1]");
  if (ewc.fisher_steps < 1) throw ConfigError("ewc.fisher_steps must be >= 1");
}

std::vector<Tensor2> flatten(const nnx::LayerStack& stack) {
  std::vector<Tensor2> out(stack.weights.begin(), stack.weights.end());
  for (const auto& b : stack.biases) out.emplace_back(Eigen::Map<const Tensor2>(b.data(), b.size(), 1));
  return out;
}

std::vector<Tensor2> flatten(const nnx::StackGradients& grads) {
  std::vector<Tensor2> out(grads.weights.begin(), grads.weights.end());
  for (const auto& b : grads.biases) out.emplace_back(Eigen::Map<const Tensor2>(b.data(), b.size(), 1));
  return out;
}

nnx::LayerStack unflatten(std::span<const Tensor2> params, std::size_t layers) {
  if (params.size() != layers && params.size() != 2 * layers) throw DimensionError("parameter list length mismatch");
  nnx::LayerStack s;
  s.weights.assign(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(layers));
  for (std::size_t l = layers; l < params.size(); ++l) {
    s.biases.emplace_back(Eigen::Map<const Vector>(params[l].data(), params[l].size()));
  }
  return s;
}

namespace {

Tensor2 orthogonal(int rows, int cols, double gain, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const int m = std::max(rows, cols), n = std::min(rows, cols);
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, n);
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int j = 0; j < n; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Tensor2 w = rows >= cols ? Tensor2(q) : Tensor2(q.transpose());
  return gain * w;
}

void check_same_shapes(std::span<const Tensor2> a, std::span<const Tensor2> b) {
  if (a.size() != b.size()) throw DimensionError("parameter list length mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
      throw DimensionError("parameter " + std::to_string(i) + " shape mismatch");
    }
  }
}

}  // namespace

nnx::LayerStack init_plain_network(const nnx::Arch& arch, std::uint64_t seed) {
  arch.validate();
  Rng rng(seed);
  nnx::LayerStack s;
  for (std::size_t l = 0; l < arch.layer_count(); ++l) {
    auto [rows, cols] = arch.layer_shape(l);
    const double gain = l < arch.hidden.size() ? 1.0 : 1e-3;
    s.weights.push_back(orthogonal(rows, cols, gain, rng));
    s.biases.push_back(Vector::Zero(rows));
  }
  return s;
}

// MaskAgent -----------------------------------------------------------------

class MaskAgent::Adapter final : public ppo::Trainable {
 public:
  explicit Adapter(masknet::MaskModel& model) : model_(model) {}
  nnx::LayerStack stack() const override { return model_.stack(); }
  std::vector<Tensor2> parameters() const override { return model_.parameters(); }
  void set_parameters(std::span<const Tensor2> params) override { model_.set_parameters(params); }
  std::vector<Tensor2> parameter_gradients(const nnx::StackGradients& grads) const override {
    return model_.parameter_gradients(grads);
  }

 private:
  masknet::MaskModel& model_;
};

MaskAgent::MaskAgent(const RunConfig& config)
    : config_(config), backbone_(config.arch, config.resolved_backbone_seed()) {
  if (!is_mask_variant(config.variant)) throw ConfigError("variant: MaskAgent needs a mask variant");
}

MaskAgent::~MaskAgent() = default;

void MaskAgent::begin_task(int task) {
  auto fresh = masknet::random_scores(config_.arch, config_.mask_mode,
                                      derive_seed(config_.seed, "scores", static_cast<std::uint64_t>(task)),
                                      config_.mask_threshold);
  adapter_.reset();
  if (config_.variant == Variant::mask_ri) {
    model_ = std::make_unique<masknet::MaskModel>(backbone_, std::move(fresh));
  } else {
    const auto scheme = config_.variant == Variant::mask_lc ? masknet::BetaScheme::lc : masknet::BetaScheme::blc;
    auto betas = config_.one_hot_betas ? masknet::one_hot_new_betas(store_.size(), backbone_.layer_count())
                                       : masknet::init_betas(store_.size(), backbone_.layer_count(), scheme);
    model_ = std::make_unique<masknet::MaskModel>(backbone_, store_, std::move(fresh), std::move(betas),
                                                  !config_.one_hot_betas);
  }
  adapter_ = std::make_unique<Adapter>(*model_);
  current_ = task;
}

ppo::Trainable& MaskAgent::trainable() {
  if (!adapter_) throw UsageError("no task in progress");
  return *adapter_;
}

void MaskAgent::end_task(int task) {
  if (!model_ || task != current_) throw UsageError("end_task does not match the task in progress");
  model_->finish(store_, task);
  adapter_.reset();
  model_.reset();
  current_ = -1;
}

nnx::LayerStack MaskAgent::policy(int task) const {
  if (store_.contains_task(task)) return nnx::modulated_stack(backbone_, masknet::gen_mask(store_.by_task(task).scores));
  if (model_ && (task == current_ || config_.eval.unseen == UnseenRule::current)) return model_->stack();
  const auto scores = masknet::random_scores(config_.arch, config_.mask_mode,
                                             derive_seed(config_.seed, "unseen", static_cast<std::uint64_t>(task)),
                                             config_.mask_threshold);
  return nnx::modulated_stack(backbone_, masknet::gen_mask(scores));
}

void MaskAgent::restore(masknet::MaskStore store) {
  if (model_) throw UsageError("cannot restore masks while a task is in progress");
  store_ = std::move(store);
}

// PlainAgent ----------------------------------------------------------------

PlainAgent::PlainAgent(const nnx::Arch& arch, std::uint64_t seed) : net_(init_plain_network(arch, seed)) {}

void PlainAgent::set_parameters(std::span<const Tensor2> params) {
  const auto current = flatten(net_);
  check_same_shapes(current, params);
  net_ = unflatten(params, net_.weights.size());
}

std::unique_ptr<Agent> make_agent(const RunConfig& config) {
  switch (config.variant) {
    case Variant::mask_ri:
    case Variant::mask_lc:
    case Variant::mask_blc:
      return std::make_unique<MaskAgent>(config);
    case Variant::ewc_mh:
      return std::make_unique<EwcAgent>(config.arch, static_cast<int>(config.tasks.size()), config.ewc,
                                        derive_seed(config.seed, "network"));
    case Variant::ppo_plain:
    case Variant::ste:
      return std::make_unique<PlainAgent>(config.arch, derive_seed(config.seed, "network"));
  }
  throw ConfigError("variant: unsupported");
}

}  // namespace maskrl::lifelong
