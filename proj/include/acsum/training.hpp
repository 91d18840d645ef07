#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "acsum/autograd.hpp"
#include "acsum/decoder.hpp"
#include "acsum/model.hpp"

namespace acsum {

struct TrainConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 8;
  std::size_t actor_epochs = 10;
  std::size_t critic_epochs = 10;
  std::size_t joint_epochs = 10;
  double gamma = 1.0;
  std::size_t max_steps = kMaxCommentTokens + 1;
  double clip_norm = 5.0;
  std::uint64_t seed = 1;
  /// Weight of the cross-entropy term mixed into joint training (0 = pure RL).
  double xe_weight = 0.0;
  std::size_t log_every = 50;
  std::size_t checkpoint_every = 0;

  void validate() const;
};

/// Diagonal AdaGrad: acc += g^2; p -= lr * g / (sqrt(acc) + eps).
void adagrad_update(std::span<double> param, std::span<const double> grad, std::span<double> accumulator,
                    double lr, double epsilon = 1e-8);

class AdaGrad {
 public:
  static constexpr double kEpsilon = 1e-8;

  /// Applies one update to every tensor from its grad buffer, then zeroes the
  /// buffer.
  void step(std::span<const NamedTensor> params, double lr);

  std::map<std::string, std::vector<double>>& accumulators() { return acc_; }
  const std::map<std::string, std::vector<double>>& accumulators() const { return acc_; }
  bool operator==(const AdaGrad&) const = default;

 private:
  std::map<std::string, std::vector<double>> acc_;
};

double global_grad_norm(std::span<const NamedTensor> params);
/// Rescales gradients so their global norm is at most max_norm. Returns the
/// norm before clipping.
double clip_grad_norm(std::span<const NamedTensor> params, double max_norm);

/// Sentence-level BLEU-4 of a candidate against one reference, with add-one
/// smoothing of the 2..4-gram precisions. End-of-sequence and padding indices
/// are ignored. An empty candidate scores 0.
double bleu_reward(std::span<const int> candidate, std::span<const int> reference);

/// Sum of discounted rewards from step t on; with a terminal-only reward this
/// is gamma^(T-1-t) * reward for an episode of T steps.
double episode_return(const Episode& episode, std::size_t t, double gamma);
/// Sampled return minus the critic's estimate at step t.
double advantage(const Episode& episode, std::size_t t, double gamma);

/// Sum of -log p(target) under teacher forcing.
Var teacher_forced_nll(Tape& tape, ModelParams& params, const EncodedSample& sample, std::size_t max_steps);

enum class Phase : std::uint32_t { kPretrainActor = 0, kPretrainCritic = 1, kJoint = 2 };
const char* phase_name(Phase phase);
std::optional<Phase> parse_phase(std::string_view name);

struct StepStats {
  double nll_sum = 0.0;
  double tokens = 0.0;
  double reward_sum = 0.0;
  double episodes = 0.0;
  double critic_sq_sum = 0.0;
  double critic_steps = 0.0;

  StepStats& operator+=(const StepStats& o);
  double perplexity() const;
  double mean_reward() const;
  /// Mean of 0.5 * (target - value)^2 over decoding steps.
  double critic_loss() const;
  bool empty() const { return tokens == 0 && episodes == 0; }
  bool operator==(const StepStats&) const = default;
};

using RewardFn = std::function<double(const EncodedSample& sample, std::span<const int> actions)>;

/// Terminal BLEU of the actions against the sample's reference.
double default_reward(const EncodedSample& sample, std::span<const int> actions);

using Batch = std::span<const EncodedSample* const>;

/// Cross-entropy update of the actor (mean per-token NLL over the batch).
StepStats actor_xe_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config);

/// Regresses the value head onto Monte-Carlo returns of sampled rollouts.
/// Actor parameters are not touched. `stream` keys the per-sample random
/// streams.
StepStats critic_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config,
                      std::uint64_t stream, const RewardFn& reward = default_reward);

/// One advantage actor-critic update: sample a rollout per example, update
/// the critic with the squared-error gradient, then the actor with
/// sum_t A_t grad log pi(y_t), A_t held constant.
StepStats joint_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config,
                     std::uint64_t stream, const RewardFn& reward = default_reward);

struct TrainingState {
  std::uint64_t iteration = 0;
  std::array<bool, 3> completed{};
  Phase phase = Phase::kPretrainActor;
  std::uint64_t epoch = 0;
  std::uint64_t batch = 0;
  StepStats window;
  AdaGrad optimizer;

  bool operator==(const TrainingState&) const = default;
};

struct LogRecord {
  std::uint64_t iteration = 0;
  Phase phase = Phase::kPretrainActor;
  std::optional<double> perplexity;
  std::optional<double> mean_reward;
  std::optional<double> critic_loss;

  std::string to_json() const;
};

struct TrainerHooks {
  std::function<void(const LogRecord&)> on_log;
  std::function<void(const TrainingState&)> on_checkpoint;
  std::function<void(Phase, std::uint64_t epoch, const StepStats&)> on_epoch;
  std::function<void(Phase, std::uint64_t iteration, const StepStats&)> on_iteration;
  RewardFn reward = default_reward;
};

/// Drives the three phases over a training set. Progress lives in the
/// TrainingState, so a phase interrupted after any iteration resumes exactly
/// where it stopped.
class Trainer {
 public:
  Trainer(ModelParams& params, TrainingState& state, TrainConfig config, std::span<const EncodedSample> train,
          TrainerHooks hooks = {});

  /// Throws UsageError if the previous phase has not completed.
  void run_phase(Phase phase);
  void run_all();

 private:
  std::size_t epochs_for(Phase phase) const;
  void emit_log(Phase phase);

  ModelParams& params_;
  TrainingState& state_;
  TrainConfig config_;
  std::span<const EncodedSample> train_;
  TrainerHooks hooks_;
};

}  // namespace acsum
