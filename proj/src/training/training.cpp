#include "acsum/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "acsum/error.hpp"

namespace acsum {

namespace {

std::vector<int> strip_specials(std::span<const int> ids) {
  std::vector<int> out;
  for (int id : ids) {
    if (id == Vocab::kEos) break;
    if (id == Vocab::kPad || id == Vocab::kStart) continue;
    out.push_back(id);
  }
  return out;
}

using Ngram = std::vector<int>;

std::map<Ngram, int> ngram_counts(const std::vector<int>& seq, std::size_t n) {
  std::map<Ngram, int> counts;
  for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                                                                   seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

Var sum_of(std::span<const Var> scalars) { return sum(concat(scalars)); }

void check_batch(Batch batch) {
  if (batch.empty()) throw UsageError("empty training batch");
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw UsageError("learning rate must be positive");
  if (batch_size == 0) throw UsageError("batch size must be positive");
  if (!(gamma >= 0 && gamma <= 1)) throw UsageError("gamma must lie in [0, 1]");
  if (max_steps == 0) throw UsageError("max decode steps must be positive");
  if (!(clip_norm > 0)) throw UsageError("gradient clip norm must be positive");
  if (!(xe_weight >= 0 && xe_weight <= 1)) throw UsageError("xe_weight must lie in [0, 1]");
  if (log_every == 0) throw UsageError("log interval must be positive");
}

void adagrad_update(std::span<double> param, std::span<const double> grad, std::span<double> accumulator,
                    double lr, double epsilon) {
  if (param.size() != grad.size() || param.size() != accumulator.size()) {
    throw DimensionError("adagrad_update: parameter, gradient and accumulator sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    double g = grad[i];
    if (g == 0.0) continue;
    accumulator[i] += g * g;
    param[i] -= lr * g / (std::sqrt(accumulator[i]) + epsilon);
  }
}

void AdaGrad::step(std::span<const NamedTensor> params, double lr) {
  for (const auto& [name, t] : params) {
    auto& acc = acc_[name];
    if (acc.empty()) acc.assign(t->size(), 0.0);
    adagrad_update(t->data(), t->grad(), acc, lr, kEpsilon);
    if (!t->all_finite()) throw NumericError("parameter '" + name + "' diverged");
    t->zero_grad();
  }
}

double global_grad_norm(std::span<const NamedTensor> params) {
  double sq = 0.0;
  for (const auto& nt : params)
    for (double g : nt.tensor->grad()) sq += g * g;
  return std::sqrt(sq);
}

double clip_grad_norm(std::span<const NamedTensor> params, double max_norm) {
  double norm = global_grad_norm(params);
  if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
  if (norm > max_norm) {
    double k = max_norm / norm;
    for (const auto& nt : params)
      for (double& g : nt.tensor->grad()) g *= k;
  }
  return norm;
}

double bleu_reward(std::span<const int> candidate, std::span<const int> reference) {
  auto cand = strip_specials(candidate);
  auto ref = strip_specials(reference);
  if (ref.empty()) throw DataError("reward: empty reference");
  if (cand.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto c = ngram_counts(cand, n);
    auto r = ngram_counts(ref, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [g, k] : c) {
      total += k;
      auto it = r.find(g);
      if (it != r.end()) matched += std::min(k, it->second);
    }
    if (n == 1) {
      if (matched == 0.0) return 0.0;
      log_sum += std::log(matched / total);
    } else {
      log_sum += std::log((matched + 1.0) / (total + 1.0));
    }
  }
  double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / 4.0);
}

double episode_return(const Episode& episode, std::size_t t, double gamma) {
  if (t >= episode.size()) throw UsageError("episode_return: step out of range");
  std::size_t remaining = episode.size() - 1 - t;
  return std::pow(gamma, static_cast<double>(remaining)) * episode.reward;
}

double advantage(const Episode& episode, std::size_t t, double gamma) {
  return episode_return(episode, t, gamma) - episode.values.at(t);
}

Var teacher_forced_nll(Tape& tape, ModelParams& params, const EncodedSample& sample, std::size_t max_steps) {
  EncodedCode enc = encode(tape, params, sample);
  RolloutOptions opts;
  opts.mode = DecodeMode::kTeacherForced;
  opts.reference = sample.target;
  opts.max_steps = max_steps;
  Rollout r = rollout(tape, params, enc, opts);
  return scale(sum_of(r.logprobs), -1.0);
}

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::kPretrainActor: return "pretrain-actor";
    case Phase::kPretrainCritic: return "pretrain-critic";
    case Phase::kJoint: return "joint";
  }
  return "?";
}

std::optional<Phase> parse_phase(std::string_view name) {
  for (auto p : {Phase::kPretrainActor, Phase::kPretrainCritic, Phase::kJoint}) {
    if (name == phase_name(p)) return p;
  }
  return std::nullopt;
}

StepStats& StepStats::operator+=(const StepStats& o) {
  nll_sum += o.nll_sum;
  tokens += o.tokens;
  reward_sum += o.reward_sum;
  episodes += o.episodes;
  critic_sq_sum += o.critic_sq_sum;
  critic_steps += o.critic_steps;
  return *this;
}

double StepStats::perplexity() const { return tokens > 0 ? std::exp(nll_sum / tokens) : 0.0; }
double StepStats::mean_reward() const { return episodes > 0 ? reward_sum / episodes : 0.0; }
double StepStats::critic_loss() const { return critic_steps > 0 ? critic_sq_sum / critic_steps : 0.0; }

double default_reward(const EncodedSample& sample, std::span<const int> actions) {
  return bleu_reward(actions, sample.target);
}

StepStats actor_xe_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config) {
  check_batch(batch);
  double tokens = 0.0;
  for (const auto* s : batch) tokens += static_cast<double>(std::min(s->target.size(), config.max_steps));
  StepStats stats;
  for (const auto* s : batch) {
    Tape tape;
    Var nll = teacher_forced_nll(tape, params, *s, config.max_steps);
    stats.nll_sum += nll.item();
    tape.backward(scale(nll, 1.0 / tokens));
  }
  stats.tokens = tokens;
  auto actor = params.actor();
  clip_grad_norm(actor, config.clip_norm);
  optimizer.step(actor, config.learning_rate);
  params.zero_grad();
  return stats;
}

namespace {

// Shared body of critic and joint updates. `train_actor` adds the policy
// gradient (and optional cross-entropy) terms.
StepStats actor_critic_pass(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config,
                            Phase phase, std::uint64_t stream, const RewardFn& reward, bool train_actor) {
  check_batch(batch);
  StepStats stats;
  double inv_batch = 1.0 / static_cast<double>(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const EncodedSample& sample = *batch[k];
    Rng rng = Rng::derive(config.seed, {static_cast<std::uint64_t>(phase), stream, k});
    Tape tape;
    EncodedCode enc = encode(tape, params, sample);
    RolloutOptions opts;
    opts.mode = DecodeMode::kSample;
    opts.max_steps = config.max_steps;
    opts.rng = &rng;
    Rollout r = rollout(tape, params, enc, opts);
    r.episode.reward = reward(sample, r.episode.actions);
    if (!std::isfinite(r.episode.reward)) throw NumericError("reward is not finite");

    std::vector<Var> terms;
    for (std::size_t t = 0; t < r.episode.size(); ++t) {
      double target = episode_return(r.episode, t, config.gamma);
      double err = target - r.episode.values[t];
      stats.critic_sq_sum += 0.5 * err * err;
      stats.critic_steps += 1.0;
      // 0.5 (target - V)^2, gradient (V - target) dV.
      Var diff = r.values[t] - tape.constant(Tensor::scalar(target));
      terms.push_back(scale(diff * diff, 0.5 * inv_batch));
      if (train_actor) {
        double a = err;  // A_t = Q_hat - V, constant w.r.t. theta
        terms.push_back(scale(r.logprobs[t], -(1.0 - config.xe_weight) * a * inv_batch));
      }
    }
    if (train_actor && config.xe_weight > 0.0) {
      Var nll = teacher_forced_nll(tape, params, sample, config.max_steps);
      double len = static_cast<double>(std::min(sample.target.size(), config.max_steps));
      terms.push_back(scale(nll, config.xe_weight * inv_batch / len));
      stats.nll_sum += nll.item();
      stats.tokens += len;
    }
    stats.reward_sum += r.episode.reward;
    stats.episodes += 1.0;
    tape.backward(sum_of(terms));
  }
  auto critic = params.critic();
  clip_grad_norm(critic, config.clip_norm);
  optimizer.step(critic, config.learning_rate);
  if (train_actor) {
    auto actor = params.actor();
    clip_grad_norm(actor, config.clip_norm);
    optimizer.step(actor, config.learning_rate);
  }
  params.zero_grad();
  return stats;
}

}  // namespace

StepStats critic_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config,
                      std::uint64_t stream, const RewardFn& reward) {
  return actor_critic_pass(params, optimizer, batch, config, Phase::kPretrainCritic, stream, reward, false);
}

StepStats joint_step(ModelParams& params, AdaGrad& optimizer, Batch batch, const TrainConfig& config,
                     std::uint64_t stream, const RewardFn& reward) {
  return actor_critic_pass(params, optimizer, batch, config, Phase::kJoint, stream, reward, true);
}

std::string LogRecord::to_json() const {
  nlohmann::ordered_json j;
  j["iteration"] = iteration;
  j["phase"] = phase_name(phase);
  if (perplexity) j["perplexity"] = *perplexity;
  if (mean_reward) j["mean_reward"] = *mean_reward;
  if (critic_loss) j["critic_loss"] = *critic_loss;
  return j.dump();
}

Trainer::Trainer(ModelParams& params, TrainingState& state, TrainConfig config, std::span<const EncodedSample> train,
                 TrainerHooks hooks)
    : params_(params), state_(state), config_(config), train_(train), hooks_(std::move(hooks)) {
  config_.validate();
  if (train_.empty()) throw DataError("empty training set");
  if (!hooks_.reward) hooks_.reward = default_reward;
}

std::size_t Trainer::epochs_for(Phase phase) const {
  switch (phase) {
    case Phase::kPretrainActor: return config_.actor_epochs;
    case Phase::kPretrainCritic: return config_.critic_epochs;
    case Phase::kJoint: return config_.joint_epochs;
  }
  return 0;
}

void Trainer::emit_log(Phase phase) {
  if (state_.window.empty()) return;
  LogRecord rec;
  rec.iteration = state_.iteration;
  rec.phase = phase;
  if (state_.window.tokens > 0) rec.perplexity = state_.window.perplexity();
  if (state_.window.episodes > 0) {
    rec.mean_reward = state_.window.mean_reward();
    rec.critic_loss = state_.window.critic_loss();
  }
  if (hooks_.on_log) hooks_.on_log(rec);
  state_.window = StepStats{};
}

void Trainer::run_phase(Phase phase) {
  auto index = static_cast<std::size_t>(phase);
  if (state_.completed[index]) return;
  if (index > 0 && !state_.completed[index - 1]) {
    throw UsageError(std::string("phase '") + phase_name(phase) + "' requires a completed '" +
                     phase_name(static_cast<Phase>(index - 1)) + "' phase");
  }
  if (state_.phase != phase) {
    state_.phase = phase;
    state_.epoch = 0;
    state_.batch = 0;
    state_.window = StepStats{};
  }
  const std::size_t n = train_.size();
  const std::size_t batches = (n + config_.batch_size - 1) / config_.batch_size;
  const std::size_t epochs = epochs_for(phase);
  while (state_.epoch < epochs) {
    std::vector<const EncodedSample*> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = &train_[i];
    Rng rng = Rng::derive(config_.seed, {100 + index, state_.epoch});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    StepStats epoch_stats;
    while (state_.batch < batches) {
      std::size_t first = state_.batch * config_.batch_size;
      std::size_t last = std::min(n, first + config_.batch_size);
      Batch batch(order.data() + first, last - first);
      StepStats stats;
      switch (phase) {
        case Phase::kPretrainActor:
          stats = actor_xe_step(params_, state_.optimizer, batch, config_);
          break;
        case Phase::kPretrainCritic:
          stats = critic_step(params_, state_.optimizer, batch, config_, state_.iteration, hooks_.reward);
          break;
        case Phase::kJoint:
          stats = joint_step(params_, state_.optimizer, batch, config_, state_.iteration, hooks_.reward);
          break;
      }
      ++state_.batch;
      ++state_.iteration;
      state_.window += stats;
      epoch_stats += stats;
      if (hooks_.on_iteration) hooks_.on_iteration(phase, state_.iteration, stats);
      if (state_.iteration % config_.log_every == 0) emit_log(phase);
      if (config_.checkpoint_every && state_.iteration % config_.checkpoint_every == 0 && hooks_.on_checkpoint) {
        hooks_.on_checkpoint(state_);
      }
    }
    if (hooks_.on_epoch) hooks_.on_epoch(phase, state_.epoch, epoch_stats);
    ++state_.epoch;
    state_.batch = 0;
  }
  emit_log(phase);
  state_.completed[index] = true;
}

void Trainer::run_all() {
  for (auto p : {Phase::kPretrainActor, Phase::kPretrainCritic, Phase::kJoint}) run_phase(p);
}

}  // namespace acsum
