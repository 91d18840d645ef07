#include <gtest/gtest.h>

#include <cmath>

#include "acsum/error.hpp"
#include "acsum/training.hpp"
#include "oracles.hpp"

using namespace acsum;

namespace {

ModelParams tiny_model(std::uint64_t seed, std::size_t comment_vocab = 8) {
  ModelConfig cfg;
  cfg.hidden = 6;
  cfg.embed = 4;
  cfg.init_scale = 0.3;
  Rng rng(seed);
  return ModelParams::random(cfg, VocabSizes{9, 7, comment_vocab}, rng);
}

std::vector<EncodedSample> five_samples() {
  std::vector<EncodedSample> out;
  out.push_back(oracle::tiny_sample({4, 5}, oracle::three_node_tree(1, 2, 3), {4, 5, 2}));
  out.push_back(oracle::tiny_sample({6, 7, 8}, oracle::three_node_tree(2, 1, 3), {6, 2}));
  out.push_back(oracle::tiny_sample({5}, oracle::three_node_tree(4, 5, 6), {7, 4, 2}));
  out.push_back(oracle::tiny_sample({8, 4}, oracle::three_node_tree(6, 4, 5), {5, 6, 7, 2}));
  out.push_back(oracle::tiny_sample({7, 7}, oracle::three_node_tree(3, 3, 1), {4, 2}));
  return out;
}

std::vector<const EncodedSample*> pointers(const std::vector<EncodedSample>& v) {
  std::vector<const EncodedSample*> out;
  for (const auto& s : v) out.push_back(&s);
  return out;
}

std::vector<double> flat(ModelParams& p, bool actor) {
  std::vector<double> out;
  for (auto& [name, t] : actor ? p.actor() : p.critic()) out.insert(out.end(), t->data().begin(), t->data().end());
  return out;
}

}  // namespace

TEST(AdaGrad, FirstStepMovesByLearningRate) {
  std::vector<double> p{1.0, -2.0}, g{0.3, -7.0}, acc{0.0, 0.0};
  adagrad_update(p, g, acc, 0.1);
  EXPECT_NEAR(p[0], 1.0 - 0.1, 1e-7);
  EXPECT_NEAR(p[1], -2.0 + 0.1, 1e-7);
  EXPECT_DOUBLE_EQ(acc[1], 49.0);
}

TEST(AdaGrad, ZeroGradientChangesNothing) {
  std::vector<double> p{1.0}, g{0.0}, acc{2.5};
  adagrad_update(p, g, acc, 0.1);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(acc[0], 2.5);
}

TEST(AdaGrad, RepeatedGradientsShrinkTheStep) {
  std::vector<double> p{0.0}, g{1.0}, acc{0.0};
  double last = 1e9;
  for (int i = 0; i < 10; ++i) {
    double before = p[0];
    adagrad_update(p, g, acc, 0.1);
    double step = before - p[0];
    EXPECT_LT(step, last);
    EXPECT_NEAR(step, 0.1 / std::sqrt(i + 1.0), 1e-9);
    last = step;
  }
}

TEST(AdaGrad, StepZeroesGradientsAndKeysAccumulatorsByName) {
  Tensor t = Tensor::vector({1, 2});
  t.enable_grad();
  t.grad()[0] = 1.0;
  AdaGrad opt;
  std::vector<NamedTensor> group{{"w", &t}};
  opt.step(group, 0.5);
  EXPECT_NEAR(t[0], 0.5, 1e-7);
  EXPECT_EQ(t[1], 2.0);
  EXPECT_EQ(t.grad()[0], 0.0);
  ASSERT_EQ(opt.accumulators().count("w"), 1u);
  EXPECT_EQ(opt.accumulators().at("w"), (std::vector<double>{1.0, 0.0}));
}

TEST(Clipping, RescalesOnlyAboveThreshold) {
  Tensor a = Tensor::vector({3, 0}), b = Tensor::vector({0, 4});
  a.enable_grad();
  b.enable_grad();
  a.grad()[0] = 6;
  b.grad()[1] = 8;
  std::vector<NamedTensor> group{{"a", &a}, {"b", &b}};
  EXPECT_DOUBLE_EQ(clip_grad_norm(group, 5.0), 10.0);
  EXPECT_NEAR(global_grad_norm(group), 5.0, 1e-12);
  EXPECT_NEAR(a.grad()[0], 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(clip_grad_norm(group, 50.0), global_grad_norm(group));
  EXPECT_NEAR(b.grad()[1], 4.0, 1e-12);
}

TEST(Reward, PerfectMatchIsOne) {
  std::vector<int> ref{4, 5, 6, 7, 2};
  EXPECT_NEAR(bleu_reward(ref, ref), 1.0, 1e-15);
}

TEST(Reward, DisjointAndEmptyCandidatesScoreZero) {
  std::vector<int> ref{4, 5, 6, 2};
  std::vector<int> other{7, 8, 9, 2};
  EXPECT_EQ(bleu_reward(other, ref), 0.0);
  std::vector<int> eos_only{2, 4, 5};
  EXPECT_EQ(bleu_reward(eos_only, ref), 0.0);
}

TEST(Reward, ClippedUnigramsWithSmoothedHigherOrders) {
  // the=4 cat=5 sat=6 on=7 mat=8
  std::vector<int> cand{4, 4, 4, 2};
  std::vector<int> ref{4, 5, 6, 7, 4, 8, 2};
  double p1 = 2.0 / 3.0;       // "the" clipped at its reference count 2
  double p2 = (0.0 + 1) / (2 + 1);  // two "the the" bigrams, none in the reference
  double p3 = (0.0 + 1) / (1 + 1);
  double p4 = (0.0 + 1) / (0 + 1);
  double bp = std::exp(1.0 - 6.0 / 3.0);
  double want = bp * std::exp((std::log(p1) + std::log(p2) + std::log(p3) + std::log(p4)) / 4.0);
  EXPECT_NEAR(bleu_reward(cand, ref), want, 1e-12);
}

TEST(Reward, SpecialIndicesAreIgnored) {
  std::vector<int> a{1, 4, 0, 5, 2, 9, 9};
  std::vector<int> b{4, 5, 2};
  EXPECT_NEAR(bleu_reward(a, b), 1.0, 1e-15);
}

TEST(Returns, DiscountedTerminalReward) {
  Episode ep;
  ep.actions = {4, 5, 2};
  ep.values = {0.5, 0.5, 0.5};
  ep.reward = 0.8;
  EXPECT_DOUBLE_EQ(episode_return(ep, 2, 0.9), 0.8);
  EXPECT_DOUBLE_EQ(episode_return(ep, 0, 0.9), 0.81 * 0.8);
  EXPECT_NEAR(advantage(ep, 1, 1.0), 0.3, 1e-15);
  ep.values = {0, 0, 0};
  for (std::size_t t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(advantage(ep, t, 1.0), 0.8);
  EXPECT_THROW(episode_return(ep, 3, 1.0), UsageError);
}

TEST(TeacherForcing, UniformModelPerplexityIsVocabularySize) {
  ModelParams p = ModelParams::zeros(ModelConfig{4, 3, true, 0.1}, VocabSizes{9, 7, 11});
  auto samples = five_samples();
  auto batch = pointers(samples);
  AdaGrad opt;
  TrainConfig cfg;
  StepStats s = actor_xe_step(p, opt, batch, cfg);
  EXPECT_NEAR(s.perplexity(), 11.0, 1e-9);
}

TEST(TeacherForcing, GradientMatchesFiniteDifferences) {
  ModelParams p = tiny_model(21);
  auto sample = five_samples()[3];
  {
    Tape tape;
    tape.backward(teacher_forced_nll(tape, p, sample, 21));
  }
  auto result = oracle::finite_difference_check(p.actor(), [&] {
    Tape tape;
    return teacher_forced_nll(tape, p, sample, 21).item();
  });
  EXPECT_LT(result.max_rel_error, 1e-3) << result.worst;
}

TEST(ActorPretraining, OverfitsOnePairAndDecodesIt) {
  ModelParams p = tiny_model(3);
  auto samples = five_samples();
  std::vector<const EncodedSample*> batch{&samples[3]};
  AdaGrad opt;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  StepStats s;
  for (int i = 0; i < 300; ++i) s = actor_xe_step(p, opt, batch, cfg);
  EXPECT_LT(s.perplexity(), 1.05);
  Episode ep = greedy_decode(p, samples[3], 21);
  EXPECT_EQ(ep.actions, samples[3].target);
}

TEST(CriticPretraining, RegressesOntoConstantReward) {
  ModelParams p = tiny_model(4);
  auto samples = five_samples();
  auto batch = pointers(samples);
  auto actor_before = flat(p, true);
  AdaGrad opt;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  RewardFn half = [](const EncodedSample&, std::span<const int>) { return 0.5; };
  StepStats s;
  for (std::uint64_t i = 0; i < 300; ++i) s = critic_step(p, opt, batch, cfg, i, half);
  EXPECT_LT(s.critic_loss(), 1e-4);
  EXPECT_EQ(flat(p, true), actor_before);
}

TEST(CriticPretraining, ZeroRewardDrivesValuesToZero) {
  ModelParams p = tiny_model(5);
  auto samples = five_samples();
  auto batch = pointers(samples);
  AdaGrad opt;
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  RewardFn zero = [](const EncodedSample&, std::span<const int>) { return 0.0; };
  for (std::uint64_t i = 0; i < 300; ++i) critic_step(p, opt, batch, cfg, i, zero);
  Episode ep = greedy_decode(p, samples[0], 21);
  for (double v : ep.values) EXPECT_NEAR(v, 0.0, 1e-2);
}

TEST(CriticPretraining, LossHalvesOnFiveSamples) {
  ModelParams p = tiny_model(6);
  auto samples = five_samples();
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 5;
  cfg.actor_epochs = 30;
  cfg.critic_epochs = 12;
  cfg.log_every = 1000;
  TrainingState state;
  std::vector<double> epoch_loss;
  TrainerHooks hooks;
  hooks.on_epoch = [&](Phase phase, std::uint64_t, const StepStats& s) {
    if (phase == Phase::kPretrainCritic) epoch_loss.push_back(s.critic_loss());
  };
  Trainer trainer(p, state, cfg, samples, hooks);
  trainer.run_phase(Phase::kPretrainActor);
  trainer.run_phase(Phase::kPretrainCritic);
  ASSERT_EQ(epoch_loss.size(), 12u);
  EXPECT_LT(epoch_loss.back(), 0.5 * epoch_loss.front());
}

TEST(JointStep, ZeroAdvantageLeavesActorUnchanged) {
  ModelParams p = tiny_model(7);
  for (double& v : p.w_v.data()) v = 0.0;
  auto samples = five_samples();
  auto batch = pointers(samples);
  auto before = flat(p, true);
  AdaGrad opt;
  TrainConfig cfg;
  RewardFn zero = [](const EncodedSample&, std::span<const int>) { return 0.0; };
  joint_step(p, opt, batch, cfg, 0, zero);
  EXPECT_EQ(flat(p, true), before);
}

TEST(JointStep, TwoArmBanditConverges) {
  // Comment vocabulary {good, bad} after the reserved entries.
  const int good = Vocab::kReserved, bad = Vocab::kReserved + 1;
  ModelParams p = tiny_model(9, Vocab::kReserved + 2);
  std::vector<EncodedSample> samples{oracle::tiny_sample({4, 5}, oracle::three_node_tree(1, 2, 3), {good})};
  auto batch = pointers(samples);
  AdaGrad opt;
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.max_steps = 1;
  cfg.seed = 77;
  RewardFn reward = [&](const EncodedSample&, std::span<const int> a) { return a[0] == good ? 1.0 : 0.0; };
  for (std::uint64_t i = 0; i < 200; ++i) joint_step(p, opt, batch, cfg, i, reward);
  Episode ep = greedy_decode(p, samples[0], 1);
  EXPECT_EQ(ep.actions[0], good);
  EXPECT_NE(ep.actions[0], bad);
  EXPECT_GT(std::exp(ep.logprobs[0]), 0.9);
}

TEST(Trainer, PhaseOrderIsEnforced) {
  ModelParams p = tiny_model(10);
  auto samples = five_samples();
  TrainingState state;
  TrainConfig cfg;
  cfg.actor_epochs = 1;
  Trainer trainer(p, state, cfg, samples);
  EXPECT_THROW(trainer.run_phase(Phase::kJoint), UsageError);
  EXPECT_THROW(trainer.run_phase(Phase::kPretrainCritic), UsageError);
  trainer.run_phase(Phase::kPretrainActor);
  EXPECT_THROW(trainer.run_phase(Phase::kJoint), UsageError);
}

TEST(Trainer, InterruptedRunResumesOnTheSameTrajectory) {
  auto samples = five_samples();
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.batch_size = 2;
  cfg.actor_epochs = 2;
  cfg.critic_epochs = 2;
  cfg.joint_epochs = 2;
  cfg.log_every = 2;

  ModelParams whole = tiny_model(11);
  TrainingState whole_state;
  std::vector<std::string> whole_log;
  TrainerHooks hooks;
  hooks.on_log = [&](const LogRecord& r) { whole_log.push_back(r.to_json()); };
  Trainer(whole, whole_state, cfg, samples, hooks).run_all();

  // Snapshot at a checkpoint, abandon the run, then continue from the copy.
  cfg.checkpoint_every = 1;
  for (std::uint64_t stop : {2u, 7u, 13u}) {
    ModelParams part = tiny_model(11);
    TrainingState st;
    std::optional<ModelParams> saved_params;
    std::optional<TrainingState> saved_state;
    std::vector<std::string> log;
    TrainerHooks h;
    h.on_log = [&](const LogRecord& r) { log.push_back(r.to_json()); };
    h.on_checkpoint = [&](const TrainingState& s) {
      if (s.iteration != stop) return;
      saved_params = part;
      saved_state = s;
      throw std::runtime_error("interrupt");
    };
    EXPECT_THROW(Trainer(part, st, cfg, samples, h).run_all(), std::runtime_error);
    ASSERT_TRUE(saved_params && saved_state);
    h.on_checkpoint = nullptr;
    Trainer(*saved_params, *saved_state, cfg, samples, h).run_all();
    EXPECT_EQ(flat(*saved_params, true), flat(whole, true)) << "stop at " << stop;
    EXPECT_EQ(flat(*saved_params, false), flat(whole, false)) << "stop at " << stop;
    EXPECT_EQ(*saved_state, whole_state);
    EXPECT_EQ(log, whole_log);
  }
}

TEST(Trainer, LogRecordsCarryPhaseFields) {
  LogRecord r;
  r.iteration = 5;
  r.phase = Phase::kJoint;
  r.mean_reward = 0.25;
  r.critic_loss = 0.5;
  EXPECT_EQ(r.to_json(), R"({"iteration":5,"phase":"joint","mean_reward":0.25,"critic_loss":0.5})");
  EXPECT_EQ(parse_phase("pretrain-critic"), Phase::kPretrainCritic);
  EXPECT_FALSE(parse_phase("warmup").has_value());
}

TEST(Trainer, InvalidConfigIsRejected) {
  TrainConfig cfg;
  cfg.gamma = 1.5;
  EXPECT_THROW(cfg.validate(), UsageError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), UsageError);
}
