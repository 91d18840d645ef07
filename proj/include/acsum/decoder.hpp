#pragma once

#include <optional>
#include <span>
#include <vector>

#include "acsum/autograd.hpp"
#include "acsum/encoder.hpp"
#include "acsum/model.hpp"
#include "acsum/rng.hpp"

namespace acsum {

/// Encoder states stacked once per sample for dot-product attention.
struct AttentionMemory {
  Var str_keys;    // [nodes x H]
  Var str_keys_t;  // [H x nodes]
  Var txt_keys;    // [tokens x H]
  Var txt_keys_t;  // [H x tokens]
};

AttentionMemory attention_memory(const EncodedCode& enc);

struct AttentionResult {
  Var alpha_str;
  Var alpha_txt;
  Var d_str;
  Var d_txt;
};

/// Softmax over <h_j, s> for every tree node and every code token, and the
/// corresponding weighted sums of encoder states.
AttentionResult attend(const AttentionMemory& memory, Var s);

struct FusedContext {
  Var d;
  Var s_tilde;
};

/// d = W_d [d_str; d_txt] + b_d, then s~ = tanh(W_c [s; d] + b_c).
FusedContext fuse(Tape& tape, ModelParams& params, Var d_str, Var d_txt, Var s);

/// Log-probabilities log softmax(W_s s~ + b_s) over the comment vocabulary.
Var word_log_distribution(Tape& tape, ModelParams& params, Var s_tilde);

/// Critic head w_v . s~ + b_v.
Var value_estimate(Tape& tape, ModelParams& params, Var s_tilde);

enum class DecodeMode { kGreedy, kSample, kTeacherForced };
enum class Termination { kEos, kMaxSteps };

struct Episode {
  std::vector<int> actions;
  std::vector<double> logprobs;
  std::vector<double> values;
  double reward = 0.0;
  Termination terminated_by = Termination::kMaxSteps;

  std::size_t size() const { return actions.size(); }
};

struct StepAttention {
  std::vector<double> str;
  std::vector<double> txt;
};

struct RolloutOptions {
  DecodeMode mode = DecodeMode::kGreedy;
  std::size_t max_steps = kMaxCommentTokens + 1;
  /// Required for teacher forcing.
  std::span<const int> reference;
  /// Required for sampling.
  Rng* rng = nullptr;
  bool record_attention = false;
};

/// An episode plus the tape handles of its per-step log-probabilities of the
/// chosen actions and value estimates. Values read a detached copy of s~, so
/// critic losses never reach actor parameters.
struct Rollout {
  Episode episode;
  std::vector<Var> logprobs;
  std::vector<Var> values;
  std::vector<StepAttention> attention;
};

/// Decodes from the start symbol until end-of-sequence or max_steps actions.
Rollout rollout(Tape& tape, ModelParams& params, const EncodedCode& enc, const RolloutOptions& options);

/// Greedy decode of one sample on a private tape.
Episode greedy_decode(ModelParams& params, const EncodedSample& sample, std::size_t max_steps,
                      std::vector<StepAttention>* attention = nullptr);

}  // namespace acsum
