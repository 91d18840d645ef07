#include "acsum/decoder.hpp"

#include <array>
#include <cmath>

#include "acsum/error.hpp"

namespace acsum {

namespace {

std::vector<Var> hidden_of(const std::vector<CellState>& states) {
  std::vector<Var> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.h);
  return out;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

std::size_t sample_index(std::span<const double> logp, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    acc += std::exp(logp[i]);
    if (u < acc) return i;
  }
  // Rounding left u above the total mass; fall back to the last likely entry.
  for (std::size_t i = logp.size(); i-- > 0;) {
    if (std::exp(logp[i]) > 0.0) return i;
  }
  return logp.size() - 1;
}

std::vector<double> values_of(Var v) {
  auto d = v.value().data();
  return {d.begin(), d.end()};
}

}  // namespace

AttentionMemory attention_memory(const EncodedCode& enc) {
  if (enc.seq_states.empty() || enc.tree_states.empty()) throw DataError("attention over an empty encoding");
  AttentionMemory m;
  auto str = hidden_of(enc.tree_states);
  auto txt = hidden_of(enc.seq_states);
  m.str_keys = stack_rows(str);
  m.str_keys_t = transpose(m.str_keys);
  m.txt_keys = stack_rows(txt);
  m.txt_keys_t = transpose(m.txt_keys);
  return m;
}

AttentionResult attend(const AttentionMemory& memory, Var s) {
  if (memory.str_keys.value().cols() != s.size() || memory.txt_keys.value().cols() != s.size()) {
    throw DimensionError("attend: decoder state of size " + std::to_string(s.size()) +
                         " does not match encoder states " + shape_string(memory.str_keys.shape()) + " / " +
                         shape_string(memory.txt_keys.shape()));
  }
  AttentionResult r;
  r.alpha_str = softmax(matmul(memory.str_keys, s));
  r.alpha_txt = softmax(matmul(memory.txt_keys, s));
  r.d_str = matmul(memory.str_keys_t, r.alpha_str);
  r.d_txt = matmul(memory.txt_keys_t, r.alpha_txt);
  return r;
}

FusedContext fuse(Tape& tape, ModelParams& params, Var d_str, Var d_txt, Var s) {
  FusedContext out;
  std::array<Var, 2> contexts{d_str, d_txt};
  out.d = matmul(tape.param(params.W_d), concat(contexts)) + tape.param(params.b_d);
  std::array<Var, 2> state{s, out.d};
  out.s_tilde = tanh(matmul(tape.param(params.W_c), concat(state)) + tape.param(params.b_c));
  return out;
}

Var word_log_distribution(Tape& tape, ModelParams& params, Var s_tilde) {
  return log_softmax(matmul(tape.param(params.W_s), s_tilde) + tape.param(params.b_s));
}

Var value_estimate(Tape& tape, ModelParams& params, Var s_tilde) {
  return matmul(tape.param(params.w_v), s_tilde) + tape.param(params.b_v);
}

Rollout rollout(Tape& tape, ModelParams& params, const EncodedCode& enc, const RolloutOptions& options) {
  if (options.max_steps == 0) throw UsageError("rollout: max_steps must be at least 1");
  if (options.mode == DecodeMode::kTeacherForced && options.reference.empty()) {
    throw UsageError("rollout: teacher forcing needs a reference");
  }
  if (options.mode == DecodeMode::kSample && options.rng == nullptr) {
    throw UsageError("rollout: sampling needs a random stream");
  }
  std::optional<AttentionMemory> memory;
  if (params.config.attention) memory = attention_memory(enc);

  std::array<Var, 2> summaries{enc.final_txt, enc.root_str};
  CellState state;
  state.h = tanh(matmul(tape.param(params.W_init), concat(summaries)) + tape.param(params.b_init));

  std::size_t steps = options.max_steps;
  if (options.mode == DecodeMode::kTeacherForced) steps = std::min(steps, options.reference.size());

  Rollout out;
  int previous = Vocab::kStart;
  for (std::size_t t = 0; t < steps; ++t) {
    state = lstm_step(tape, params.decoder_cell, tape.row(params.comment_embedding, static_cast<std::size_t>(previous)),
                      state);
    Var d_str = enc.root_str;
    Var d_txt = enc.final_txt;
    if (memory) {
      AttentionResult att = attend(*memory, state.h);
      d_str = att.d_str;
      d_txt = att.d_txt;
      if (options.record_attention) out.attention.push_back({values_of(att.alpha_str), values_of(att.alpha_txt)});
    }
    FusedContext fused = fuse(tape, params, d_str, d_txt, state.h);
    Var logp = word_log_distribution(tape, params, fused.s_tilde);
    Var value = value_estimate(tape, params, detach(fused.s_tilde));

    std::size_t action = 0;
    switch (options.mode) {
      case DecodeMode::kGreedy: action = argmax(logp.value().data()); break;
      case DecodeMode::kSample: action = sample_index(logp.value().data(), *options.rng); break;
      case DecodeMode::kTeacherForced: action = static_cast<std::size_t>(options.reference[t]); break;
    }
    Var chosen = pick(logp, action);
    out.logprobs.push_back(chosen);
    out.values.push_back(value);
    out.episode.actions.push_back(static_cast<int>(action));
    out.episode.logprobs.push_back(chosen.item());
    out.episode.values.push_back(value.item());
    previous = static_cast<int>(action);
    if (previous == Vocab::kEos) {
      out.episode.terminated_by = Termination::kEos;
      break;
    }
  }
  return out;
}

Episode greedy_decode(ModelParams& params, const EncodedSample& sample, std::size_t max_steps,
                      std::vector<StepAttention>* attention) {
  Tape tape;
  EncodedCode enc = encode(tape, params, sample);
  RolloutOptions opts;
  opts.mode = DecodeMode::kGreedy;
  opts.max_steps = max_steps;
  opts.record_attention = attention != nullptr;
  Rollout r = rollout(tape, params, enc, opts);
  if (attention) *attention = std::move(r.attention);
  return std::move(r.episode);
}

}  // namespace acsum
