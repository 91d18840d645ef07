#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "acsum/ast.hpp"
#include "acsum/corpus.hpp"
#include "acsum/rng.hpp"
#include "acsum/tensor.hpp"

namespace acsum {

struct ModelConfig {
  std::size_t hidden = 64;
  std::size_t embed = 64;
  /// false: the decoder sees the fixed code summaries (root and final
  /// states) instead of attention contexts.
  bool attention = true;
  double init_scale = 0.1;
};

/// N-ary LSTM cell. With arity 1 this is the standard sequential LSTM; with
/// arity 2 it is the binary-tree cell with one forget gate per child slot.
/// U_f is indexed [k * arity + l]: gate of child k reading child l.
struct LstmCell {
  std::size_t arity = 1;
  std::size_t input = 0;
  std::size_t hidden = 0;
  Tensor W_i, W_f, W_o, W_u;
  std::vector<Tensor> U_i, U_o, U_u, U_f;
  Tensor b_i, b_f, b_o, b_u;

  static LstmCell zeros(std::size_t arity, std::size_t input, std::size_t hidden);
  const Tensor& forget_u(std::size_t k, std::size_t l) const { return U_f[k * arity + l]; }
  Tensor& forget_u(std::size_t k, std::size_t l) { return U_f[k * arity + l]; }

  void for_each(const std::string& prefix, const std::function<void(const std::string&, Tensor&)>& fn);
};

struct VocabSizes {
  std::size_t code = 0;
  std::size_t node = 0;
  std::size_t comment = 0;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor;
};

/// Every trainable tensor. The actor (theta) is everything except the value
/// head; the critic (phi) is the value head, which reads the actor's
/// attentional state.
struct ModelParams {
  ModelConfig config;
  VocabSizes vocab;

  Tensor code_embedding;
  Tensor node_embedding;
  Tensor comment_embedding;
  LstmCell seq_cell;
  LstmCell tree_cell;
  LstmCell decoder_cell;
  Tensor W_init, b_init;
  Tensor W_d, b_d;
  Tensor W_c, b_c;
  Tensor W_s, b_s;
  Tensor w_v, b_v;

  /// All tensors zero, gradients enabled.
  static ModelParams zeros(const ModelConfig& config, const VocabSizes& vocab);
  /// Uniform(-init_scale, init_scale) weights, zero biases.
  static ModelParams random(const ModelConfig& config, const VocabSizes& vocab, Rng& rng);

  std::vector<NamedTensor> actor();
  std::vector<NamedTensor> critic();
  std::vector<NamedTensor> all();
  NamedTensor find(const std::string& name);

  void zero_grad();
};

struct Vocabularies {
  Vocab code;
  Vocab node;
  Vocab comment;

  VocabSizes sizes() const { return {code.size(), node.size(), comment.size()}; }
  bool operator==(const Vocabularies&) const = default;
};

/// Binarized tree flattened in post-order (children before parents, root
/// last). `children[j]` holds the post-order indices of node j's children.
struct IndexedTree {
  std::vector<int> keys;
  std::vector<std::string> labels;
  std::vector<std::vector<int>> children;

  std::size_t size() const { return keys.size(); }
};

IndexedTree index_tree(const AstNode& root, const Vocab& node_vocab);

/// Sample ready for the network: vocabulary indices for code tokens, the
/// indexed binary AST and the target comment (ending with end-of-sequence).
struct EncodedSample {
  std::string id;
  std::vector<int> code;
  std::vector<std::string> code_tokens;
  IndexedTree tree;
  std::vector<int> target;
  std::vector<std::string> reference;
};

/// Parses `ast_json` when present, otherwise the code as mini-language.
AstNode sample_ast(const Sample& sample);
EncodedSample encode_sample(const Sample& sample, const Vocabularies& vocab);
std::vector<EncodedSample> encode_samples(std::span<const Sample> samples, const Vocabularies& vocab);

/// Builds the three vocabularies from training samples only.
Vocabularies build_vocabularies(std::span<const Sample> train, std::size_t max_size, std::size_t min_count);

}  // namespace acsum
