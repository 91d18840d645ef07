#include "acsum/model.hpp"

#include "acsum/error.hpp"

namespace acsum {

namespace {

Tensor param(Shape shape) {
  Tensor t(std::move(shape));
  t.enable_grad();
  return t;
}

bool is_bias(const std::string& name) {
  auto dot = name.rfind('.');
  std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return leaf.rfind("b_", 0) == 0 || leaf == "b";
}

void flatten(const AstNode& node, const Vocab& vocab, IndexedTree& out) {
  std::vector<int> kids;
  for (const auto& c : node.children) {
    flatten(c, vocab, out);
    kids.push_back(static_cast<int>(out.keys.size()) - 1);
  }
  std::string key = node_vocab_key(node);
  out.keys.push_back(vocab.index(key));
  out.labels.push_back(std::move(key));
  out.children.push_back(std::move(kids));
}

void collect_node_keys(const AstNode& node, std::vector<std::string>& out) {
  for (const auto& c : node.children) collect_node_keys(c, out);
  out.push_back(node_vocab_key(node));
}

}  // namespace

LstmCell LstmCell::zeros(std::size_t arity, std::size_t input, std::size_t hidden) {
  LstmCell cell;
  cell.arity = arity;
  cell.input = input;
  cell.hidden = hidden;
  for (Tensor* w : {&cell.W_i, &cell.W_f, &cell.W_o, &cell.W_u}) *w = param({hidden, input});
  for (auto* us : {&cell.U_i, &cell.U_o, &cell.U_u}) {
    for (std::size_t l = 0; l < arity; ++l) us->push_back(param({hidden, hidden}));
  }
  for (std::size_t kl = 0; kl < arity * arity; ++kl) cell.U_f.push_back(param({hidden, hidden}));
  for (Tensor* b : {&cell.b_i, &cell.b_f, &cell.b_o, &cell.b_u}) *b = param({hidden});
  return cell;
}

void LstmCell::for_each(const std::string& prefix,
                        const std::function<void(const std::string&, Tensor&)>& fn) {
  fn(prefix + ".W_i", W_i);
  fn(prefix + ".W_f", W_f);
  fn(prefix + ".W_o", W_o);
  fn(prefix + ".W_u", W_u);
  for (std::size_t l = 0; l < arity; ++l) {
    auto s = std::to_string(l);
    fn(prefix + ".U_i." + s, U_i[l]);
    fn(prefix + ".U_o." + s, U_o[l]);
    fn(prefix + ".U_u." + s, U_u[l]);
  }
  for (std::size_t k = 0; k < arity; ++k) {
    for (std::size_t l = 0; l < arity; ++l) {
      fn(prefix + ".U_f." + std::to_string(k) + "." + std::to_string(l), forget_u(k, l));
    }
  }
  fn(prefix + ".b_i", b_i);
  fn(prefix + ".b_f", b_f);
  fn(prefix + ".b_o", b_o);
  fn(prefix + ".b_u", b_u);
}

ModelParams ModelParams::zeros(const ModelConfig& config, const VocabSizes& vocab) {
  if (config.hidden == 0 || config.embed == 0) throw UsageError("hidden and embed sizes must be positive");
  if (vocab.code == 0 || vocab.node == 0 || vocab.comment == 0) throw DataError("empty vocabulary");
  std::size_t H = config.hidden, E = config.embed;
  ModelParams p;
  p.config = config;
  p.vocab = vocab;
  p.code_embedding = param({vocab.code, E});
  p.node_embedding = param({vocab.node, E});
  p.comment_embedding = param({vocab.comment, E});
  p.seq_cell = LstmCell::zeros(1, E, H);
  p.tree_cell = LstmCell::zeros(2, E, H);
  p.decoder_cell = LstmCell::zeros(1, E, H);
  p.W_init = param({H, 2 * H});
  p.b_init = param({H});
  p.W_d = param({H, 2 * H});
  p.b_d = param({H});
  p.W_c = param({H, 2 * H});
  p.b_c = param({H});
  p.W_s = param({vocab.comment, H});
  p.b_s = param({vocab.comment});
  p.w_v = param({1, H});
  p.b_v = param({1});
  return p;
}

ModelParams ModelParams::random(const ModelConfig& config, const VocabSizes& vocab, Rng& rng) {
  ModelParams p = zeros(config, vocab);
  for (auto& [name, t] : p.all()) {
    if (is_bias(name)) continue;
    for (double& v : t->data()) v = rng.uniform(-config.init_scale, config.init_scale);
  }
  return p;
}

std::vector<NamedTensor> ModelParams::actor() {
  std::vector<NamedTensor> out;
  auto add = [&](const std::string& name, Tensor& t) { out.push_back({name, &t}); };
  add("emb.code", code_embedding);
  add("emb.node", node_embedding);
  add("emb.comment", comment_embedding);
  seq_cell.for_each("seq", add);
  tree_cell.for_each("tree", add);
  decoder_cell.for_each("dec", add);
  add("init.W", W_init);
  add("init.b", b_init);
  add("fuse.W_d", W_d);
  add("fuse.b_d", b_d);
  add("fuse.W_c", W_c);
  add("fuse.b_c", b_c);
  add("out.W_s", W_s);
  add("out.b_s", b_s);
  return out;
}

std::vector<NamedTensor> ModelParams::critic() {
  return {{"critic.w_v", &w_v}, {"critic.b_v", &b_v}};
}

std::vector<NamedTensor> ModelParams::all() {
  auto out = actor();
  for (auto& nt : critic()) out.push_back(nt);
  return out;
}

NamedTensor ModelParams::find(const std::string& name) {
  for (auto& nt : all()) {
    if (nt.name == name) return nt;
  }
  throw DataError("unknown parameter '" + name + "'");
}

void ModelParams::zero_grad() {
  for (auto& nt : all()) nt.tensor->zero_grad();
}

IndexedTree index_tree(const AstNode& root, const Vocab& node_vocab) {
  IndexedTree out;
  flatten(root, node_vocab, out);
  return out;
}

AstNode sample_ast(const Sample& sample) {
  if (sample.ast_json) return load_ast(*sample.ast_json);
  return parse_minilang(sample.code_text);
}

EncodedSample encode_sample(const Sample& sample, const Vocabularies& vocab) {
  EncodedSample out;
  out.id = sample.id;
  out.code = vocab.code.encode(sample.code_tokens);
  out.code_tokens = sample.code_tokens;
  out.tree = index_tree(binarize(sample_ast(sample)).root(), vocab.node);
  out.target = vocab.comment.encode_target(sample.comment_tokens);
  out.reference = sample.comment_tokens;
  return out;
}

std::vector<EncodedSample> encode_samples(std::span<const Sample> samples, const Vocabularies& vocab) {
  std::vector<EncodedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode_sample(s, vocab));
  return out;
}

Vocabularies build_vocabularies(std::span<const Sample> train, std::size_t max_size, std::size_t min_count) {
  std::vector<std::vector<std::string>> code, nodes, comments;
  for (const auto& s : train) {
    code.push_back(s.code_tokens);
    comments.push_back(s.comment_tokens);
    std::vector<std::string> keys;
    collect_node_keys(binarize(sample_ast(s)).root(), keys);
    nodes.push_back(std::move(keys));
  }
  return {build_vocab(code, max_size, min_count), build_vocab(nodes, max_size, min_count),
          build_vocab(comments, max_size, min_count)};
}

}  // namespace acsum
