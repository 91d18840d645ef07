#include "acsum/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "acsum/checkpoint.hpp"
#include "acsum/config.hpp"
#include "acsum/corpus.hpp"
#include "acsum/decoder.hpp"
#include "acsum/error.hpp"
#include "acsum/evaluate.hpp"
#include "acsum/training.hpp"

namespace acsum::cli {

namespace fs = std::filesystem;

namespace {

struct PrepareArgs {
  std::string input;
  std::string out;
  std::uint64_t seed = 0;
  std::string fractions = "0.6,0.2,0.2";
  std::size_t vocab_max_size = 50000;
  std::size_t min_count = 1;
};

struct TrainArgs {
  std::string data;
  std::string config;
  std::vector<std::string> sets;
  std::string phase = "all";
  std::string resume;
  std::string out;
};

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string out;
  std::string name;
};

struct SummarizeArgs {
  std::string ckpt;
  std::string code = "-";
  std::string ast;
  bool dump_attention = false;
  std::size_t top_k = 3;
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

SplitSpec parse_fractions(const std::string& text, std::uint64_t seed) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    char* end = nullptr;
    double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw UsageError("--fractions: '" + item + "' is not a number");
    parts.push_back(v);
  }
  if (parts.size() != 3) throw UsageError("--fractions expects three comma-separated values");
  return SplitSpec{seed, parts[0], parts[1], parts[2]};
}

Vocabularies load_vocabularies(const fs::path& dir) {
  Vocabularies v;
  v.code = Vocab::load(dir / "code.vocab");
  v.node = Vocab::load(dir / "node.vocab");
  v.comment = Vocab::load(dir / "comment.vocab");
  return v;
}

void check_vocab_match(const Vocabularies& data, const Vocabularies& ckpt) {
  auto one = [](const Vocab& a, const Vocab& b, const char* name) {
    if (!(a == b)) {
      throw DataError(std::string(name) + " vocabulary of the data directory (" + std::to_string(a.size()) +
                      " entries) differs from the checkpoint's (" + std::to_string(b.size()) + " entries)");
    }
  };
  one(data.code, ckpt.code, "code");
  one(data.node, ckpt.node, "node");
  one(data.comment, ckpt.comment, "comment");
}

int prepare(const PrepareArgs& a, std::ostream& out, std::ostream& err) {
  SplitSpec spec = parse_fractions(a.fractions, a.seed);
  std::vector<Sample> corpus = read_corpus(a.input);
  std::vector<Sample> kept;
  std::vector<std::string> skipped;
  for (auto& s : corpus) {
    try {
      s.ast_json = dump_ast(sample_ast(s));
      kept.push_back(std::move(s));
    } catch (const DataError& e) {
      err << "warning: skipping sample " << s.id << ": " << e.what() << "\n";
      skipped.push_back(s.id);
    }
  }
  if (kept.empty()) throw DataError("no usable samples in " + a.input);
  CorpusSplit parts = split(kept, spec);
  Vocabularies vocab = build_vocabularies(parts.train, a.vocab_max_size, a.min_count);

  fs::path dir(a.out);
  fs::create_directories(dir);
  write_corpus(dir / "train.jsonl", parts.train);
  write_corpus(dir / "valid.jsonl", parts.valid);
  write_corpus(dir / "test.jsonl", parts.test);
  vocab.code.save(dir / "code.vocab");
  vocab.node.save(dir / "node.vocab");
  vocab.comment.save(dir / "comment.vocab");

  nlohmann::ordered_json m;
  m["source"] = fs::path(a.input).filename().string();
  m["seed"] = a.seed;
  m["fractions"] = {spec.train, spec.valid, spec.test};
  m["samples"] = {{"train", parts.train.size()}, {"valid", parts.valid.size()}, {"test", parts.test.size()}};
  m["skipped"] = skipped;
  m["vocab"] = {{"code", vocab.code.size()}, {"node", vocab.node.size()}, {"comment", vocab.comment.size()}};
  std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";

  out << "prepared " << kept.size() << " samples (" << parts.train.size() << " train, " << parts.valid.size()
      << " valid, " << parts.test.size() << " test), skipped " << skipped.size() << "\n";
  return kOk;
}

int train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<Phase> phase;
  if (a.phase != "all") {
    phase = parse_phase(a.phase);
    if (!phase) throw UsageError("unknown phase '" + a.phase + "'");
  }
  fs::path data(a.data);
  Vocabularies vocab = load_vocabularies(data);
  std::vector<Sample> raw = read_corpus(data / "train.jsonl");
  std::vector<EncodedSample> samples = encode_samples(raw, vocab);
  if (samples.empty()) throw DataError("training split is empty");

  Checkpoint ck;
  if (!a.resume.empty()) {
    ck = load_checkpoint(a.resume);
    check_vocab_match(vocab, ck.vocab);
    ModelConfig before = ck.config.model;
    if (!a.config.empty()) ck.config.merge_file(a.config);
    for (const auto& s : a.sets) ck.config.merge_text(s);
    const ModelConfig& after = ck.config.model;
    if (after.hidden != before.hidden || after.embed != before.embed || after.attention != before.attention) {
      throw UsageError("model shape settings cannot change when resuming");
    }
  } else {
    if (!a.config.empty()) ck.config.merge_file(a.config);
    for (const auto& s : a.sets) ck.config.merge_text(s);
    ck.config.train.validate();
    ck.vocab = vocab;
    Rng init(Rng::derive(ck.config.train.seed, {0}));
    ck.params = ModelParams::random(ck.config.model, vocab.sizes(), init);
  }
  ck.config.train.validate();

  fs::path dir = a.out.empty() ? data / "run" : fs::path(a.out);
  fs::create_directories(dir);
  std::ofstream log(dir / "train_log.jsonl", a.resume.empty() ? std::ios::trunc : std::ios::app);
  if (!log) throw DataError("cannot write " + (dir / "train_log.jsonl").string());

  TrainerHooks hooks;
  hooks.on_log = [&](const LogRecord& rec) {
    std::string line = rec.to_json();
    log << line << "\n";
    log.flush();
    out << line << "\n";
  };
  hooks.on_checkpoint = [&](const TrainingState& st) {
    ck.state = st;
    save_checkpoint(dir / ("ckpt-" + std::to_string(st.iteration) + ".ckpt"), ck);
  };
  Trainer trainer(ck.params, ck.state, ck.config.train, samples, hooks);

  std::vector<Phase> phases;
  if (phase) phases.push_back(*phase);
  else phases = {Phase::kPretrainActor, Phase::kPretrainCritic, Phase::kJoint};
  for (Phase p : phases) {
    trainer.run_phase(p);
    save_checkpoint(dir / (std::string(phase_name(p)) + ".ckpt"), ck);
  }
  save_checkpoint(dir / "final.ckpt", ck);
  err << "checkpoints written to " << dir.string() << "\n";
  return kOk;
}

int eval(const EvalArgs& a, std::ostream& out) {
  Checkpoint ck = load_checkpoint(a.ckpt);
  fs::path data(a.data);
  check_vocab_match(load_vocabularies(data), ck.vocab);
  std::vector<Sample> raw = read_corpus(data / (a.split + ".jsonl"));
  std::vector<EncodedSample> samples = encode_samples(raw, ck.vocab);
  EvalOptions opts;
  opts.max_steps = ck.config.train.max_steps;
  opts.model_name = !a.name.empty() ? a.name : ck.config.model.attention ? "Hybrid2Seq+Attn+DRL" : "Hybrid2Seq+DRL";
  EvalReport report = evaluate(ck.params, ck.vocab, samples, opts);
  std::string table = report.table();
  fs::path stem(a.out);
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  std::ofstream(stem.string() + ".txt") << table;
  std::ofstream(stem.string() + ".json") << report.to_json() << "\n";
  out << table;
  return kOk;
}

void dump_attention(std::ostream& out, const std::vector<StepAttention>& steps, const Episode& ep,
                    const EncodedSample& sample, const Vocab& comment, std::size_t k) {
  auto top = [k](const std::vector<double>& w) {
    std::vector<std::size_t> idx(w.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return w[x] > w[y]; });
    idx.resize(std::min(k, idx.size()));
    return idx;
  };
  char buf[64];
  for (std::size_t t = 0; t < steps.size() && t < ep.actions.size(); ++t) {
    out << "step " << t << " -> " << comment.token(ep.actions[t]) << "\n  ast:";
    for (std::size_t i : top(steps[t].str)) {
      std::snprintf(buf, sizeof buf, " %.3f", steps[t].str[i]);
      out << " " << sample.tree.labels[i] << buf;
    }
    out << "\n  code:";
    for (std::size_t i : top(steps[t].txt)) {
      std::snprintf(buf, sizeof buf, " %.3f", steps[t].txt[i]);
      out << " " << sample.code_tokens[i] << buf;
    }
    out << "\n";
  }
}

int summarize(const SummarizeArgs& a, std::istream& in, std::ostream& out) {
  Checkpoint ck = load_checkpoint(a.ckpt);
  std::string code;
  if (a.code == "-") {
    std::stringstream buf;
    buf << in.rdbuf();
    code = buf.str();
  } else {
    code = read_text(a.code);
  }
  if (code.find_first_not_of(" \t\r\n") == std::string::npos) throw DataError("empty code input");

  Sample s;
  s.id = "input";
  s.code_text = code;
  s.code_tokens = tokenize_code(code);
  if (s.code_tokens.size() > kMaxCodeTokens) s.code_tokens.resize(kMaxCodeTokens);
  if (!a.ast.empty()) s.ast_json = read_text(a.ast);
  EncodedSample enc;
  enc.id = s.id;
  enc.code = ck.vocab.code.encode(s.code_tokens);
  enc.code_tokens = s.code_tokens;
  enc.tree = index_tree(binarize(sample_ast(s)).root(), ck.vocab.node);

  std::vector<StepAttention> att;
  Episode ep = greedy_decode(ck.params, enc, ck.config.train.max_steps, a.dump_attention ? &att : nullptr);
  std::vector<std::string> words = ck.vocab.comment.decode(ep.actions);
  for (std::size_t i = 0; i < words.size(); ++i) out << (i ? " " : "") << words[i];
  out << "\n";
  if (a.dump_attention) dump_attention(out, att, ep, enc, ck.vocab.comment, a.top_k);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural code summarization with a hybrid code encoder and actor-critic training", "acsum"};
  app.require_subcommand(1);

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "Split a JSONL corpus, attach ASTs and build vocabularies");
  prep->add_option("--input", pa.input, "corpus JSONL (id, code, comment, optional ast)")->required();
  prep->add_option("--out", pa.out, "output data directory")->required();
  prep->add_option("--seed", pa.seed, "shuffle seed");
  prep->add_option("--fractions", pa.fractions, "train,valid,test fractions");
  prep->add_option("--vocab-max-size", pa.vocab_max_size, "vocabulary cap, reserved entries included");
  prep->add_option("--min-count", pa.min_count, "minimum token frequency");

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a model");
  tr->add_option("--data", ta.data, "prepared data directory")->required();
  tr->add_option("--config", ta.config, "key=value configuration file");
  tr->add_option("--set", ta.sets, "override one setting, key=value");
  tr->add_option("--phase", ta.phase, "pretrain-actor | pretrain-critic | joint | all");
  tr->add_option("--resume", ta.resume, "checkpoint to continue from");
  tr->add_option("--out", ta.out, "run directory (default <data>/run)");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "Score a checkpoint on a data split");
  ev->add_option("--ckpt", ea.ckpt, "checkpoint file")->required();
  ev->add_option("--data", ea.data, "prepared data directory")->required();
  ev->add_option("--split", ea.split, "train | valid | test");
  ev->add_option("--out", ea.out, "report path stem; writes <stem>.txt and <stem>.json")->required();
  ev->add_option("--name", ea.name, "model name shown in the report");

  SummarizeArgs sa;
  auto* su = app.add_subcommand("summarize", "Generate a comment for one code snippet");
  su->add_option("--ckpt", sa.ckpt, "checkpoint file")->required();
  su->add_option("--code", sa.code, "code file, or - for standard input");
  su->add_option("--ast", sa.ast, "AST JSON file (default: parse the code as mini-language)");
  su->add_flag("--dump-attention", sa.dump_attention, "print the strongest attention weights per step");
  su->add_option("--top-k", sa.top_k, "weights shown per step with --dump-attention");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*prep) return prepare(pa, out, err);
    if (*tr) return train(ta, out, err);
    if (*ev) return eval(ea, out);
    if (*su) return summarize(sa, in, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "error: numeric divergence: " << e.what() << "\n";
    return kDiverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace acsum::cli
