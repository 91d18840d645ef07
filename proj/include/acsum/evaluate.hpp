#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "acsum/metrics.hpp"
#include "acsum/model.hpp"

namespace acsum {

struct MetricScores {
  std::array<double, 4> bleu{};
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

struct SampleResult {
  std::string id;
  Tokens candidate;
  Tokens reference;
  std::size_t code_length = 0;
  MetricScores scores;
  bool failed = false;
  std::string error;
};

struct Bucket {
  std::string label;
  std::size_t count = 0;
  MetricScores scores;
};

struct EvalReport {
  std::string model_name;
  MetricScores corpus;
  std::vector<SampleResult> samples;
  std::vector<Bucket> by_code_length;
  std::vector<Bucket> by_comment_length;
  std::size_t failures = 0;

  /// Aligned text table: one overall row plus the length breakdowns.
  std::string table() const;
  std::string to_json() const;
};

MetricScores score_corpus(std::span<const Tokens> candidates, std::span<const Tokens> references);

/// Scores already-decoded outputs. `code_lengths` gives the code token count
/// of each sample for bucketing.
EvalReport make_report(std::string model_name, std::vector<std::string> ids, std::vector<Tokens> candidates,
                       std::vector<Tokens> references, std::vector<std::size_t> code_lengths);

struct EvalOptions {
  std::string model_name = "Hybrid2Seq+Attn+DRL";
  std::size_t max_steps = kMaxCommentTokens + 1;
};

/// Greedy-decodes every sample and scores the outputs. A sample whose decode
/// fails is recorded with an empty candidate and the evaluation continues.
EvalReport evaluate(ModelParams& params, const Vocabularies& vocab, std::span<const EncodedSample> samples,
                    const EvalOptions& options = {});

}  // namespace acsum
