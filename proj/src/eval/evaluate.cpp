#include "acsum/evaluate.hpp"

#include <cstdio>

#include <json.hpp>

#include "acsum/decoder.hpp"
#include "acsum/error.hpp"

namespace acsum {

namespace {

struct Range {
  const char* label;
  std::size_t lo;
  std::size_t hi;
};

constexpr Range kCodeRanges[] = {{"0-20", 0, 20}, {"21-40", 21, 40}, {"41-60", 41, 60}, {"61-80", 61, 80},
                                 {"81+", 81, SIZE_MAX}};
constexpr Range kCommentRanges[] = {{"1-5", 1, 5}, {"6-10", 6, 10}, {"11-15", 11, 15}, {"16-20", 16, 20}};

std::string row(const std::string& name, const MetricScores& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %7.4f %7.4f %7.4f %7.4f %7.4f %8.4f %7.4f\n", name.c_str(), s.bleu[0],
                s.bleu[1], s.bleu[2], s.bleu[3], s.meteor, s.rouge_l, s.cider);
  return buf;
}

std::string header(const std::string& first) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %7s %7s %7s %7s %7s %8s %7s\n", first.c_str(), "BLEU-1", "BLEU-2", "BLEU-3",
                "BLEU-4", "METEOR", "ROUGE-L", "CIDEr");
  return buf;
}

nlohmann::ordered_json scores_json(const MetricScores& s) {
  nlohmann::ordered_json j;
  j["bleu1"] = s.bleu[0];
  j["bleu2"] = s.bleu[1];
  j["bleu3"] = s.bleu[2];
  j["bleu4"] = s.bleu[3];
  j["meteor"] = s.meteor;
  j["rouge_l"] = s.rouge_l;
  j["cider"] = s.cider;
  return j;
}

template <class Key>
std::vector<Bucket> bucketize(const std::vector<SampleResult>& samples, std::span<const Range> ranges, Key key) {
  std::vector<Bucket> out;
  for (const auto& r : ranges) {
    Bucket b;
    b.label = r.label;
    std::vector<Tokens> cands, refs;
    double meteor = 0, rouge = 0, cid = 0;
    for (const auto& s : samples) {
      std::size_t k = key(s);
      if (k < r.lo || k > r.hi) continue;
      cands.push_back(s.candidate);
      refs.push_back(s.reference);
      meteor += s.scores.meteor;
      rouge += s.scores.rouge_l;
      cid += s.scores.cider;
    }
    b.count = cands.size();
    if (b.count) {
      for (int n = 1; n <= 4; ++n) b.scores.bleu[static_cast<std::size_t>(n - 1)] = corpus_bleu(cands, refs, n);
      double c = static_cast<double>(b.count);
      b.scores.meteor = meteor / c;
      b.scores.rouge_l = rouge / c;
      b.scores.cider = cid / c;
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

MetricScores score_corpus(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  MetricScores s;
  for (int n = 1; n <= 4; ++n) s.bleu[static_cast<std::size_t>(n - 1)] = corpus_bleu(candidates, references, n);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    s.meteor += meteor_lite(candidates[i], references[i]);
    s.rouge_l += rouge_l(candidates[i], references[i]);
  }
  double c = static_cast<double>(candidates.size());
  s.meteor /= c;
  s.rouge_l /= c;
  s.cider = cider(candidates, references);
  return s;
}

EvalReport make_report(std::string model_name, std::vector<std::string> ids, std::vector<Tokens> candidates,
                       std::vector<Tokens> references, std::vector<std::size_t> code_lengths) {
  if (candidates.empty()) throw DataError("empty test split");
  if (ids.size() != candidates.size() || references.size() != candidates.size() ||
      code_lengths.size() != candidates.size()) {
    throw DataError("make_report: mismatched input lengths");
  }
  EvalReport report;
  report.model_name = std::move(model_name);
  report.corpus = score_corpus(candidates, references);
  auto cider_each = cider_scores(candidates, references);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    SampleResult s;
    s.id = ids[i];
    s.candidate = candidates[i];
    s.reference = references[i];
    s.code_length = code_lengths[i];
    std::span<const Tokens> c(&candidates[i], 1), r(&references[i], 1);
    for (int n = 1; n <= 4; ++n) s.scores.bleu[static_cast<std::size_t>(n - 1)] = corpus_bleu(c, r, n);
    s.scores.meteor = meteor_lite(candidates[i], references[i]);
    s.scores.rouge_l = rouge_l(candidates[i], references[i]);
    s.scores.cider = cider_each[i];
    report.samples.push_back(std::move(s));
  }
  report.by_code_length =
      bucketize(report.samples, kCodeRanges, [](const SampleResult& s) { return s.code_length; });
  report.by_comment_length =
      bucketize(report.samples, kCommentRanges, [](const SampleResult& s) { return s.reference.size(); });
  return report;
}

EvalReport evaluate(ModelParams& params, const Vocabularies& vocab, std::span<const EncodedSample> samples,
                    const EvalOptions& options) {
  if (samples.empty()) throw DataError("empty test split");
  std::vector<std::string> ids;
  std::vector<Tokens> cands, refs;
  std::vector<std::size_t> lengths;
  std::vector<std::pair<std::size_t, std::string>> errors;
  for (const auto& s : samples) {
    Tokens cand;
    try {
      Episode ep = greedy_decode(params, s, options.max_steps);
      cand = vocab.comment.decode(ep.actions);
    } catch (const Error& e) {
      errors.emplace_back(ids.size(), e.what());
    }
    ids.push_back(s.id);
    cands.push_back(std::move(cand));
    refs.push_back(s.reference);
    lengths.push_back(s.code.size());
  }
  EvalReport report = make_report(options.model_name, std::move(ids), std::move(cands), std::move(refs),
                                  std::move(lengths));
  for (auto& [i, what] : errors) {
    report.samples[i].failed = true;
    report.samples[i].error = what;
    report.samples[i].scores = MetricScores{};
  }
  report.failures = errors.size();
  return report;
}

std::string EvalReport::table() const {
  std::string out;
  out += "Evaluation over " + std::to_string(samples.size()) + " samples";
  if (failures) out += " (" + std::to_string(failures) + " decode failures scored 0)";
  out += "\nMETEOR is METEOR-lite: exact-token alignment only, no synonym or paraphrase tables.\n\n";
  out += header("Model");
  out += row(model_name, corpus);
  out += "\n" + header("Code length");
  for (const auto& b : by_code_length) out += row(b.label + " (n=" + std::to_string(b.count) + ")", b.scores);
  out += "\n" + header("Comment length");
  for (const auto& b : by_comment_length) out += row(b.label + " (n=" + std::to_string(b.count) + ")", b.scores);
  return out;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model_name;
  j["meteor_variant"] = "meteor-lite (exact match only)";
  j["samples_total"] = samples.size();
  j["failures"] = failures;
  j["corpus"] = scores_json(corpus);
  auto buckets = [](const std::vector<Bucket>& bs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& b : bs) {
      nlohmann::ordered_json e;
      e["range"] = b.label;
      e["count"] = b.count;
      e["scores"] = scores_json(b.scores);
      arr.push_back(std::move(e));
    }
    return arr;
  };
  j["by_code_length"] = buckets(by_code_length);
  j["by_comment_length"] = buckets(by_comment_length);
  nlohmann::ordered_json per = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json e;
    e["id"] = s.id;
    e["candidate"] = s.candidate;
    e["reference"] = s.reference;
    e["code_length"] = s.code_length;
    e["scores"] = scores_json(s.scores);
    if (s.failed) e["error"] = s.error;
    per.push_back(std::move(e));
  }
  j["samples"] = std::move(per);
  return j.dump(2);
}

}  // namespace acsum
