#pragma once

#include <span>
#include <string>
#include <vector>

namespace acsum {

using Tokens = std::vector<std::string>;

/// Corpus-level BLEU-n: clipped n-gram counts are summed over the corpus,
/// combined as a geometric mean of p_1..p_n and scaled by the brevity
/// penalty exp(min(0, 1 - r/c)).
double corpus_bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int n);

/// Clipped matches and candidate n-gram total of one pair.
struct NgramMatch {
  double matched = 0.0;
  double total = 0.0;
};
NgramMatch clipped_ngram_match(const Tokens& candidate, const Tokens& reference, int n);

std::size_t lcs_length(const Tokens& a, const Tokens& b);
/// LCS-based F1 (beta = 1).
double rouge_l(const Tokens& candidate, const Tokens& reference);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};
/// Exact-token alignment with the most matches and, among those, the fewest
/// chunks.
MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference);
/// METEOR without synonym or paraphrase matching: F = 10PR/(R + 9P),
/// penalty 0.5 (chunks/matches)^3.
double meteor_lite(const Tokens& candidate, const Tokens& reference);

/// Per-sample CIDEr (n = 1..4, TF-IDF cosine, IDF over the references,
/// times 10). With fewer than two samples the IDF weights are all 1.
std::vector<double> cider_scores(std::span<const Tokens> candidates, std::span<const Tokens> references);
double cider(std::span<const Tokens> candidates, std::span<const Tokens> references);

}  // namespace acsum
