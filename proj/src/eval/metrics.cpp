#include "acsum/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <unordered_map>
#include <utility>

#include "acsum/error.hpp"

namespace acsum {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, double> ngrams(const Tokens& seq, int n) {
  std::map<Ngram, double> counts;
  auto len = static_cast<std::size_t>(n);
  for (std::size_t i = 0; i + len <= seq.size(); ++i) {
    counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i), seq.begin() + static_cast<std::ptrdiff_t>(i + len))] += 1.0;
  }
  return counts;
}

void check_pairs(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  if (candidates.size() != references.size()) throw DataError("candidate and reference counts differ");
  if (candidates.empty()) throw DataError("empty evaluation corpus");
}

struct AlignScore {
  std::size_t matches = 0;
  std::size_t adjacent = 0;
  bool operator<(const AlignScore& o) const {
    return matches != o.matches ? matches < o.matches : adjacent < o.adjacent;
  }
};

// Exhaustive alignment search with memoization over (candidate position,
// used reference positions, reference position of the previous match).
class Aligner {
 public:
  Aligner(const Tokens& cand, const Tokens& ref) : cand_(cand), ref_(ref) {
    for (const auto& tok : cand_) {
      std::vector<int> where;
      for (std::size_t j = 0; j < ref_.size(); ++j) {
        if (ref_[j] == tok) where.push_back(static_cast<int>(j));
      }
      options_.push_back(std::move(where));
    }
  }

  bool exact_possible() const { return ref_.size() <= 63; }

  AlignScore solve() { return best(0, 0, -1); }

  bool exhausted() const { return exhausted_; }

  AlignScore greedy() const {
    AlignScore s;
    std::vector<bool> used(ref_.size(), false);
    int last = -1;
    for (std::size_t i = 0; i < cand_.size(); ++i) {
      int pick = -1;
      for (int j : options_[i]) {
        if (used[static_cast<std::size_t>(j)]) continue;
        if (j == last + 1 && last >= 0) {
          pick = j;
          break;
        }
        if (pick < 0) pick = j;
      }
      if (pick < 0) {
        last = -1;
        continue;
      }
      used[static_cast<std::size_t>(pick)] = true;
      ++s.matches;
      if (last >= 0 && pick == last + 1) ++s.adjacent;
      last = pick;
    }
    return s;
  }

 private:
  AlignScore best(std::size_t i, std::uint64_t used, int last) {
    if (i == cand_.size() || exhausted_) return {};
    std::uint64_t key = (static_cast<std::uint64_t>(i) * 64 + static_cast<std::uint64_t>(last + 1));
    auto memo_key = std::make_pair(key, used);
    if (auto it = memo_.find(memo_key); it != memo_.end()) return it->second;
    if (memo_.size() > kMemoLimit) {
      exhausted_ = true;
      return {};
    }
    AlignScore result = best(i + 1, used, -1);
    for (int j : options_[i]) {
      std::uint64_t bit = std::uint64_t{1} << j;
      if (used & bit) continue;
      AlignScore s = best(i + 1, used | bit, j);
      s.matches += 1;
      if (last >= 0 && j == last + 1) s.adjacent += 1;
      if (result < s) result = s;
    }
    memo_.emplace(memo_key, result);
    return result;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
      return std::hash<std::uint64_t>()(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
    }
  };

  static constexpr std::size_t kMemoLimit = 2'000'000;
  const Tokens& cand_;
  const Tokens& ref_;
  std::vector<std::vector<int>> options_;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, AlignScore, PairHash> memo_;
  bool exhausted_ = false;
};

}  // namespace

NgramMatch clipped_ngram_match(const Tokens& candidate, const Tokens& reference, int n) {
  if (n < 1) throw UsageError("n-gram order must be positive");
  auto c = ngrams(candidate, n);
  auto r = ngrams(reference, n);
  NgramMatch m;
  for (const auto& [g, k] : c) {
    m.total += k;
    if (auto it = r.find(g); it != r.end()) m.matched += std::min(k, it->second);
  }
  return m;
}

double corpus_bleu(std::span<const Tokens> candidates, std::span<const Tokens> references, int n) {
  check_pairs(candidates, references);
  if (n < 1 || n > 4) throw UsageError("BLEU order must lie in 1..4");
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    NgramMatch total;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      auto m = clipped_ngram_match(candidates[i], references[i], k);
      total.matched += m.matched;
      total.total += m.total;
    }
    if (total.matched == 0.0 || total.total == 0.0) return 0.0;
    log_sum += std::log(total.matched / total.total);
  }
  double c = 0.0, r = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += static_cast<double>(candidates[i].size());
    r += static_cast<double>(references[i].size());
  }
  double bp = std::exp(std::min(0.0, 1.0 - r / c));
  return bp * std::exp(log_sum / n);
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  double l = static_cast<double>(lcs_length(candidate, reference));
  if (l == 0.0) return 0.0;
  double p = l / static_cast<double>(candidate.size());
  double r = l / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

MeteorAlignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  Aligner aligner(candidate, reference);
  AlignScore s;
  if (aligner.exact_possible()) {
    s = aligner.solve();
    if (aligner.exhausted()) s = aligner.greedy();
  } else {
    s = aligner.greedy();
  }
  return {s.matches, s.matches - s.adjacent};
}

double meteor_lite(const Tokens& candidate, const Tokens& reference) {
  if (candidate.empty() || reference.empty()) return 0.0;
  MeteorAlignment a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  double m = static_cast<double>(a.matches);
  double p = m / static_cast<double>(candidate.size());
  double r = m / static_cast<double>(reference.size());
  double f = 10.0 * p * r / (r + 9.0 * p);
  double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3.0);
  return f * (1.0 - penalty);
}

std::vector<double> cider_scores(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  check_pairs(candidates, references);
  const std::size_t count = candidates.size();
  if (count < 2) std::cerr << "warning: CIDEr over fewer than two samples, using unit IDF\n";
  std::vector<double> scores(count, 0.0);
  for (int n = 1; n <= 4; ++n) {
    std::vector<std::map<Ngram, double>> ref_grams(count), cand_grams(count);
    std::map<Ngram, double> df;
    for (std::size_t i = 0; i < count; ++i) {
      ref_grams[i] = ngrams(references[i], n);
      cand_grams[i] = ngrams(candidates[i], n);
      for (const auto& [g, k] : ref_grams[i]) df[g] += 1.0;
    }
    auto idf = [&](const Ngram& g) {
      if (count < 2) return 1.0;
      auto it = df.find(g);
      double d = it == df.end() ? 1.0 : std::max(1.0, it->second);
      return std::log(static_cast<double>(count) / d);
    };
    for (std::size_t i = 0; i < count; ++i) {
      double dot = 0.0, nc = 0.0, nr = 0.0;
      for (const auto& [g, k] : cand_grams[i]) {
        double w = k * idf(g);
        nc += w * w;
        if (auto it = ref_grams[i].find(g); it != ref_grams[i].end()) dot += w * it->second * idf(g);
      }
      for (const auto& [g, k] : ref_grams[i]) {
        double w = k * idf(g);
        nr += w * w;
      }
      if (nc > 0.0 && nr > 0.0) scores[i] += dot / (std::sqrt(nc) * std::sqrt(nr)) / 4.0;
    }
  }
  for (double& s : scores) s *= 10.0;
  return scores;
}

double cider(std::span<const Tokens> candidates, std::span<const Tokens> references) {
  auto scores = cider_scores(candidates, references);
  double total = 0.0;
  for (double s : scores) total += s;
  return total / static_cast<double>(scores.size());
}

}  // namespace acsum
