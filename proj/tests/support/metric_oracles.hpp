#pragma once

// Brute-force and from-the-definition reference implementations of the
// evaluation metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "acsum/metrics.hpp"

namespace acsum::oracle {

// Longest common subsequence by enumerating every subsequence of `a`.
inline std::size_t brute_lcs(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (std::uint32_t mask = 0; mask < (1u << a.size()); ++mask) {
    std::size_t j = 0, len = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask & (1u << i))) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      if (j == b.size()) ok = false;
      else {
        ++j;
        ++len;
      }
    }
    if (ok) best = std::max(best, len);
  }
  return best;
}

// Every partial one-to-one matching of equal tokens; most matches, then
// fewest chunks.
inline MeteorAlignment brute_align(const Tokens& c, const Tokens& r) {
  MeteorAlignment best;
  bool found = false;
  std::vector<int> map(c.size(), -1);
  std::vector<bool> used(r.size(), false);
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (i == c.size()) {
      std::size_t m = 0, chunks = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (map[k] < 0) continue;
        ++m;
        bool continues = k > 0 && map[k - 1] >= 0 && map[k - 1] + 1 == map[k];
        if (!continues) ++chunks;
      }
      if (!found || m > best.matches || (m == best.matches && chunks < best.chunks)) {
        best = {m, chunks};
        found = true;
      }
      return;
    }
    self(self, i + 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j] || r[j] != c[i]) continue;
      used[j] = true;
      map[i] = static_cast<int>(j);
      self(self, i + 1);
      map[i] = -1;
      used[j] = false;
    }
  };
  visit(visit, 0);
  return best;
}

using Counts = std::map<Tokens, double>;

inline Counts grams(const Tokens& s, std::size_t n) {
  Counts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out[Tokens(s.begin() + i, s.begin() + i + n)] += 1;
  return out;
}

// TF-IDF cosine written out from the definition; `k` scales every vector.
inline std::vector<double> cider_oracle(const std::vector<Tokens>& cands, const std::vector<Tokens>& refs, double k = 1.0) {
  const double n_docs = static_cast<double>(refs.size());
  std::vector<double> out(cands.size(), 0.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    Counts df;
    for (const auto& r : refs) {
      for (const auto& [g, c] : grams(r, n)) df[g] += 1;
    }
    auto vec = [&](const Tokens& s) {
      Counts v;
      for (const auto& [g, c] : grams(s, n)) v[g] = k * c * std::log(n_docs / std::max(1.0, df[g]));
      return v;
    };
    for (std::size_t i = 0; i < cands.size(); ++i) {
      Counts a = vec(cands[i]), b = vec(refs[i]);
      double dot = 0, na = 0, nb = 0;
      for (const auto& [g, x] : a) {
        na += x * x;
        if (b.count(g)) dot += x * b[g];
      }
      for (const auto& [g, y] : b) nb += y * y;
      if (na > 0 && nb > 0) out[i] += 10.0 * dot / std::sqrt(na * nb) / 4.0;
    }
  }
  return out;
}

}  // namespace acsum::oracle
