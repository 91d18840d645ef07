#include "acsum/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "acsum/error.hpp"
#include "acsum/rng.hpp"

namespace acsum {

namespace {

bool is_code_delimiter(char ch) {
  return kCodeDelimiters.find(ch) != std::string_view::npos ||
         std::isspace(static_cast<unsigned char>(ch));
}

const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> tokens = {"<pad>", "<start>", "<eos>", "<unk>"};
  return tokens;
}

}  // namespace

std::vector<std::string> tokenize_code(std::string_view code) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : code) {
    if (is_code_delimiter(ch)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  if (out.empty()) throw DataError("code tokenizes to an empty sequence");
  return out;
}

std::vector<std::string> tokenize_comment(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  if (out.empty()) throw DataError("comment is blank");
  return out;
}

Sample make_sample(std::string id, std::string code, std::string comment,
                   std::optional<std::string> ast_json) {
  Sample s;
  try {
    s.code_tokens = tokenize_code(code);
    s.comment_tokens = tokenize_comment(comment);
  } catch (const DataError& e) {
    throw DataError("sample '" + id + "': " + e.what());
  }
  if (s.code_tokens.size() > kMaxCodeTokens) s.code_tokens.resize(kMaxCodeTokens);
  if (s.comment_tokens.size() > kMaxCommentTokens) s.comment_tokens.resize(kMaxCommentTokens);
  s.id = std::move(id);
  s.code_text = std::move(code);
  s.comment_text = std::move(comment);
  s.ast_json = std::move(ast_json);
  return s;
}

Vocab::Vocab() {
  for (const auto& t : reserved_tokens()) {
    index_.emplace(t, static_cast<int>(tokens_.size()));
    tokens_.push_back(t);
  }
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  for (const auto& t : tokens) {
    if (t.empty() || v.index_.contains(t)) {
      throw DataError("vocabulary token '" + t + "' is empty or duplicated");
    }
    v.index_.emplace(t, static_cast<int>(v.tokens_.size()));
    v.tokens_.push_back(t);
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  try {
    return from_tokens(tokens);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) {
    if (tokens_[i].find('\n') != std::string::npos) {
      throw DataError("vocabulary token contains a newline: " + tokens_[i]);
    }
    out << tokens_[i] << '\n';
  }
}

int Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const { return index_.contains(std::string(token)); }

const std::string& Vocab::token(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= tokens_.size()) {
    throw DataError("vocabulary index " + std::to_string(index) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(index)];
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(index(t));
  return out;
}

std::vector<int> Vocab::encode_target(std::span<const std::string> tokens) const {
  auto out = encode(tokens);
  out.push_back(kEos);
  return out;
}

std::vector<std::string> Vocab::decode(std::span<const int> indices) const {
  std::vector<std::string> out;
  for (int i : indices) {
    if (i == kEos) break;
    if (i == kPad || i == kStart) continue;
    out.push_back(token(i));
  }
  return out;
}

Vocab build_vocab(std::span<const std::vector<std::string>> sequences, std::size_t max_size,
                  std::size_t min_count) {
  if (sequences.empty()) throw DataError("cannot build a vocabulary from an empty sample set");
  std::map<std::string, std::size_t> counts;
  for (const auto& seq : sequences)
    for (const auto& t : seq) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : counts) {
    bool reserved = std::find(reserved_tokens().begin(), reserved_tokens().end(), tok) !=
                    reserved_tokens().end();
    if (n >= min_count && !reserved) ranked.emplace_back(tok, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (auto& [tok, n] : ranked) {
    if (tokens.size() + Vocab::kReserved >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocab::from_tokens(tokens);
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  if (n == 0) throw DataError("cannot split an empty corpus");
  if (!(spec.train > 0 && spec.valid > 0 && spec.test > 0) ||
      std::abs(spec.train + spec.valid + spec.test - 1.0) > 1e-9) {
    throw UsageError("split fractions must be positive and sum to 1");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(spec.seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  auto n_train = static_cast<std::size_t>(std::llround(spec.train * static_cast<double>(n)));
  auto n_valid = static_cast<std::size_t>(std::llround(spec.valid * static_cast<double>(n)));
  if (n_train == 0 || n_valid == 0 || n_train + n_valid >= n) {
    throw DataError("split fractions leave an empty partition for a corpus of " + std::to_string(n));
  }
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), order.end());
  return out;
}

CorpusSplit split(const std::vector<Sample>& corpus, const SplitSpec& spec) {
  auto idx = split_indices(corpus.size(), spec);
  CorpusSplit out;
  for (auto i : idx.train) out.train.push_back(corpus[i]);
  for (auto i : idx.valid) out.valid.push_back(corpus[i]);
  for (auto i : idx.test) out.test.push_back(corpus[i]);
  return out;
}

std::vector<Sample> parse_corpus(std::string_view jsonl, const std::string& origin) {
  std::vector<Sample> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    auto where = origin + ":" + std::to_string(line_no) + ": ";
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!obj.is_object() || !obj.contains("code") || !obj.contains("comment") ||
        !obj["code"].is_string() || !obj["comment"].is_string()) {
      throw DataError(where + "expected an object with string fields 'code' and 'comment'");
    }
    std::string id = obj.contains("id") ? (obj["id"].is_string() ? obj["id"].get<std::string>()
                                                                 : obj["id"].dump())
                                        : std::to_string(line_no);
    std::optional<std::string> ast;
    if (obj.contains("ast") && !obj["ast"].is_null()) ast = obj["ast"].dump();
    try {
      out.push_back(make_sample(id, obj["code"].get<std::string>(), obj["comment"].get<std::string>(),
                                std::move(ast)));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return out;
}

std::vector<Sample> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), path.string());
}

void write_corpus(const std::filesystem::path& path, std::span<const Sample> samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  for (const auto& s : samples) {
    nlohmann::json obj;
    obj["id"] = s.id;
    obj["code"] = s.code_text;
    obj["comment"] = s.comment_text;
    if (s.ast_json) obj["ast"] = nlohmann::json::parse(*s.ast_json);
    out << obj.dump() << '\n';
  }
}

}  // namespace acsum
