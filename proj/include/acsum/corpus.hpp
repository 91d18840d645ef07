#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace acsum {

/// Characters that separate code tokens. Any other whitespace (tab, newline)
/// is folded into the space class.
inline constexpr std::string_view kCodeDelimiters = ".,\"':;)(! ";

inline constexpr std::size_t kMaxCodeTokens = 100;
inline constexpr std::size_t kMaxCommentTokens = 20;

std::vector<std::string> tokenize_code(std::string_view code);
/// Whitespace split, lowercased. The end-of-sequence marker is appended later
/// by Vocab::encode_target.
std::vector<std::string> tokenize_comment(std::string_view text);

/// One code/comment pair. `ast_json` holds the serialized tree when the input
/// supplied one (or after `prepare` parsed the code).
struct Sample {
  std::string id;
  std::string code_text;
  std::string comment_text;
  std::vector<std::string> code_tokens;
  std::vector<std::string> comment_tokens;
  std::optional<std::string> ast_json;
};

Sample make_sample(std::string id, std::string code, std::string comment,
                   std::optional<std::string> ast_json = std::nullopt);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kStart = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  Vocab();
  /// Reserved entries followed by `tokens` in order.
  static Vocab from_tokens(const std::vector<std::string>& tokens);

  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  int index(std::string_view token) const;
  const std::string& token(int index) const;
  bool contains(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  /// encode() plus a trailing end-of-sequence index.
  std::vector<int> encode_target(std::span<const std::string> tokens) const;
  /// Stops at the first end-of-sequence index; drops padding and start.
  std::vector<std::string> decode(std::span<const int> indices) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Ranks tokens by descending frequency, then lexicographically, keeps those
/// seen at least `min_count` times, and caps the total size (reserved entries
/// included) at `max_size`.
Vocab build_vocab(std::span<const std::vector<std::string>> sequences, std::size_t max_size,
                  std::size_t min_count = 1);

struct SplitSpec {
  std::uint64_t seed = 0;
  double train = 0.6;
  double valid = 0.2;
  double test = 0.2;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// Fisher-Yates shuffle with `spec.seed`, then contiguous slicing.
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

struct CorpusSplit {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
};

CorpusSplit split(const std::vector<Sample>& corpus, const SplitSpec& spec);

/// JSON Lines with fields id, code, comment and optional ast.
std::vector<Sample> read_corpus(const std::filesystem::path& path);
std::vector<Sample> parse_corpus(std::string_view jsonl, const std::string& origin = "<memory>");
void write_corpus(const std::filesystem::path& path, std::span<const Sample> samples);

}  // namespace acsum
