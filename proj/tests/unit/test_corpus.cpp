#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "acsum/corpus.hpp"
#include "acsum/error.hpp"
#include "acsum/rng.hpp"

using namespace acsum;
using Strings = std::vector<std::string>;

TEST(TokenizeCode, SplitsOnDelimiterSet) {
  EXPECT_EQ(tokenize_code("def f(a, b): return a"), (Strings{"def", "f", "a", "b", "return", "a"}));
}

TEST(TokenizeCode, NoDelimiters) { EXPECT_EQ(tokenize_code("x"), (Strings{"x"})); }

TEST(TokenizeCode, OnlyDelimitersIsAnError) { EXPECT_THROW(tokenize_code("((("), DataError); }

TEST(TokenizeCode, OperatorsStayAttached) {
  EXPECT_EQ(tokenize_code("return a+b"), (Strings{"return", "a+b"}));
  EXPECT_EQ(tokenize_code("x = y\n\tz"), (Strings{"x", "=", "y", "z"}));
}

TEST(TokenizeComment, LowercasesAndKeepsPunctuation) {
  EXPECT_EQ(tokenize_comment("check if git is installed ."), (Strings{"check", "if", "git", "is", "installed", "."}));
  EXPECT_EQ(tokenize_comment("Return X"), (Strings{"return", "x"}));
}

TEST(TokenizeComment, BlankIsAnError) { EXPECT_THROW(tokenize_comment(" "), DataError); }

TEST(MakeSample, TruncatesLongInputs) {
  std::string code, comment;
  for (int i = 0; i < 150; ++i) code += "t" + std::to_string(i) + " ";
  for (int i = 0; i < 30; ++i) comment += "w ";
  Sample s = make_sample("id", code, comment);
  EXPECT_EQ(s.code_tokens.size(), kMaxCodeTokens);
  EXPECT_EQ(s.comment_tokens.size(), kMaxCommentTokens);
  EXPECT_EQ(s.code_tokens.back(), "t99");
}

TEST(Vocab, FrequencyOrderAndReservedEntries) {
  std::vector<Strings> seqs{{"a", "b", "a"}};
  Vocab v = build_vocab(seqs, 10);
  EXPECT_EQ(v.tokens(), (Strings{"<pad>", "<start>", "<eos>", "<unk>", "a", "b"}));
  EXPECT_EQ(v.index("a"), 4);
  EXPECT_EQ(v.index("b"), 5);
}

TEST(Vocab, MinCountCanLeaveOnlyReserved) {
  std::vector<Strings> seqs{{"a", "b"}};
  EXPECT_EQ(build_vocab(seqs, 10, 2).size(), static_cast<std::size_t>(Vocab::kReserved));
}

TEST(Vocab, UnseenTokenMapsToUnk) {
  std::vector<Strings> seqs{{"a"}};
  EXPECT_EQ(build_vocab(seqs, 10).index("zebra"), Vocab::kUnk);
}

TEST(Vocab, TiesBreakLexicographicallyAndCapIncludesReserved) {
  std::vector<Strings> seqs{{"d", "c", "b", "a", "a"}};
  Vocab v = build_vocab(seqs, 6);
  EXPECT_EQ(v.tokens(), (Strings{"<pad>", "<start>", "<eos>", "<unk>", "a", "b"}));
}

TEST(Vocab, EncodeTargetAndDecode) {
  Vocab v = Vocab::from_tokens({"x", "y"});
  Strings toks{"y", "x", "q"};
  std::vector<int> ids = v.encode_target(toks);
  EXPECT_EQ(ids, (std::vector<int>{5, 4, Vocab::kUnk, Vocab::kEos}));
  std::vector<int> with_tail{Vocab::kStart, 4, Vocab::kPad, 5, Vocab::kEos, 4};
  EXPECT_EQ(v.decode(with_tail), (Strings{"x", "y"}));
}

TEST(Vocab, PropertySaveLoadRoundTrip) {
  Rng rng(3);
  auto dir = std::filesystem::temp_directory_path() / "acsum_vocab_test";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Strings> seqs(1 + rng.below(5));
    for (auto& s : seqs) {
      for (std::size_t i = 0, n = 1 + rng.below(30); i < n; ++i) s.push_back("tok" + std::to_string(rng.below(40)));
    }
    Vocab v = build_vocab(seqs, 4 + rng.below(40));
    v.save(dir / "v.txt");
    Vocab back = Vocab::load(dir / "v.txt");
    EXPECT_EQ(back, v);
    for (const auto& s : seqs) EXPECT_EQ(back.decode(back.encode(s)), v.decode(v.encode(s)));
  }
  std::filesystem::remove_all(dir);
}

TEST(Split, SizesFollowFractions) {
  SplitIndices s = split_indices(10, SplitSpec{42, 0.6, 0.2, 0.2});
  EXPECT_EQ(s.train.size(), 6u);
  EXPECT_EQ(s.valid.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
}

TEST(Split, SameSeedSameAssignment) {
  SplitSpec spec{7, 0.6, 0.2, 0.2};
  SplitIndices a = split_indices(50, spec), b = split_indices(50, spec);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);
  SplitIndices c = split_indices(50, SplitSpec{8, 0.6, 0.2, 0.2});
  EXPECT_NE(a.train, c.train);
}

TEST(Split, LargeCorpusProportions) {
  SplitIndices s = split_indices(100000, SplitSpec{1, 0.6, 0.2, 0.2});
  EXPECT_EQ(s.train.size(), 60000u);
  EXPECT_EQ(s.valid.size(), 20000u);
  EXPECT_EQ(s.test.size(), 20000u);
}

TEST(Split, EmptyPartitionIsAnError) {
  EXPECT_THROW(split_indices(10, SplitSpec{1, 1.0, 0.0, 0.0}), UsageError);
  EXPECT_THROW(split_indices(2, SplitSpec{1, 0.6, 0.2, 0.2}), DataError);
  EXPECT_THROW(split_indices(10, SplitSpec{1, 0.5, 0.2, 0.2}), UsageError);
}

TEST(Split, PropertyPartitionIsExactAndDisjoint) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 10 + rng.below(500);
    SplitSpec spec{rng.next(), 0.6, 0.2, 0.2};
    SplitIndices s = split_indices(n, spec);
    std::set<std::size_t> seen;
    for (const auto* part : {&s.train, &s.valid, &s.test}) {
      for (auto i : *part) {
        EXPECT_LT(i, n);
        EXPECT_TRUE(seen.insert(i).second);
      }
    }
    EXPECT_EQ(seen.size(), n);
  }
}

TEST(CorpusIo, ParseAndRoundTrip) {
  std::string text =
      R"({"id":"a","code":"def f(x): return x","comment":"Return X"})"
      "\n\n"
      R"({"id":"b","code":"y","comment":"why","ast":{"t":"Name","tok":"y"}})"
      "\n";
  auto samples = parse_corpus(text);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].comment_tokens, (Strings{"return", "x"}));
  EXPECT_FALSE(samples[0].ast_json.has_value());
  ASSERT_TRUE(samples[1].ast_json.has_value());

  auto path = std::filesystem::temp_directory_path() / "acsum_corpus_test.jsonl";
  write_corpus(path, samples);
  auto back = read_corpus(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].code_tokens, samples[1].code_tokens);
  EXPECT_EQ(back[0].comment_text, samples[0].comment_text);
  std::filesystem::remove(path);
}

TEST(CorpusIo, ErrorsNameTheLine) {
  try {
    parse_corpus("{\"id\":\"a\",\"code\":\"x\",\"comment\":\"c\"}\n{broken\n", "in.jsonl");
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("in.jsonl:2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_corpus(R"({"id":"a","code":"x"})"), DataError);
  EXPECT_THROW(read_corpus("/nonexistent/file.jsonl"), DataError);
}
