#include <gtest/gtest.h>

#include "acsum/ast.hpp"
#include "acsum/error.hpp"
#include "acsum/rng.hpp"
#include "oracles.hpp"

using namespace acsum;

namespace {

AstNode leaf(const std::string& tok) { return AstNode::leaf("Name", tok); }

bool all_binary(const AstNode& n) {
  if (n.children.size() != 0 && n.children.size() != 2) return false;
  for (const auto& c : n.children) {
    if (!all_binary(c)) return false;
  }
  return true;
}

}  // namespace

TEST(Minilang, BinaryExpressionFunction) {
  AstNode got = parse_minilang("def f(a,b): return a+b");
  AstNode want = AstNode::node(
      "FunctionDef",
      {AstNode::node("Params", {leaf("a"), leaf("b")}),
       AstNode::node("Return", {AstNode::node("BinOp+", {leaf("a"), leaf("b")})})});
  EXPECT_EQ(got, want);
}

TEST(Minilang, EmptyParameterList) {
  AstNode got = parse_minilang("def g(): return 1");
  AstNode want = AstNode::node("FunctionDef", {AstNode::leaf("Params"),
                                               AstNode::node("Return", {AstNode::leaf("Num", "1")})});
  EXPECT_EQ(got, want);
}

TEST(Minilang, SyntaxErrorReportsPosition) {
  try {
    parse_minilang("def f(:");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 7);
  }
}

TEST(Minilang, BlocksAndPrecedence) {
  std::string src =
      "def f(a, b):\n"
      "    x = a + b * 2\n"
      "    if x > 1:\n"
      "        return g(x)\n"
      "    else:\n"
      "        log.debug(x); return 0\n";
  AstNode tree = parse_minilang(src);
  ASSERT_EQ(tree.children.size(), 3u);
  const AstNode& assign = tree.children[1];
  EXPECT_EQ(assign.type, "Assign");
  EXPECT_EQ(assign.children[1].type, "BinOp+");
  EXPECT_EQ(assign.children[1].children[1].type, "BinOp*");
  const AstNode& branch = tree.children[2];
  EXPECT_EQ(branch.type, "If");
  ASSERT_EQ(branch.children.size(), 3u);
  EXPECT_EQ(branch.children[2].children.size(), 2u);
  EXPECT_EQ(branch.children[2].children[0].children[0].token, "log.debug");
}

TEST(Minilang, PrintParseRoundTrip) {
  for (const char* src : {"def f(a, b): return (a - b) * (a + b)", "def h(x): y = x / 2; return y",
                          "def k():\n    if a == b:\n        return \"s\"\n    return f(1, g(2))\n"}) {
    AstNode tree = parse_minilang(src);
    EXPECT_EQ(parse_minilang(print_minilang(tree)), tree) << src;
  }
}

TEST(Minilang, UnterminatedStringIsAnError) {
  EXPECT_THROW(parse_minilang("def f(): return \"abc"), ParseError);
}

TEST(AstJson, SingleLeaf) {
  AstNode n = load_ast(R"({"t":"Name","tok":"x"})");
  EXPECT_EQ(n, leaf("x"));
}

TEST(AstJson, NestedThreeChildren) {
  AstNode n = load_ast(R"({"t":"Call","c":[{"t":"Name","tok":"f"},{"t":"Num","tok":"1"},{"t":"Num","tok":"2"}]})");
  EXPECT_EQ(n.children.size(), 3u);
  EXPECT_EQ(load_ast(dump_ast(n)), n);
}

TEST(AstJson, TokenOnInternalNodeIsAnError) {
  EXPECT_THROW(load_ast(R"({"t":"Call","tok":"f","c":[{"t":"Name","tok":"x"}]})"), DataError);
  EXPECT_THROW(load_ast(R"({"tok":"x"})"), DataError);
  EXPECT_THROW(load_ast("not json"), DataError);
}

TEST(Binarize, SplitsThreeChildren) {
  AstNode p = AstNode::node("P", {leaf("a"), leaf("b"), leaf("c")});
  AstNode want = AstNode::node("P", {leaf("a"), AstNode::node("AUX", {leaf("b"), leaf("c")})});
  EXPECT_EQ(binarize(p).root(), want);
}

TEST(Binarize, SplitsFourChildrenRecursively) {
  AstNode p = AstNode::node("P", {leaf("a"), leaf("b"), leaf("c"), leaf("d")});
  AstNode want = AstNode::node(
      "P", {leaf("a"), AstNode::node("AUX", {leaf("b"), AstNode::node("AUX", {leaf("c"), leaf("d")})})});
  EXPECT_EQ(binarize(p).root(), want);
}

TEST(Binarize, UnaryChainCollapsesIntoLeaf) {
  AstNode chain = AstNode::node("P", {AstNode::node("Q", {leaf("x")})});
  AstNode got = binarize(chain).root();
  EXPECT_TRUE(got.is_leaf());
  EXPECT_EQ(got.type, "Name");
  EXPECT_EQ(got.token, "x");
  EXPECT_EQ(got.merged_types, (std::vector<std::string>{"P", "Q"}));
}

TEST(Binarize, MergedInternalNodeKeepsOwnType) {
  AstNode ret = AstNode::node("Return", {AstNode::node("BinOp+", {leaf("a"), leaf("b")})});
  AstNode got = binarize(ret).root();
  EXPECT_EQ(got.type, "BinOp+");
  EXPECT_EQ(got.merged_types, (std::vector<std::string>{"Return"}));
  EXPECT_EQ(node_vocab_key(got), "Return/BinOp+");
}

TEST(Binarize, PropertyInvariantsOnRandomTrees) {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    AstNode tree = oracle::random_tree(rng, 200, 6);
    BinaryAst bin = binarize(tree);
    EXPECT_TRUE(all_binary(bin.root()));
    EXPECT_EQ(leaf_tokens(bin.root()), leaf_tokens(tree));
    EXPECT_EQ(binarize(bin.root()), bin);
  }
}

TEST(NodeVocabKey, Cases) {
  EXPECT_EQ(node_vocab_key(AstNode::leaf("Name", "git")), "git");
  EXPECT_EQ(node_vocab_key(AstNode::node("BinOp+", {leaf("a"), leaf("b")})), "BinOp+");
  EXPECT_EQ(node_vocab_key(AstNode::leaf("Params")), "Params");
}

TEST(AstStats, CountsAndArity) {
  AstNode t = AstNode::node("P", {leaf("a"), AstNode::node("Q", {leaf("b"), leaf("c"), leaf("d")})});
  EXPECT_EQ(node_count(t), 6u);
  EXPECT_EQ(max_arity(t), 3u);
  EXPECT_EQ(leaf_tokens(t), (std::vector<std::string>{"a", "b", "c", "d"}));
}
