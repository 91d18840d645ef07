#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace acsum {

/// Syntax-tree node. Leaves may carry a lexeme in `token`; internal nodes
/// never do. `merged_types` is filled only by binarize() when unary chains
/// are collapsed, and lists the types of the collapsed ancestors outermost
/// first. The surviving node keeps its own type.
struct AstNode {
  std::string type;
  std::optional<std::string> token;
  std::vector<AstNode> children;
  std::vector<std::string> merged_types;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const AstNode&) const = default;

  static AstNode leaf(std::string type, std::optional<std::string> token = std::nullopt) {
    return AstNode{std::move(type), std::move(token), {}, {}};
  }
  static AstNode node(std::string type, std::vector<AstNode> children) {
    return AstNode{std::move(type), std::nullopt, std::move(children), {}};
  }
};

inline constexpr std::string_view kAuxNodeType = "AUX";

/// Throws DataError if a token sits on an internal node.
void validate(const AstNode& root);
std::size_t node_count(const AstNode& root);
std::size_t max_arity(const AstNode& root);
/// Tokens of token-bearing leaves, left to right.
std::vector<std::string> leaf_tokens(const AstNode& root);

/// Serialized form: {"t": type, "tok": token, "c": [children]}; leaves omit
/// "c", internal nodes omit "tok". Merged nodes add "m": [types].
AstNode load_ast(std::string_view serialized);
std::string dump_ast(const AstNode& root);

/// A tree in which every node has zero or two children.
class BinaryAst {
 public:
  const AstNode& root() const { return root_; }
  bool operator==(const BinaryAst&) const = default;

 private:
  friend BinaryAst binarize(const AstNode& root);
  explicit BinaryAst(AstNode root) : root_(std::move(root)) {}
  AstNode root_;
};

/// Splits nodes wider than two children top-down (the leftmost child stays,
/// the rest move under a new AUX right child), then collapses every node that
/// has exactly one child into that child.
BinaryAst binarize(const AstNode& root);

/// Embedding key of a node: leaves yield their token (or type when they have
/// none); other nodes join their merged types and their own type with "/".
std::string node_vocab_key(const AstNode& node);

/// Parses the built-in mini-language:
///
///   def name(p1, p2):
///       x = a + b * 2
///       if x > 1:
///           return f(x)
///       else:
///           log.debug(x); return 0
///
/// A suite is either simple statements on the header line separated by ';'
/// or an indented block. Produces FunctionDef, Params, Block, If, Return,
/// Assign, Call, BinOp<op>, Name and Num nodes.
AstNode parse_minilang(std::string_view source);
/// Canonical source for a tree produced by parse_minilang.
std::string print_minilang(const AstNode& root);

}  // namespace acsum
