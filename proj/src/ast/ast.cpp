#include "acsum/ast.hpp"

#include <json.hpp>

#include "acsum/error.hpp"

namespace acsum {

namespace {

using nlohmann::json;

AstNode node_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) throw DataError("AST " + path + ": expected an object");
  if (!j.contains("t") || !j["t"].is_string()) throw DataError("AST " + path + ": missing string field 't'");
  AstNode node;
  node.type = j["t"].get<std::string>();
  if (j.contains("tok") && !j["tok"].is_null()) {
    if (!j["tok"].is_string()) throw DataError("AST " + path + ": 'tok' must be a string");
    node.token = j["tok"].get<std::string>();
  }
  if (j.contains("c")) {
    if (!j["c"].is_array()) throw DataError("AST " + path + ": 'c' must be an array");
    std::size_t i = 0;
    for (const auto& child : j["c"]) {
      node.children.push_back(node_from_json(child, path + "/" + std::to_string(i++)));
    }
  }
  if (j.contains("m")) {
    if (!j["m"].is_array()) throw DataError("AST " + path + ": 'm' must be an array");
    for (const auto& m : j["m"]) {
      if (!m.is_string()) throw DataError("AST " + path + ": 'm' entries must be strings");
      node.merged_types.push_back(m.get<std::string>());
    }
  }
  if (node.token && !node.children.empty()) {
    throw DataError("AST " + path + ": node '" + node.type + "' has both a token and children");
  }
  return node;
}

json node_to_json(const AstNode& node) {
  json j;
  j["t"] = node.type;
  if (node.token) j["tok"] = *node.token;
  if (!node.children.empty()) {
    json c = json::array();
    for (const auto& child : node.children) c.push_back(node_to_json(child));
    j["c"] = std::move(c);
  }
  if (!node.merged_types.empty()) j["m"] = node.merged_types;
  return j;
}

void split_wide(AstNode& node) {
  if (node.children.size() > 2) {
    AstNode aux;
    aux.type = std::string(kAuxNodeType);
    aux.children.assign(std::make_move_iterator(node.children.begin() + 1),
                        std::make_move_iterator(node.children.end()));
    node.children.resize(1);
    node.children.push_back(std::move(aux));
  }
  for (auto& child : node.children) split_wide(child);
}

// The surviving node keeps its own type; every collapsed ancestor type is
// recorded in merged_types, outermost first.
void merge_unary(AstNode& node) {
  while (node.children.size() == 1) {
    auto labels = std::move(node.merged_types);
    labels.push_back(node.type);
    AstNode child = std::move(node.children.front());
    labels.insert(labels.end(), child.merged_types.begin(), child.merged_types.end());
    node = std::move(child);
    node.merged_types = std::move(labels);
  }
  for (auto& child : node.children) merge_unary(child);
}

void collect_leaves(const AstNode& node, std::vector<std::string>& out) {
  if (node.is_leaf()) {
    if (node.token) out.push_back(*node.token);
    return;
  }
  for (const auto& c : node.children) collect_leaves(c, out);
}

}  // namespace

void validate(const AstNode& root) {
  if (root.token && !root.children.empty()) {
    throw DataError("AST node '" + root.type + "' has both a token and children");
  }
  for (const auto& c : root.children) validate(c);
}

std::size_t node_count(const AstNode& root) {
  std::size_t n = 1;
  for (const auto& c : root.children) n += node_count(c);
  return n;
}

std::size_t max_arity(const AstNode& root) {
  std::size_t m = root.children.size();
  for (const auto& c : root.children) m = std::max(m, max_arity(c));
  return m;
}

std::vector<std::string> leaf_tokens(const AstNode& root) {
  std::vector<std::string> out;
  collect_leaves(root, out);
  return out;
}

AstNode load_ast(std::string_view serialized) {
  json j;
  try {
    j = json::parse(serialized);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed AST document: ") + e.what());
  }
  return node_from_json(j, "root");
}

std::string dump_ast(const AstNode& root) { return node_to_json(root).dump(); }

BinaryAst binarize(const AstNode& root) {
  validate(root);
  AstNode copy = root;
  split_wide(copy);
  merge_unary(copy);
  return BinaryAst(std::move(copy));
}

std::string node_vocab_key(const AstNode& node) {
  if (node.is_leaf() && node.token) return *node.token;
  std::string key;
  for (const auto& t : node.merged_types) key += t + "/";
  return key + node.type;
}

}  // namespace acsum
