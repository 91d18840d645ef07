#include <cctype>
#include <string>
#include <vector>

#include "acsum/ast.hpp"
#include "acsum/error.hpp"

namespace acsum {

namespace {

enum class Tok { kName, kNum, kStr, kOp, kNewline, kIndent, kDedent, kEnd };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<int> indents{0};
    std::size_t pos = 0;
    int line = 1;
    while (pos < src_.size()) {
      std::size_t eol = src_.find('\n', pos);
      if (eol == std::string_view::npos) eol = src_.size();
      std::string_view text = src_.substr(pos, eol - pos);
      lex_line(text, line, indents);
      pos = eol + 1;
      ++line;
    }
    while (indents.size() > 1) {
      indents.pop_back();
      out_.push_back({Tok::kDedent, "", line, 1});
    }
    out_.push_back({Tok::kEnd, "", line, 1});
    return std::move(out_);
  }

 private:
  void lex_line(std::string_view text, int line, std::vector<int>& indents) {
    std::size_t i = 0;
    int width = 0;
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) {
      width += text[i] == '\t' ? 4 : 1;
      ++i;
    }
    if (i == text.size() || text[i] == '\r') return;  // blank line
    if (width > indents.back()) {
      indents.push_back(width);
      out_.push_back({Tok::kIndent, "", line, width + 1});
    } else {
      while (width < indents.back()) {
        indents.pop_back();
        out_.push_back({Tok::kDedent, "", line, width + 1});
      }
      if (width != indents.back()) throw ParseError("inconsistent indentation", line, width + 1);
    }
    while (i < text.size()) {
      char ch = text[i];
      int col = static_cast<int>(i) + 1;
      if (ch == ' ' || ch == '\t' || ch == '\r') {
        ++i;
      } else if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
        std::size_t start = i;
        while (i < text.size()) {
          char c = text[i];
          if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            ++i;
          } else if (c == '.' && i + 1 < text.size() &&
                     (std::isalpha(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '_')) {
            ++i;
          } else {
            break;
          }
        }
        out_.push_back({Tok::kName, std::string(text.substr(start, i - start)), line, col});
      } else if (std::isdigit(static_cast<unsigned char>(ch))) {
        std::size_t start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i + 1 < text.size() && text[i] == '.' && std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
          ++i;
          while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        }
        out_.push_back({Tok::kNum, std::string(text.substr(start, i - start)), line, col});
      } else if (ch == '\'' || ch == '"') {
        std::size_t close = text.find(ch, i + 1);
        if (close == std::string_view::npos) throw ParseError("unterminated string", line, col);
        out_.push_back({Tok::kStr, std::string(text.substr(i + 1, close - i - 1)), line, col});
        i = close + 1;
      } else {
        static const std::string_view two[] = {"==", "!=", "<=", ">="};
        bool matched = false;
        for (auto op : two) {
          if (text.substr(i, 2) == op) {
            out_.push_back({Tok::kOp, std::string(op), line, col});
            i += 2;
            matched = true;
            break;
          }
        }
        if (matched) continue;
        if (std::string_view("+-*/<>=(),:;").find(ch) == std::string_view::npos) {
          throw ParseError(std::string("unexpected character '") + ch + "'", line, col);
        }
        out_.push_back({Tok::kOp, std::string(1, ch), line, col});
        ++i;
      }
    }
    out_.push_back({Tok::kNewline, "", line, static_cast<int>(text.size()) + 1});
  }

  std::string_view src_;
  std::vector<Token> out_;
};

bool is_keyword(const std::string& s) {
  return s == "def" || s == "return" || s == "if" || s == "else";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  AstNode function() {
    expect_keyword("def");
    const Token& name = peek();
    if (name.kind != Tok::kName || is_keyword(name.text)) fail("expected function name");
    ++pos_;
    expect_op("(");
    AstNode params = AstNode::node("Params", {});
    if (!at_op(")")) {
      do {
        const Token& p = peek();
        if (p.kind != Tok::kName || is_keyword(p.text)) fail("expected parameter name");
        params.children.push_back(AstNode::leaf("Name", p.text));
        ++pos_;
      } while (accept_op(","));
    }
    expect_op(")");
    expect_op(":");
    AstNode fn = AstNode::node("FunctionDef", {});
    fn.children.push_back(std::move(params));
    for (auto& s : suite()) fn.children.push_back(std::move(s));
    while (peek().kind == Tok::kNewline) ++pos_;
    if (peek().kind != Tok::kEnd) fail("unexpected input after function body");
    return fn;
  }

 private:
  std::vector<AstNode> suite() {
    std::vector<AstNode> body;
    if (peek().kind == Tok::kNewline) {
      ++pos_;
      if (peek().kind != Tok::kIndent) fail("expected an indented block");
      ++pos_;
      while (peek().kind != Tok::kDedent && peek().kind != Tok::kEnd) statement(body);
      if (peek().kind == Tok::kDedent) ++pos_;
    } else {
      simple_statements(body);
    }
    if (body.empty()) fail("empty block");
    return body;
  }

  void statement(std::vector<AstNode>& body) {
    if (at_keyword("if")) {
      body.push_back(if_statement());
    } else {
      simple_statements(body);
    }
  }

  AstNode if_statement() {
    expect_keyword("if");
    AstNode node = AstNode::node("If", {});
    node.children.push_back(expression());
    expect_op(":");
    node.children.push_back(AstNode::node("Block", suite()));
    if (at_keyword("else")) {
      ++pos_;
      expect_op(":");
      node.children.push_back(AstNode::node("Block", suite()));
    }
    return node;
  }

  void simple_statements(std::vector<AstNode>& body) {
    body.push_back(simple());
    while (accept_op(";")) {
      if (peek().kind == Tok::kNewline || peek().kind == Tok::kEnd) break;
      body.push_back(simple());
    }
    if (peek().kind == Tok::kNewline) {
      ++pos_;
    } else if (peek().kind != Tok::kEnd) {
      fail("expected end of statement");
    }
  }

  AstNode simple() {
    if (at_keyword("return")) {
      ++pos_;
      return AstNode::node("Return", {expression()});
    }
    const Token& t = peek();
    if (t.kind == Tok::kName && !is_keyword(t.text) && toks_[pos_ + 1].kind == Tok::kOp &&
        toks_[pos_ + 1].text == "=") {
      pos_ += 2;
      AstNode target = AstNode::leaf("Name", t.text);
      return AstNode::node("Assign", {std::move(target), expression()});
    }
    AstNode e = expression();
    if (e.type != "Call") fail("expression statement must be a call");
    return e;
  }

  AstNode expression() {
    AstNode lhs = arith();
    static const char* cmp[] = {"==", "!=", "<=", ">=", "<", ">"};
    for (const char* op : cmp) {
      if (accept_op(op)) {
        AstNode rhs = arith();
        return AstNode::node(std::string("BinOp") + op, {std::move(lhs), std::move(rhs)});
      }
    }
    return lhs;
  }

  AstNode arith() {
    AstNode lhs = term();
    while (at_op("+") || at_op("-")) {
      std::string op = toks_[pos_++].text;
      lhs = AstNode::node("BinOp" + op, {std::move(lhs), term()});
    }
    return lhs;
  }

  AstNode term() {
    AstNode lhs = factor();
    while (at_op("*") || at_op("/")) {
      std::string op = toks_[pos_++].text;
      lhs = AstNode::node("BinOp" + op, {std::move(lhs), factor()});
    }
    return lhs;
  }

  AstNode factor() {
    const Token& t = peek();
    if (t.kind == Tok::kNum) {
      ++pos_;
      return AstNode::leaf("Num", t.text);
    }
    if (t.kind == Tok::kStr) {
      ++pos_;
      return AstNode::leaf("Str", t.text);
    }
    if (t.kind == Tok::kName && !is_keyword(t.text)) {
      ++pos_;
      AstNode name = AstNode::leaf("Name", t.text);
      if (!accept_op("(")) return name;
      AstNode call = AstNode::node("Call", {std::move(name)});
      if (!at_op(")")) {
        do {
          call.children.push_back(expression());
        } while (accept_op(","));
      }
      expect_op(")");
      return call;
    }
    if (accept_op("(")) {
      AstNode inner = expression();
      expect_op(")");
      return inner;
    }
    fail("expected an expression");
  }

  const Token& peek() const { return toks_[pos_]; }
  bool at_op(const char* op) const { return peek().kind == Tok::kOp && peek().text == op; }
  bool at_keyword(const char* kw) const { return peek().kind == Tok::kName && peek().text == kw; }
  bool accept_op(const char* op) {
    if (!at_op(op)) return false;
    ++pos_;
    return true;
  }
  void expect_op(const char* op) {
    if (!accept_op(op)) fail(std::string("expected '") + op + "'");
  }
  void expect_keyword(const char* kw) {
    if (!at_keyword(kw)) fail(std::string("expected '") + kw + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    const Token& t = peek();
    std::string found;
    switch (t.kind) {
      case Tok::kNewline: found = "end of line"; break;
      case Tok::kIndent: found = "indent"; break;
      case Tok::kDedent: found = "dedent"; break;
      case Tok::kEnd: found = "end of input"; break;
      default: found = "'" + t.text + "'";
    }
    throw ParseError("syntax error: " + what + ", found " + found, t.line, t.column);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

int precedence(const std::string& type) {
  if (type == "BinOp*" || type == "BinOp/") return 3;
  if (type == "BinOp+" || type == "BinOp-") return 2;
  if (type.rfind("BinOp", 0) == 0) return 1;
  return 4;
}

std::string print_expr(const AstNode& e) {
  if (e.type == "Name" || e.type == "Num") return e.token.value_or("");
  if (e.type == "Str") return "'" + e.token.value_or("") + "'";
  if (e.type == "Call") {
    std::string out = print_expr(e.children.at(0)) + "(";
    for (std::size_t i = 1; i < e.children.size(); ++i) {
      if (i > 1) out += ", ";
      out += print_expr(e.children[i]);
    }
    return out + ")";
  }
  if (e.type.rfind("BinOp", 0) == 0 && e.children.size() == 2) {
    int p = precedence(e.type);
    std::string op = e.type.substr(5);
    auto side = [&](const AstNode& c, bool right) {
      int cp = precedence(c.type);
      bool wrap = cp < p || (right && cp == p) || (p == 1 && cp == 1);
      return wrap ? "(" + print_expr(c) + ")" : print_expr(c);
    };
    return side(e.children[0], false) + " " + op + " " + side(e.children[1], true);
  }
  throw DataError("cannot print node '" + e.type + "' as a mini-language expression");
}

void print_stmt(const AstNode& s, int depth, std::string& out);

void print_block(const std::vector<AstNode>& stmts, std::size_t first, int depth, std::string& out) {
  out += "\n";
  for (std::size_t i = first; i < stmts.size(); ++i) print_stmt(stmts[i], depth, out);
}

void print_stmt(const AstNode& s, int depth, std::string& out) {
  std::string pad(static_cast<std::size_t>(depth) * 4, ' ');
  if (s.type == "Return") {
    out += pad + "return " + print_expr(s.children.at(0)) + "\n";
  } else if (s.type == "Assign") {
    out += pad + s.children.at(0).token.value_or("") + " = " + print_expr(s.children.at(1)) + "\n";
  } else if (s.type == "If") {
    out += pad + "if " + print_expr(s.children.at(0)) + ":";
    print_block(s.children.at(1).children, 0, depth + 1, out);
    if (s.children.size() > 2) {
      out += pad + "else:";
      print_block(s.children[2].children, 0, depth + 1, out);
    }
  } else {
    out += pad + print_expr(s) + "\n";
  }
}

}  // namespace

AstNode parse_minilang(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.function();
}

std::string print_minilang(const AstNode& root) {
  if (root.type != "FunctionDef" || root.children.empty() || root.children[0].type != "Params") {
    throw DataError("print_minilang: expected a FunctionDef produced by parse_minilang");
  }
  std::string out = "def f(";
  const auto& params = root.children[0].children;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) out += ", ";
    out += params[i].token.value_or("");
  }
  out += "):";
  print_block(root.children, 1, 1, out);
  return out;
}

}  // namespace acsum
