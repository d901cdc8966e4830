#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "slicegraph/python/ast.hpp"
#include "slicegraph/python/tokenizer.hpp"

namespace slicegraph::python {

inline bool is_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 35> kKeywords = {
      "False", "None",   "True",    "and",      "as",   "assert", "async", "await",  "break",
      "class", "continue", "def",   "del",      "elif", "else",   "except", "finally", "for",
      "from",  "global", "if",      "import",   "in",   "is",     "lambda", "nonlocal", "not",
      "or",    "pass",   "raise",   "return",   "try",  "while",  "with",  "yield"};
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

// Decodes the value of a (possibly prefixed, possibly triple-quoted) string
// literal. Only the common escapes are interpreted; this feeds docstrings.
inline std::string string_literal_value(std::string_view raw) {
  std::size_t q = raw.find_first_of("'\"");
  if (q == std::string_view::npos) return {};
  bool is_raw = false;
  for (char c : raw.substr(0, q)) is_raw = is_raw || c == 'r' || c == 'R';
  std::string_view body = raw.substr(q);
  std::size_t quote_len = (body.size() >= 6 && body[0] == body[1] && body[1] == body[2]) ? 3 : 1;
  if (body.size() < 2 * quote_len) return {};
  body = body.substr(quote_len, body.size() - 2 * quote_len);
  if (is_raw) return std::string(body);
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '\\' || i + 1 == body.size()) {
      out += body[i];
      continue;
    }
    char n = body[++i];
    switch (n) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case '\\': out += '\\'; break;
      case '\'': out += '\''; break;
      case '"': out += '"'; break;
      case '\n': break;
      default:
        out += '\\';
        out += n;
    }
  }
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Module parse_module() {
    Module m;
    while (peek().kind != Tok::End) parse_statement(m.body);
    return m;
  }

  // Parses a standalone expression (used for f-string fields).
  ExprPtr parse_expression_only() {
    auto e = parse_testlist_star_expr(/*allow_named=*/true);
    while (peek().kind == Tok::Newline) next();
    if (peek().kind != Tok::End) fail();
    return e;
  }

 private:
  // ---- token helpers ------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    std::size_t i = std::min(pos_ + k, toks_.size() - 1);
    return toks_[i];
  }
  bool at_op(std::string_view op, std::size_t k = 0) const {
    const auto& t = peek(k);
    return t.kind == Tok::Op && t.text == op;
  }
  bool at_kw(std::string_view kw, std::size_t k = 0) const {
    const auto& t = peek(k);
    return t.kind == Tok::Name && t.text == kw;
  }
  bool at_identifier(std::size_t k = 0) const {
    const auto& t = peek(k);
    return t.kind == Tok::Name && !is_keyword(t.text);
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    if (t.kind == Tok::Name || t.kind == Tok::Number || t.kind == Tok::String || t.kind == Tok::Op) {
      last_line_ = t.end_line;
    }
    return t;
  }
  [[noreturn]] void fail() const {
    const auto& t = peek();
    std::string near = t.kind == Tok::Newline ? "end of line"
                       : t.kind == Tok::Indent ? "indent"
                       : t.kind == Tok::Dedent ? "dedent"
                       : t.kind == Tok::End    ? "end of file"
                                               : "'" + t.text + "'";
    throw SyntaxError(t.line, "invalid syntax near " + near);
  }
  void expect_op(std::string_view op) {
    if (!at_op(op)) fail();
    next();
  }
  void expect_kw(std::string_view kw) {
    if (!at_kw(kw)) fail();
    next();
  }
  std::string expect_identifier() {
    if (!at_identifier()) fail();
    return next().text;
  }
  void expect_newline() {
    if (peek().kind != Tok::Newline) fail();
    next();
  }

  bool can_start_expr(std::size_t k = 0) const {
    const auto& t = peek(k);
    switch (t.kind) {
      case Tok::Number:
      case Tok::String: return true;
      case Tok::Name:
        return !is_keyword(t.text) || t.text == "None" || t.text == "True" || t.text == "False" ||
               t.text == "not" || t.text == "lambda" || t.text == "await";
      case Tok::Op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default: return false;
    }
  }

  // ---- statements ---------------------------------------------------------

  void parse_statement(Block& out) {
    const auto& t = peek();
    if (t.kind == Tok::Indent) throw SyntaxError(t.line, "unexpected indent");
    if (t.kind == Tok::Dedent || t.kind == Tok::Newline) fail();
    if (at_op("@")) {
      out.push_back(parse_decorated());
      return;
    }
    if (t.kind == Tok::Name) {
      const std::string& w = t.text;
      if (w == "def") return out.push_back(parse_funcdef({}));
      if (w == "class") return out.push_back(parse_classdef({}));
      if (w == "if") return out.push_back(parse_if());
      if (w == "while") return out.push_back(parse_while());
      if (w == "for") return out.push_back(parse_for());
      if (w == "try") return out.push_back(parse_try());
      if (w == "with") return out.push_back(parse_with());
      if (w == "async") {
        if (at_kw("def", 1)) return out.push_back(parse_funcdef({}));
        if (at_kw("for", 1)) return out.push_back(parse_for());
        if (at_kw("with", 1)) return out.push_back(parse_with());
        fail();
      }
      if (w == "match" && !at_op("=", 1) && !at_op(".", 1)) {
        std::size_t saved = pos_;
        int saved_line = last_line_;
        try {
          out.push_back(parse_match());
          return;
        } catch (const SyntaxError&) {
          pos_ = saved;
          last_line_ = saved_line;
        }
      }
    }
    parse_simple_line(out);
  }

  void parse_simple_line(Block& out) {
    while (true) {
      out.push_back(parse_small_stmt());
      if (at_op(";")) {
        next();
        if (peek().kind == Tok::Newline) break;
        continue;
      }
      break;
    }
    expect_newline();
  }

  StmtPtr new_stmt(StmtKind kind) {
    auto s = std::make_unique<Stmt>();
    s->kind = kind;
    s->line = peek().line;
    return s;
  }

  void push_block(Stmt& s) {
    s.values_before_block.push_back(s.values.size());
    s.blocks.push_back(parse_suite());
  }

  StmtPtr finish(StmtPtr s) {
    s->end_line = std::max(s->line, last_line_);
    return s;
  }

  StmtPtr parse_small_stmt() {
    const auto& t = peek();
    if (t.kind == Tok::Name) {
      const std::string w = t.text;
      if (w == "pass" || w == "break" || w == "continue") {
        auto s = new_stmt(w == "pass" ? StmtKind::Pass : (w == "break" ? StmtKind::Break : StmtKind::Continue));
        next();
        return finish(std::move(s));
      }
      if (w == "return") {
        auto s = new_stmt(StmtKind::Return);
        next();
        if (can_start_expr()) s->values.push_back(parse_testlist_star_expr(false));
        return finish(std::move(s));
      }
      if (w == "raise") {
        auto s = new_stmt(StmtKind::Raise);
        next();
        if (can_start_expr()) {
          s->values.push_back(parse_test());
          if (at_kw("from")) {
            next();
            s->values.push_back(parse_test());
          }
        }
        return finish(std::move(s));
      }
      if (w == "global" || w == "nonlocal") {
        auto s = new_stmt(w == "global" ? StmtKind::Global : StmtKind::Nonlocal);
        next();
        s->names.push_back(expect_identifier());
        while (at_op(",")) {
          next();
          s->names.push_back(expect_identifier());
        }
        return finish(std::move(s));
      }
      if (w == "del") {
        auto s = new_stmt(StmtKind::Del);
        next();
        s->targets.push_back(parse_exprlist());
        return finish(std::move(s));
      }
      if (w == "assert") {
        auto s = new_stmt(StmtKind::Assert);
        next();
        s->values.push_back(parse_test());
        if (at_op(",")) {
          next();
          s->values.push_back(parse_test());
        }
        return finish(std::move(s));
      }
      if (w == "import") return parse_import();
      if (w == "from") return parse_from_import();
      if (w == "type" && at_identifier(1) && (at_op("=", 2) || at_op("[", 2))) {
        auto s = new_stmt(StmtKind::TypeAlias);
        next();
        s->name = next().text;
        if (at_op("[")) skip_brackets();
        expect_op("=");
        s->values.push_back(parse_test());
        return finish(std::move(s));
      }
      if (w == "yield") {
        auto s = new_stmt(StmtKind::Expr);
        s->values.push_back(parse_yield());
        return finish(std::move(s));
      }
    }
    return parse_expr_stmt();
  }

  StmtPtr parse_expr_stmt() {
    static constexpr std::array<std::string_view, 13> kAugOps = {"+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                                                 ">>=", "<<=", "&=", "|=", "^=", "@="};
    auto s = new_stmt(StmtKind::Expr);
    auto first = parse_testlist_star_expr(false);
    const auto& t = peek();
    if (t.kind == Tok::Op && std::find(kAugOps.begin(), kAugOps.end(), t.text) != kAugOps.end()) {
      s->kind = StmtKind::AugAssign;
      s->name = next().text;
      s->targets.push_back(std::move(first));
      s->values.push_back(at_kw("yield") ? parse_yield() : parse_testlist_star_expr(false));
      return finish(std::move(s));
    }
    if (at_op(":")) {
      next();
      s->kind = StmtKind::AnnAssign;
      s->targets.push_back(std::move(first));
      s->values.push_back(parse_test());
      if (at_op("=")) {
        next();
        s->has_value = true;
        s->values.push_back(at_kw("yield") ? parse_yield() : parse_testlist_star_expr(false));
      }
      return finish(std::move(s));
    }
    if (at_op("=")) {
      s->kind = StmtKind::Assign;
      std::vector<ExprPtr> chain;
      chain.push_back(std::move(first));
      while (at_op("=")) {
        next();
        chain.push_back(at_kw("yield") ? parse_yield() : parse_testlist_star_expr(false));
      }
      s->values.push_back(std::move(chain.back()));
      chain.pop_back();
      s->targets = std::move(chain);
      return finish(std::move(s));
    }
    s->values.push_back(std::move(first));
    return finish(std::move(s));
  }

  std::string parse_dotted_name() {
    std::string name = expect_identifier();
    while (at_op(".")) {
      next();
      name += '.';
      name += expect_identifier();
    }
    return name;
  }

  StmtPtr parse_import() {
    auto s = new_stmt(StmtKind::Import);
    expect_kw("import");
    while (true) {
      ImportedName n{parse_dotted_name(), {}};
      if (at_kw("as")) {
        next();
        n.asname = expect_identifier();
      }
      s->imports.push_back(std::move(n));
      if (!at_op(",")) break;
      next();
    }
    return finish(std::move(s));
  }

  StmtPtr parse_from_import() {
    auto s = new_stmt(StmtKind::ImportFrom);
    expect_kw("from");
    while (at_op(".") || at_op("...")) s->import_level += static_cast<int>(next().text.size());
    if (!at_kw("import")) s->from_module = parse_dotted_name();
    if (s->import_level == 0 && s->from_module.empty()) fail();
    expect_kw("import");
    if (at_op("*")) {
      next();
      s->imports.push_back({"*", {}});
      return finish(std::move(s));
    }
    bool paren = at_op("(");
    if (paren) next();
    while (true) {
      ImportedName n{expect_identifier(), {}};
      if (at_kw("as")) {
        next();
        n.asname = expect_identifier();
      }
      s->imports.push_back(std::move(n));
      if (!at_op(",")) break;
      next();
      if (paren && at_op(")")) break;
    }
    if (paren) expect_op(")");
    return finish(std::move(s));
  }

  Block parse_suite() {
    expect_op(":");
    Block block;
    if (peek().kind != Tok::Newline) {
      parse_simple_line(block);
      return block;
    }
    next();
    if (peek().kind != Tok::Indent) throw SyntaxError(peek().line, "expected an indented block");
    next();
    while (peek().kind != Tok::Dedent && peek().kind != Tok::End) parse_statement(block);
    if (peek().kind == Tok::Dedent) next();
    return block;
  }

  StmtPtr parse_if() {
    auto s = new_stmt(StmtKind::If);
    next();
    s->values.push_back(parse_named_test());
    push_block(*s);
    while (at_kw("elif")) {
      next();
      s->values.push_back(parse_named_test());
      push_block(*s);
    }
    if (at_kw("else")) {
      next();
      push_block(*s);
    }
    return finish(std::move(s));
  }

  StmtPtr parse_while() {
    auto s = new_stmt(StmtKind::While);
    next();
    s->values.push_back(parse_named_test());
    push_block(*s);
    if (at_kw("else")) {
      next();
      push_block(*s);
    }
    return finish(std::move(s));
  }

  StmtPtr parse_for() {
    auto s = new_stmt(StmtKind::For);
    if (at_kw("async")) next();
    expect_kw("for");
    s->targets.push_back(parse_exprlist());
    expect_kw("in");
    s->values.push_back(parse_testlist_star_expr(false));
    push_block(*s);
    if (at_kw("else")) {
      next();
      push_block(*s);
    }
    return finish(std::move(s));
  }

  StmtPtr parse_try() {
    auto s = new_stmt(StmtKind::Try);
    next();
    push_block(*s);
    bool handled = false;
    while (at_kw("except")) {
      handled = true;
      next();
      if (at_op("*")) next();
      if (!at_op(":")) {
        s->values.push_back(parse_test());
        if (at_op(",")) {
          // `except (A, B)` must be parenthesized; the bare form is Python 2.
          fail();
        }
        if (at_kw("as")) {
          next();
          expect_identifier();
        }
      }
      push_block(*s);
    }
    if (at_kw("else")) {
      if (!handled) fail();
      next();
      push_block(*s);
    }
    if (at_kw("finally")) {
      handled = true;
      next();
      push_block(*s);
    }
    if (!handled) fail();
    return finish(std::move(s));
  }

  void parse_with_item(Stmt& s) {
    s.values.push_back(parse_test());
    if (at_kw("as")) {
      next();
      s.targets.push_back(parse_star_target());
    }
  }

  StmtPtr parse_with() {
    auto s = new_stmt(StmtKind::With);
    if (at_kw("async")) next();
    expect_kw("with");
    if (at_op("(")) {
      std::size_t saved = pos_;
      int saved_line = last_line_;
      try {
        next();
        while (true) {
          parse_with_item(*s);
          if (!at_op(",")) break;
          next();
          if (at_op(")")) break;
        }
        expect_op(")");
        if (!at_op(":")) fail();
        push_block(*s);
        return finish(std::move(s));
      } catch (const SyntaxError&) {
        pos_ = saved;
        last_line_ = saved_line;
        s->values.clear();
        s->targets.clear();
      }
    }
    while (true) {
      parse_with_item(*s);
      if (!at_op(",")) break;
      next();
    }
    push_block(*s);
    return finish(std::move(s));
  }

  StmtPtr parse_decorated() {
    std::vector<ExprPtr> decorators;
    while (at_op("@")) {
      next();
      decorators.push_back(parse_named_test());
      expect_newline();
    }
    if (at_kw("def") || (at_kw("async") && at_kw("def", 1))) return parse_funcdef(std::move(decorators));
    if (at_kw("class")) return parse_classdef(std::move(decorators));
    fail();
  }

  void skip_brackets() {
    int depth = 0;
    do {
      if (peek().kind == Tok::End) fail();
      const auto& t = next();
      if (t.kind == Tok::Op && (t.text == "[" || t.text == "(" || t.text == "{")) ++depth;
      if (t.kind == Tok::Op && (t.text == "]" || t.text == ")" || t.text == "}")) --depth;
    } while (depth > 0);
  }

  StmtPtr parse_funcdef(std::vector<ExprPtr> decorators) {
    auto s = new_stmt(StmtKind::FunctionDef);
    if (at_kw("async")) next();
    expect_kw("def");
    s->decorators = std::move(decorators);
    s->name = expect_identifier();
    if (at_op("[")) skip_brackets();
    expect_op("(");
    while (!at_op(")")) {
      Param p;
      if (at_op("/")) {
        next();
      } else if (at_op("*") || at_op("**")) {
        bool star = at_op("*");
        next();
        if (star && (at_op(",") || at_op(")"))) {
          // bare `*` separator
        } else {
          p.name = expect_identifier();
          if (at_op(":")) {
            next();
            p.annotation = at_op("*") ? parse_star_expr() : parse_test();
          }
        }
      } else {
        p.name = expect_identifier();
        if (at_op(":")) {
          next();
          p.annotation = parse_test();
        }
        if (at_op("=")) {
          next();
          p.default_value = parse_test();
        }
      }
      if (!p.name.empty()) s->params.push_back(std::move(p));
      if (!at_op(",")) break;
      next();
    }
    expect_op(")");
    if (at_op("->")) {
      next();
      s->values.push_back(parse_test());
    }
    s->signature_end_line = peek().line;
    push_block(*s);
    return finish(std::move(s));
  }

  StmtPtr parse_classdef(std::vector<ExprPtr> decorators) {
    auto s = new_stmt(StmtKind::ClassDef);
    expect_kw("class");
    s->decorators = std::move(decorators);
    s->name = expect_identifier();
    if (at_op("[")) skip_brackets();
    if (at_op("(")) {
      next();
      while (!at_op(")")) {
        auto arg = parse_argument();
        if (arg->kind == ExprKind::Keyword || arg->kind == ExprKind::Operation || arg->kind == ExprKind::Starred) {
          s->values.push_back(std::move(arg));
        } else {
          s->bases.push_back(std::move(arg));
        }
        if (!at_op(",")) break;
        next();
      }
      expect_op(")");
    }
    s->signature_end_line = peek().line;
    push_block(*s);
    return finish(std::move(s));
  }

  // ---- match statements ---------------------------------------------------

  StmtPtr parse_match() {
    auto s = new_stmt(StmtKind::Match);
    next();
    s->values.push_back(parse_testlist_star_expr(true));
    expect_op(":");
    expect_newline();
    if (peek().kind != Tok::Indent) fail();
    next();
    if (!at_kw("case")) fail();
    while (at_kw("case")) {
      next();
      parse_open_pattern(*s);
      if (at_kw("if")) {
        next();
        s->values.push_back(parse_named_test());
      }
      push_block(*s);
    }
    if (peek().kind != Tok::Dedent) fail();
    next();
    return finish(std::move(s));
  }

  void parse_open_pattern(Stmt& s) {
    while (true) {
      parse_pattern(s);
      if (!at_op(",")) break;
      next();
      if (at_op(":") || at_kw("if")) break;
    }
  }

  void parse_pattern(Stmt& s) {
    parse_closed_pattern(s);
    while (at_op("|")) {
      next();
      parse_closed_pattern(s);
    }
    if (at_kw("as")) {
      next();
      expect_identifier();
    }
  }

  // Value and class patterns read names; captures bind them.
  void parse_closed_pattern(Stmt& s) {
    const auto& t = peek();
    if (t.kind == Tok::Number || t.kind == Tok::String || at_op("-")) {
      if (at_op("-")) next();
      if (peek().kind == Tok::String) {
        while (peek().kind == Tok::String) next();
        return;
      }
      if (peek().kind != Tok::Number) fail();
      next();
      if (at_op("+") || at_op("-")) {
        next();
        if (peek().kind != Tok::Number) fail();
        next();
      }
      return;
    }
    if (at_kw("None") || at_kw("True") || at_kw("False")) {
      next();
      return;
    }
    if (at_op("*")) {
      next();
      expect_identifier();
      return;
    }
    if (at_identifier()) {
      int line = t.line;
      std::string root = next().text;
      bool dotted = false;
      while (at_op(".")) {
        next();
        expect_identifier();
        dotted = true;
      }
      if (at_op("(")) {
        s.values.push_back(make_expr(ExprKind::Name, line, root));
        next();
        while (!at_op(")")) {
          if (at_identifier() && at_op("=", 1)) {
            next();
            next();
          }
          parse_pattern(s);
          if (!at_op(",")) break;
          next();
        }
        expect_op(")");
      } else if (dotted) {
        s.values.push_back(make_expr(ExprKind::Name, line, root));
      }
      return;
    }
    if (at_op("(") || at_op("[")) {
      std::string close = at_op("(") ? ")" : "]";
      next();
      while (!at_op(close)) {
        parse_pattern(s);
        if (!at_op(",")) break;
        next();
      }
      expect_op(close);
      return;
    }
    if (at_op("{")) {
      next();
      while (!at_op("}")) {
        if (at_op("**")) {
          next();
          expect_identifier();
        } else {
          parse_closed_pattern(s);
          expect_op(":");
          parse_pattern(s);
        }
        if (!at_op(",")) break;
        next();
      }
      expect_op("}");
      return;
    }
    fail();
  }

  // ---- expressions --------------------------------------------------------

  ExprPtr tuple_of(std::vector<ExprPtr> items, int line) {
    auto t = make_expr(ExprKind::Tuple, line);
    t->children = std::move(items);
    return t;
  }

  ExprPtr parse_testlist_star_expr(bool allow_named) {
    int line = peek().line;
    auto first = at_op("*") ? parse_star_expr() : (allow_named ? parse_named_test() : parse_test());
    if (!at_op(",")) return first;
    std::vector<ExprPtr> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      next();
      if (!can_start_expr()) break;
      items.push_back(at_op("*") ? parse_star_expr() : (allow_named ? parse_named_test() : parse_test()));
    }
    return tuple_of(std::move(items), line);
  }

  // Assignment/loop targets: bitwise-or level so `in` is not consumed.
  ExprPtr parse_exprlist() {
    int line = peek().line;
    auto first = parse_star_target();
    if (!at_op(",")) return first;
    std::vector<ExprPtr> items;
    items.push_back(std::move(first));
    while (at_op(",")) {
      next();
      if (!can_start_expr()) break;
      items.push_back(parse_star_target());
    }
    return tuple_of(std::move(items), line);
  }

  ExprPtr parse_star_target() { return at_op("*") ? parse_star_expr() : parse_bitor(); }

  ExprPtr parse_star_expr() {
    auto e = make_expr(ExprKind::Starred, peek().line);
    expect_op("*");
    e->children.push_back(parse_bitor());
    return e;
  }

  ExprPtr parse_named_test() {
    if (at_identifier() && at_op(":=", 1)) {
      auto e = make_expr(ExprKind::NamedExpr, peek().line);
      auto target = make_expr(ExprKind::Name, peek().line, next().text);
      next();
      e->targets.push_back(std::move(target));
      e->children.push_back(parse_test());
      return e;
    }
    return parse_test();
  }

  ExprPtr parse_test() {
    if (at_kw("lambda")) return parse_lambda(/*nocond=*/false);
    int line = peek().line;
    auto e = parse_or_test();
    if (at_kw("if")) {
      next();
      auto op = make_expr(ExprKind::Operation, line);
      op->children.push_back(std::move(e));
      op->children.push_back(parse_or_test());
      expect_kw("else");
      op->children.push_back(parse_test());
      return op;
    }
    return e;
  }

  ExprPtr parse_test_nocond() { return at_kw("lambda") ? parse_lambda(true) : parse_or_test(); }

  ExprPtr parse_lambda(bool nocond) {
    auto e = make_expr(ExprKind::Lambda, peek().line);
    expect_kw("lambda");
    std::vector<ExprPtr> defaults;
    while (!at_op(":")) {
      if (at_op("/")) {
        next();
      } else if (at_op("*") || at_op("**")) {
        next();
        if (at_identifier()) e->params.push_back(next().text);
      } else {
        e->params.push_back(expect_identifier());
        if (at_op("=")) {
          next();
          defaults.push_back(parse_test());
        }
      }
      if (!at_op(",")) break;
      next();
    }
    expect_op(":");
    e->children.push_back(nocond ? parse_test_nocond() : parse_test());
    for (auto& d : defaults) e->children.push_back(std::move(d));
    return e;
  }

  ExprPtr binary(ExprPtr lhs, ExprPtr rhs) {
    auto op = make_expr(ExprKind::Operation, lhs->line);
    op->children.push_back(std::move(lhs));
    op->children.push_back(std::move(rhs));
    return op;
  }

  ExprPtr parse_or_test() {
    auto e = parse_and_test();
    while (at_kw("or")) {
      next();
      e = binary(std::move(e), parse_and_test());
    }
    return e;
  }

  ExprPtr parse_and_test() {
    auto e = parse_not_test();
    while (at_kw("and")) {
      next();
      e = binary(std::move(e), parse_not_test());
    }
    return e;
  }

  ExprPtr parse_not_test() {
    if (at_kw("not")) {
      auto op = make_expr(ExprKind::Operation, peek().line);
      next();
      op->children.push_back(parse_not_test());
      return op;
    }
    return parse_comparison();
  }

  bool at_comp_op() const {
    const auto& t = peek();
    if (t.kind == Tok::Op) {
      return t.text == "<" || t.text == ">" || t.text == "==" || t.text == ">=" || t.text == "<=" || t.text == "!=";
    }
    return at_kw("in") || at_kw("is") || (at_kw("not") && at_kw("in", 1));
  }

  ExprPtr parse_comparison() {
    auto e = parse_bitor();
    while (at_comp_op()) {
      if (at_kw("not")) {
        next();
        next();
      } else if (at_kw("is")) {
        next();
        if (at_kw("not")) next();
      } else {
        next();
      }
      e = binary(std::move(e), parse_bitor());
    }
    return e;
  }

  template <typename Next>
  ExprPtr parse_binary_level(std::initializer_list<std::string_view> ops, Next next_level) {
    auto e = (this->*next_level)();
    while (true) {
      bool matched = false;
      for (auto op : ops) matched = matched || at_op(op);
      if (!matched) return e;
      next();
      e = binary(std::move(e), (this->*next_level)());
    }
  }

  ExprPtr parse_bitor() { return parse_binary_level({"|"}, &Parser::parse_xor); }
  ExprPtr parse_xor() { return parse_binary_level({"^"}, &Parser::parse_bitand); }
  ExprPtr parse_bitand() { return parse_binary_level({"&"}, &Parser::parse_shift); }
  ExprPtr parse_shift() { return parse_binary_level({"<<", ">>"}, &Parser::parse_arith); }
  ExprPtr parse_arith() { return parse_binary_level({"+", "-"}, &Parser::parse_term); }
  ExprPtr parse_term() { return parse_binary_level({"*", "/", "%", "//", "@"}, &Parser::parse_factor); }

  ExprPtr parse_factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      auto op = make_expr(ExprKind::Operation, peek().line);
      next();
      op->children.push_back(parse_factor());
      return op;
    }
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr e;
    if (at_kw("await")) {
      auto op = make_expr(ExprKind::Operation, peek().line);
      next();
      op->children.push_back(parse_primary());
      e = std::move(op);
    } else {
      e = parse_primary();
    }
    if (at_op("**")) {
      next();
      e = binary(std::move(e), parse_factor());
    }
    return e;
  }

  ExprPtr parse_primary() {
    auto e = parse_atom();
    while (true) {
      if (at_op("(")) {
        auto call = make_expr(ExprKind::Call, e->line);
        call->children.push_back(std::move(e));
        next();
        while (!at_op(")")) {
          call->children.push_back(parse_argument());
          if (!at_op(",")) break;
          next();
        }
        expect_op(")");
        e = std::move(call);
      } else if (at_op("[")) {
        auto sub = make_expr(ExprKind::Subscript, e->line);
        sub->children.push_back(std::move(e));
        next();
        while (!at_op("]")) {
          sub->children.push_back(parse_subscript());
          if (!at_op(",")) break;
          next();
        }
        expect_op("]");
        e = std::move(sub);
      } else if (at_op(".")) {
        next();
        auto attr = make_expr(ExprKind::Attribute, e->line);
        attr->id = expect_identifier_or_keyword();
        attr->children.push_back(std::move(e));
        e = std::move(attr);
      } else {
        return e;
      }
    }
  }

  std::string expect_identifier_or_keyword() {
    if (peek().kind != Tok::Name) fail();
    return next().text;
  }

  ExprPtr parse_subscript() {
    int line = peek().line;
    if (at_op("*")) return parse_star_expr();
    ExprPtr lower;
    if (!at_op(":")) {
      lower = parse_named_test();
      if (!at_op(":")) return lower;
    }
    auto slice = make_expr(ExprKind::Operation, line);
    if (lower) slice->children.push_back(std::move(lower));
    expect_op(":");
    if (!at_op(":") && !at_op("]") && !at_op(",")) slice->children.push_back(parse_test());
    if (at_op(":")) {
      next();
      if (!at_op("]") && !at_op(",")) slice->children.push_back(parse_test());
    }
    return slice;
  }

  ExprPtr parse_argument() {
    int line = peek().line;
    if (at_op("*")) return parse_star_expr();
    if (at_op("**")) {
      next();
      auto op = make_expr(ExprKind::Operation, line);
      op->children.push_back(parse_test());
      return op;
    }
    if (at_identifier() && at_op("=", 1)) {
      auto kw = make_expr(ExprKind::Keyword, line, next().text);
      next();
      kw->children.push_back(parse_test());
      return kw;
    }
    auto value = parse_named_test();
    if (at_comp_for()) return parse_comprehension(std::move(value), ExprKind::Comprehension);
    return value;
  }

  bool at_comp_for() const { return at_kw("for") || (at_kw("async") && at_kw("for", 1)); }

  ExprPtr parse_comprehension(ExprPtr element, ExprKind kind, ExprPtr value = nullptr) {
    auto comp = make_expr(kind, element->line);
    comp->children.push_back(std::move(element));
    if (value) comp->children.push_back(std::move(value));
    while (at_comp_for() || at_kw("if")) {
      if (at_kw("if")) {
        next();
        comp->children.push_back(parse_test_nocond());
        continue;
      }
      if (at_kw("async")) next();
      expect_kw("for");
      comp->targets.push_back(parse_exprlist());
      expect_kw("in");
      comp->children.push_back(parse_or_test());
    }
    return comp;
  }

  ExprPtr parse_yield() {
    auto op = make_expr(ExprKind::Operation, peek().line);
    expect_kw("yield");
    if (at_kw("from")) {
      next();
      op->children.push_back(parse_test());
    } else if (can_start_expr()) {
      op->children.push_back(parse_testlist_star_expr(false));
    }
    return op;
  }

  ExprPtr parse_string_atom() {
    auto e = make_expr(ExprKind::Constant, peek().line);
    e->is_string = true;
    while (peek().kind == Tok::String) {
      const Token& t = next();
      e->id += string_literal_value(t.text);
      for (const auto& field : t.fields) {
        try {
          auto toks = tokenize(field.text);
          for (auto& tok : toks) {
            tok.line += field.line - 1;
            tok.end_line += field.line - 1;
          }
          e->children.push_back(Parser(std::move(toks)).parse_expression_only());
        } catch (const SyntaxError&) {
          // Unparseable replacement fields contribute no names.
        }
      }
    }
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    int line = t.line;
    switch (t.kind) {
      case Tok::Number: next(); return make_expr(ExprKind::Constant, line, t.text);
      case Tok::String: return parse_string_atom();
      case Tok::Name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          next();
          return make_expr(ExprKind::Constant, line, t.text);
        }
        if (is_keyword(t.text)) fail();
        return make_expr(ExprKind::Name, line, next().text);
      }
      case Tok::Op: break;
      default: fail();
    }
    if (at_op("...")) {
      next();
      return make_expr(ExprKind::Constant, line, "...");
    }
    if (at_op("(")) {
      next();
      if (at_op(")")) {
        next();
        return make_expr(ExprKind::Tuple, line);
      }
      if (at_kw("yield")) {
        auto y = parse_yield();
        expect_op(")");
        return y;
      }
      auto first = at_op("*") ? parse_star_expr() : parse_named_test();
      if (at_comp_for()) {
        auto comp = parse_comprehension(std::move(first), ExprKind::Comprehension);
        expect_op(")");
        return comp;
      }
      if (!at_op(",")) {
        expect_op(")");
        return first;
      }
      std::vector<ExprPtr> items;
      items.push_back(std::move(first));
      while (at_op(",")) {
        next();
        if (at_op(")")) break;
        items.push_back(at_op("*") ? parse_star_expr() : parse_named_test());
      }
      expect_op(")");
      return tuple_of(std::move(items), line);
    }
    if (at_op("[")) {
      next();
      auto list = make_expr(ExprKind::List, line);
      if (at_op("]")) {
        next();
        return list;
      }
      auto first = at_op("*") ? parse_star_expr() : parse_named_test();
      if (at_comp_for()) {
        auto comp = parse_comprehension(std::move(first), ExprKind::Comprehension);
        expect_op("]");
        return comp;
      }
      list->children.push_back(std::move(first));
      while (at_op(",")) {
        next();
        if (at_op("]")) break;
        list->children.push_back(at_op("*") ? parse_star_expr() : parse_named_test());
      }
      expect_op("]");
      return list;
    }
    if (at_op("{")) return parse_brace_atom();
    fail();
  }

  ExprPtr parse_brace_atom() {
    int line = peek().line;
    expect_op("{");
    if (at_op("}")) {
      next();
      return make_expr(ExprKind::Dict, line);
    }
    auto parse_dict_entry = [this](ExprPtr& out_key, ExprPtr& out_value) {
      if (at_op("**")) {
        next();
        out_value = parse_bitor();
        return;
      }
      out_key = parse_test();
      expect_op(":");
      out_value = parse_test();
    };
    ExprPtr key;
    ExprPtr value;
    if (at_op("**")) {
      parse_dict_entry(key, value);
    } else {
      key = at_op("*") ? parse_star_expr() : parse_named_test();
      if (at_op(":")) {
        next();
        value = parse_test();
      }
    }
    const bool is_dict = value != nullptr;
    if (at_comp_for()) {
      ExprPtr comp;
      if (!key) {
        comp = parse_comprehension(std::move(value), ExprKind::Comprehension);
      } else {
        comp = parse_comprehension(std::move(key), ExprKind::Comprehension, std::move(value));
      }
      expect_op("}");
      return comp;
    }
    auto result = make_expr(is_dict ? ExprKind::Dict : ExprKind::Set, line);
    if (key) result->children.push_back(std::move(key));
    if (value) result->children.push_back(std::move(value));
    while (at_op(",")) {
      next();
      if (at_op("}")) break;
      if (is_dict) {
        ExprPtr k;
        ExprPtr v;
        parse_dict_entry(k, v);
        if (k) result->children.push_back(std::move(k));
        result->children.push_back(std::move(v));
      } else {
        result->children.push_back(at_op("*") ? parse_star_expr() : parse_named_test());
      }
    }
    expect_op("}");
    return result;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int last_line_ = 0;
};

inline Module parse(std::string_view source) {
  Module m = Parser(tokenize(source)).parse_module();
  int lines = 0;
  for (char c : source) lines += c == '\n';
  if (!source.empty() && source.back() != '\n') ++lines;
  m.line_count = lines;
  return m;
}

}  // namespace slicegraph::python
