#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "slicegraph/error.hpp"

namespace slicegraph::python {

struct SyntaxError : Error {
  SyntaxError(int line, const std::string& what)
      : Error("syntax_error", "line " + std::to_string(line) + ": " + what), line(line) {}
  int line;
};

enum class Tok : std::uint8_t { Name, Number, String, Op, Newline, Indent, Dedent, End };

// A replacement field `{expr}` inside an f-string, with the line it starts on.
struct FStringField {
  std::string text;
  int line = 0;
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 0;
  int end_line = 0;
  std::vector<FStringField> fields;  // f-strings only
};

namespace detail {

inline bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
inline bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

inline bool is_string_prefix(std::string_view p) {
  static constexpr std::array<std::string_view, 14> kPrefixes = {
      "r", "u", "b", "f", "br", "rb", "fr", "rf", "t", "tr", "rt", "ur", "bu", "ub"};
  std::string lower(p);
  for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  for (auto q : kPrefixes) {
    if (lower == q) return q != "ur" && q != "bu" && q != "ub";
  }
  return false;
}

// Splits the body of an f-string into its replacement-field expressions,
// including fields nested in format specs.
inline void extract_fstring_fields(std::string_view body, int first_line, std::vector<FStringField>& out) {
  int line = first_line;
  std::size_t i = 0;
  while (i < body.size()) {
    char c = body[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == '{' && i + 1 < body.size() && body[i + 1] == '{') {
      i += 2;
      continue;
    }
    if (c != '{') {
      ++i;
      continue;
    }
    int field_line = line;
    std::size_t start = ++i;
    int depth = 0;
    std::size_t expr_end = std::string_view::npos;
    std::string_view spec;
    int spec_line = 0;
    char quote = 0;
    for (; i < body.size(); ++i) {
      char d = body[i];
      if (d == '\n') ++line;
      if (quote != 0) {
        if (d == '\\') {
          ++i;
        } else if (d == quote) {
          quote = 0;
        }
        continue;
      }
      if (d == '\'' || d == '"') {
        quote = d;
      } else if (d == '(' || d == '[' || d == '{') {
        ++depth;
      } else if (d == ')' || d == ']' || d == '}') {
        if (depth == 0) break;
        --depth;
      } else if (depth == 0 && expr_end == std::string_view::npos) {
        if (d == '!' && i + 1 < body.size() && body[i + 1] != '=') {
          expr_end = i;
        } else if (d == ':') {
          expr_end = i;
          // Format spec: may hold nested fields.
          std::size_t spec_start = i + 1;
          int spec_depth = 0;
          std::size_t j = spec_start;
          for (; j < body.size(); ++j) {
            if (body[j] == '{') ++spec_depth;
            if (body[j] == '}') {
              if (spec_depth == 0) break;
              --spec_depth;
            }
          }
          spec = body.substr(spec_start, j - spec_start);
          spec_line = line;
          for (char sc : spec) line += sc == '\n';
          i = j;
          break;
        }
      }
    }
    std::string_view expr = body.substr(start, (expr_end == std::string_view::npos ? i : expr_end) - start);
    // Self-documenting `{x=}`.
    while (!expr.empty() && std::isspace(static_cast<unsigned char>(expr.back()))) expr.remove_suffix(1);
    if (expr.size() >= 2 && expr.back() == '=' && std::string_view("=!<>").find(expr[expr.size() - 2]) ==
                                                        std::string_view::npos) {
      expr.remove_suffix(1);
    } else if (expr.size() == 1 && expr.back() == '=') {
      expr.remove_suffix(1);
    }
    if (!expr.empty()) out.push_back({std::string(expr), field_line});
    if (!spec.empty()) extract_fstring_fields(spec, spec_line, out);
    if (i < body.size()) ++i;
  }
}

}  // namespace detail

// Python 3 tokenizer producing NEWLINE/INDENT/DEDENT structure. Comments and
// blank lines are dropped; bracketed and backslash-continued lines are joined.
class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {
    if (src_.starts_with("\xEF\xBB\xBF")) pos_ = 3;
  }

  std::vector<Token> run() {
    std::vector<Token> out;
    indents_.assign(1, 0);
    bool at_line_start = true;
    while (true) {
      if (at_line_start && depth_.empty()) {
        if (!handle_indentation(out)) break;
        at_line_start = false;
      }
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        ++pos_;
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
        continue;
      }
      if (c == '\\') {
        std::size_t p = pos_ + 1;
        if (p < src_.size() && (src_[p] == '\n' || src_[p] == '\r')) {
          pos_ = p;
          consume_newline();
          if (pos_ >= src_.size()) throw SyntaxError(line_, "unexpected end of file after line continuation");
          continue;
        }
        throw SyntaxError(line_, "unexpected character after line continuation");
      }
      if (c == '\n' || c == '\r') {
        consume_newline();
        if (depth_.empty()) {
          if (!out.empty() && out.back().kind != Tok::Newline && out.back().kind != Tok::Indent &&
              out.back().kind != Tok::Dedent) {
            out.push_back({Tok::Newline, "", line_ - 1, line_ - 1, {}});
          }
          at_line_start = true;
        }
        continue;
      }
      lex_token(out);
    }
    if (!depth_.empty()) throw SyntaxError(line_, "unclosed bracket '" + std::string(1, depth_.back()) + "'");
    if (!out.empty() && out.back().kind != Tok::Newline && out.back().kind != Tok::Dedent &&
        out.back().kind != Tok::Indent) {
      out.push_back({Tok::Newline, "", line_, line_, {}});
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      out.push_back({Tok::Dedent, "", line_, line_, {}});
    }
    out.push_back({Tok::End, "", line_, line_, {}});
    return out;
  }

 private:
  void consume_newline() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
  }

  // Measures the indentation of the next logical line, skipping blank and
  // comment-only lines. Returns false at end of input.
  bool handle_indentation(std::vector<Token>& out) {
    while (pos_ < src_.size()) {
      int col = 0;
      while (pos_ < src_.size()) {
        char c = src_[pos_];
        if (c == ' ') {
          ++col;
        } else if (c == '\t') {
          col = (col / 8 + 1) * 8;
        } else if (c == '\f') {
          col = 0;
        } else {
          break;
        }
        ++pos_;
      }
      if (pos_ >= src_.size()) return false;
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') ++pos_;
        if (pos_ >= src_.size()) return false;
      }
      c = src_[pos_];
      if (c == '\n' || c == '\r') {
        consume_newline();
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
        // A lone continuation at line start joins with the next line.
        return true;
      }
      if (col > indents_.back()) {
        indents_.push_back(col);
        out.push_back({Tok::Indent, "", line_, line_, {}});
      } else {
        while (col < indents_.back()) {
          indents_.pop_back();
          out.push_back({Tok::Dedent, "", line_, line_, {}});
        }
        if (col != indents_.back()) throw SyntaxError(line_, "unindent does not match any outer indentation level");
      }
      return true;
    }
    return false;
  }

  void lex_token(std::vector<Token>& out) {
    const unsigned char c = static_cast<unsigned char>(src_[pos_]);
    if (detail::is_ident_start(c)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() && detail::is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      std::string_view word = src_.substr(start, pos_ - start);
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') && detail::is_string_prefix(word)) {
        lex_string(out, word);
        return;
      }
      out.push_back({Tok::Name, std::string(word), line_, line_, {}});
      return;
    }
    if (std::isdigit(c) || (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number(out);
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(out, {});
      return;
    }
    lex_operator(out);
  }

  void lex_number(std::vector<Token>& out) {
    std::size_t start = pos_;
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        ++pos_;
        if ((c == 'e' || c == 'E') && pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-') &&
            !(src_[start] == '0' && start + 1 < src_.size() && (src_[start + 1] == 'x' || src_[start + 1] == 'X'))) {
          ++pos_;
        }
        continue;
      }
      break;
    }
    out.push_back({Tok::Number, std::string(src_.substr(start, pos_ - start)), line_, line_, {}});
  }

  void lex_string(std::vector<Token>& out, std::string_view prefix) {
    std::size_t start = pos_ - prefix.size();
    int start_line = line_;
    bool is_f = false;
    for (char p : prefix) {
      char l = static_cast<char>(std::tolower(static_cast<unsigned char>(p)));
      is_f = is_f || l == 'f' || l == 't';
    }
    const char quote = src_[pos_];
    const std::string triple_quote(3, quote);
    const bool triple = src_.substr(pos_, 3) == triple_quote;
    pos_ += triple ? 3 : 1;
    std::size_t body_start = pos_;
    std::size_t body_end = 0;
    while (true) {
      if (pos_ >= src_.size()) throw SyntaxError(start_line, "unterminated string literal");
      char c = src_[pos_];
      if (c == '\\') {
        pos_ += 1;
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\r' || src_[pos_] == '\n') {
            consume_newline();
          } else {
            ++pos_;
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) throw SyntaxError(start_line, "unterminated string literal");
        consume_newline();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          body_end = pos_;
          ++pos_;
          break;
        }
        if (src_.substr(pos_, 3) == triple_quote) {
          body_end = pos_;
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    Token tok{Tok::String, std::string(src_.substr(start, pos_ - start)), start_line, line_, {}};
    if (is_f) detail::extract_fstring_fields(src_.substr(body_start, body_end - body_start), start_line, tok.fields);
    out.push_back(std::move(tok));
  }

  void lex_operator(std::vector<Token>& out) {
    static constexpr std::array<std::string_view, 24> kMulti = {
        "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "<<", ">>", "<=",
        ">=",  "==",  "!=",  "+=",  "-=",  "*=", "/=", "%=", "&=", "|=", "^=", "@="};
    for (auto op : kMulti) {
      if (src_.substr(pos_, op.size()) == op) {
        out.push_back({Tok::Op, std::string(op), line_, line_, {}});
        pos_ += op.size();
        return;
      }
    }
    char c = src_[pos_];
    static constexpr std::string_view kSingle = "()[]{},:;.+-*/%&|^~<>=@!";
    if (kSingle.find(c) == std::string_view::npos) {
      throw SyntaxError(line_, std::string("invalid character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') depth_.push_back(c);
    if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
      if (depth_.empty() || depth_.back() != open) throw SyntaxError(line_, std::string("unmatched '") + c + "'");
      depth_.pop_back();
    }
    out.push_back({Tok::Op, std::string(1, c), line_, line_, {}});
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<int> indents_;
  std::vector<char> depth_;
};

inline std::vector<Token> tokenize(std::string_view src) { return Tokenizer(src).run(); }

}  // namespace slicegraph::python
