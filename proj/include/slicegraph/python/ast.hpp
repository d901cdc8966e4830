#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace slicegraph::python {

// A deliberately small syntax tree: it keeps exactly what the graph passes
// need (name contexts, call shapes, bindings, block structure) and folds
// every operator into `Operation`.
enum class ExprKind : std::uint8_t {
  Name,
  Attribute,     // children[0] = value, id = attribute
  Call,          // children[0] = callee, rest = arguments
  Subscript,     // children[0] = value, rest = index parts
  Starred,       // children[0]
  Tuple,
  List,
  Set,
  Dict,
  Lambda,        // children[0] = body, rest = defaults; params = bound names
  Comprehension, // children = element/iter/condition exprs; targets = for-targets
  NamedExpr,     // targets[0] = target, children[0] = value
  Constant,      // id = raw literal text for strings
  Operation,     // unary/binary/boolean/comparison/conditional/slice/yield/await
  Keyword,       // `name=value` call argument; id = name, children[0] = value
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::Constant;
  int line = 0;
  std::string id;
  std::vector<ExprPtr> children;
  std::vector<ExprPtr> targets;
  std::vector<std::string> params;
  bool is_string = false;
};

inline ExprPtr make_expr(ExprKind kind, int line, std::string id = {}) {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->line = line;
  e->id = std::move(id);
  return e;
}

enum class StmtKind : std::uint8_t {
  Expr,
  Assign,
  AugAssign,
  AnnAssign,
  For,
  While,
  If,
  With,
  Try,
  Match,
  Return,
  Raise,
  Assert,
  Del,
  Pass,
  Break,
  Continue,
  Global,
  Nonlocal,
  Import,
  ImportFrom,
  FunctionDef,
  ClassDef,
  TypeAlias,
};

struct Param {
  std::string name;
  ExprPtr annotation;
  ExprPtr default_value;
};

struct ImportedName {
  std::string name;    // dotted module (Import) or imported member (ImportFrom)
  std::string asname;  // empty when not renamed
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct Stmt {
  StmtKind kind = StmtKind::Pass;
  int line = 0;
  int end_line = 0;
  // Binding targets: Assign targets, For target, With `as` targets,
  // AugAssign/AnnAssign target, Del targets.
  std::vector<ExprPtr> targets;
  // Expressions evaluated in load context: assigned values, tests, iterables,
  // context managers, handler types, match subjects and guards, annotations,
  // class keywords, return annotations.
  std::vector<ExprPtr> values;
  std::vector<Block> blocks;
  // values.size() when each block began; clause headers precede their block.
  std::vector<std::size_t> values_before_block;
  std::string name;  // def/class name
  std::vector<Param> params;
  std::vector<ExprPtr> decorators;
  std::vector<ExprPtr> bases;
  std::vector<std::string> names;  // global/nonlocal
  std::vector<ImportedName> imports;
  std::string from_module;
  int import_level = 0;
  int signature_end_line = 0;
  bool has_value = false;  // AnnAssign
};

struct Module {
  Block body;
  int line_count = 0;
};

}  // namespace slicegraph::python
