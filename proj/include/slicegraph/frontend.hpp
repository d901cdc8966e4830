#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "slicegraph/python/parser.hpp"

namespace slicegraph {

enum class DefRole : std::uint8_t { Parameter, Definition, Augmented, LoopTarget, ContextTarget };

inline std::string_view to_string(DefRole role) {
  switch (role) {
    case DefRole::Parameter: return "parameter";
    case DefRole::Definition: return "definition";
    case DefRole::Augmented: return "augmented";
    case DefRole::LoopTarget: return "loop_target";
    case DefRole::ContextTarget: return "context_target";
  }
  return "?";
}

enum class StatementForm : std::uint8_t {
  Signature,  // synthetic: the `def` line that binds parameters
  Assign,
  AugAssign,
  AnnAssign,
  ForLoop,
  WithBlock,
  Return,
  Expression,
  CompoundOther,
  NestedDef,
  NestedClass,
  SimpleOther,
};

inline std::string_view to_string(StatementForm form) {
  switch (form) {
    case StatementForm::Signature: return "signature";
    case StatementForm::Assign: return "assign";
    case StatementForm::AugAssign: return "aug_assign";
    case StatementForm::AnnAssign: return "ann_assign";
    case StatementForm::ForLoop: return "for_loop";
    case StatementForm::WithBlock: return "with_block";
    case StatementForm::Return: return "return";
    case StatementForm::Expression: return "expression";
    case StatementForm::CompoundOther: return "compound_other";
    case StatementForm::NestedDef: return "nested_def";
    case StatementForm::NestedClass: return "nested_class";
    case StatementForm::SimpleOther: return "simple_other";
  }
  return "?";
}

struct VariableDef {
  std::string variable;
  DefRole role = DefRole::Definition;
  bool operator==(const VariableDef&) const = default;
};

struct StatementFact {
  int start_line = 0;
  int end_line = 0;
  StatementForm form = StatementForm::Expression;
  std::vector<VariableDef> defs;  // unique by variable, first role wins
  std::vector<std::string> uses;  // unique, first-occurrence order
  std::vector<std::string> declares_global;
  std::vector<std::string> declares_nonlocal;

  const VariableDef* find_def(std::string_view v) const {
    for (const auto& d : defs) {
      if (d.variable == v) return &d;
    }
    return nullptr;
  }
  bool uses_var(std::string_view v) const { return std::find(uses.begin(), uses.end(), v) != uses.end(); }
};

enum class EntityKind : std::uint8_t { Class, Function, Method };

struct EntityDecl {
  EntityKind kind = EntityKind::Function;
  std::string name;
  std::string local_qualname;  // dotted path inside the module, e.g. "A.run"
  int start_line = 0;
  int end_line = 0;
  int signature_end_line = 0;
  std::string doc_head;
  int parent = -1;                  // index into ModuleSyntax::entities, -1 = module
  std::vector<std::string> bases;   // classes: raw "Name" or "alias.Name" bases
  std::vector<std::string> params;  // functions/methods
  std::vector<StatementFact> body;  // functions/methods: direct body children
};

struct ImportFact {
  std::string alias;   // locally bound name
  std::string target;  // absolute dotted target
  int line = 0;
  bool module_import = false;  // `import x` form (target is a module)
};

struct CallSite {
  int caller = -1;  // index of the innermost enclosing function/method
  std::string callee;
  int line = 0;
};

struct ModuleSyntax {
  std::string file_path;
  std::string module_name;
  bool is_package = false;
  std::string doc_head;
  int line_count = 0;
  std::vector<EntityDecl> entities;
  std::vector<ImportFact> imports;
  std::vector<CallSite> call_sites;
  std::vector<std::string> diagnostics;
  bool parsed = false;
};

// "pkg/util.py" -> "pkg.util"; "pkg/__init__.py" -> "pkg".
inline std::string module_name_from_path(std::string_view path) {
  std::string p(path);
  std::replace(p.begin(), p.end(), '\\', '/');
  if (p.ends_with(".py")) p.resize(p.size() - 3);
  if (p == "__init__") return p;
  if (p.ends_with("/__init__")) p.resize(p.size() - 9);
  std::replace(p.begin(), p.end(), '/', '.');
  return p;
}

inline bool is_package_path(std::string_view path) {
  return path == "__init__.py" || path.ends_with("/__init__.py");
}

// First paragraph of a docstring, whitespace-normalized onto one line.
inline std::string doc_first_paragraph(std::string_view doc) {
  std::string out;
  bool started = false;
  std::size_t i = 0;
  while (i <= doc.size()) {
    std::size_t nl = doc.find('\n', i);
    if (nl == std::string_view::npos) nl = doc.size();
    std::string_view line = doc.substr(i, nl - i);
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) {
      if (started) break;
    } else {
      std::size_t b = line.find_last_not_of(" \t\r");
      if (started) out += ' ';
      out += line.substr(a, b - a + 1);
      started = true;
    }
    i = nl + 1;
  }
  return out;
}

namespace detail {

using python::Expr;
using python::ExprKind;
using python::Stmt;
using python::StmtKind;

class FactCollector {
 public:
  explicit FactCollector(StatementFact& fact) : fact_(fact) {}

  void use(const std::string& name) {
    for (const auto& scope : shadowed_) {
      if (std::find(scope.begin(), scope.end(), name) != scope.end()) return;
    }
    if (!fact_.uses_var(name)) fact_.uses.push_back(name);
  }

  void define(const std::string& name, DefRole role) {
    if (fact_.find_def(name) == nullptr) fact_.defs.push_back({name, role});
  }

  void loads(const Expr* e) {
    if (e == nullptr) return;
    switch (e->kind) {
      case ExprKind::Name: use(e->id); return;
      case ExprKind::Lambda:
        shadowed_.push_back(e->params);
        loads(e->children.front().get());
        shadowed_.pop_back();
        for (std::size_t i = 1; i < e->children.size(); ++i) loads(e->children[i].get());
        return;
      case ExprKind::NamedExpr:
        loads(e->children.front().get());
        define(e->targets.front()->id, DefRole::Definition);
        return;
      default:
        // Comprehension targets are not modeled: only their loads count.
        for (const auto& c : e->children) loads(c.get());
    }
  }

  void store(const Expr* e, DefRole role) {
    if (e == nullptr) return;
    switch (e->kind) {
      case ExprKind::Name: define(e->id, role); return;
      case ExprKind::Tuple:
      case ExprKind::List:
      case ExprKind::Starred:
        for (const auto& c : e->children) store(c.get(), role);
        return;
      case ExprKind::Attribute: loads(e->children.front().get()); return;
      default: loads(e);
    }
  }

  void del_target(const Expr* e) {
    switch (e->kind) {
      case ExprKind::Name: return;
      case ExprKind::Tuple:
      case ExprKind::List:
        for (const auto& c : e->children) del_target(c.get());
        return;
      case ExprKind::Attribute: loads(e->children.front().get()); return;
      default: loads(e);
    }
  }

  void visit(const Stmt& s) {
    auto all_loads = [this](const std::vector<python::ExprPtr>& v) {
      for (const auto& e : v) loads(e.get());
    };
    switch (s.kind) {
      case StmtKind::Assign:
        all_loads(s.values);
        for (const auto& t : s.targets) store(t.get(), DefRole::Definition);
        break;
      case StmtKind::AugAssign: {
        const Expr* t = s.targets.front().get();
        if (t->kind == ExprKind::Name) {
          use(t->id);
          define(t->id, DefRole::Augmented);
        } else {
          loads(t);
        }
        all_loads(s.values);
        break;
      }
      case StmtKind::AnnAssign:
        if (s.has_value) loads(s.values[1].get());
        loads(s.values[0].get());
        if (s.has_value) {
          store(s.targets.front().get(), DefRole::Definition);
        } else if (s.targets.front()->kind != ExprKind::Name) {
          loads(s.targets.front().get());
        }
        break;
      case StmtKind::For:
        all_loads(s.values);
        store(s.targets.front().get(), DefRole::LoopTarget);
        visit_blocks(s);
        break;
      case StmtKind::With:
        all_loads(s.values);
        for (const auto& t : s.targets) store(t.get(), DefRole::ContextTarget);
        visit_blocks(s);
        break;
      case StmtKind::If:
      case StmtKind::While:
      case StmtKind::Try:
      case StmtKind::Match:
        visit_clauses(s);
        break;
      case StmtKind::Del:
        for (const auto& t : s.targets) del_target(t.get());
        break;
      case StmtKind::Global:
        for (const auto& n : s.names) fact_.declares_global.push_back(n);
        break;
      case StmtKind::Nonlocal:
        for (const auto& n : s.names) fact_.declares_nonlocal.push_back(n);
        break;
      case StmtKind::FunctionDef:
        // Only what the enclosing scope evaluates; the body is its own scope.
        all_loads(s.decorators);
        for (const auto& p : s.params) {
          loads(p.default_value.get());
          loads(p.annotation.get());
        }
        all_loads(s.values);
        break;
      case StmtKind::ClassDef:
        all_loads(s.decorators);
        all_loads(s.bases);
        all_loads(s.values);
        break;
      case StmtKind::Import:
      case StmtKind::ImportFrom:
      case StmtKind::Pass:
      case StmtKind::Break:
      case StmtKind::Continue:
        break;
      default:
        all_loads(s.values);
        all_loads(s.targets);
    }
  }

 private:
  // Headers and bodies in source order.
  void visit_clauses(const Stmt& s) {
    std::size_t v = 0;
    for (std::size_t b = 0; b < s.blocks.size(); ++b) {
      for (; v < s.values_before_block[b]; ++v) loads(s.values[v].get());
      for (const auto& child : s.blocks[b]) visit(*child);
    }
    for (; v < s.values.size(); ++v) loads(s.values[v].get());
  }

  void visit_blocks(const Stmt& s) {
    for (const auto& block : s.blocks) {
      for (const auto& child : block) visit(*child);
    }
  }

  StatementFact& fact_;
  std::vector<std::vector<std::string>> shadowed_;
};

inline StatementForm form_of(StmtKind kind) {
  switch (kind) {
    case StmtKind::Assign: return StatementForm::Assign;
    case StmtKind::AugAssign: return StatementForm::AugAssign;
    case StmtKind::AnnAssign: return StatementForm::AnnAssign;
    case StmtKind::For: return StatementForm::ForLoop;
    case StmtKind::With: return StatementForm::WithBlock;
    case StmtKind::Return: return StatementForm::Return;
    case StmtKind::Expr: return StatementForm::Expression;
    case StmtKind::If:
    case StmtKind::While:
    case StmtKind::Try:
    case StmtKind::Match: return StatementForm::CompoundOther;
    case StmtKind::FunctionDef: return StatementForm::NestedDef;
    case StmtKind::ClassDef: return StatementForm::NestedClass;
    default: return StatementForm::SimpleOther;
  }
}

}  // namespace detail

// Definitions and uses of one function-body statement. Everything nested in a
// compound statement is attributed to it.
inline StatementFact extract_defs_uses(const python::Stmt& stmt) {
  StatementFact fact;
  fact.start_line = stmt.line;
  fact.end_line = stmt.end_line;
  fact.form = detail::form_of(stmt.kind);
  detail::FactCollector(fact).visit(stmt);
  return fact;
}

namespace detail {

class ModuleWalker {
 public:
  explicit ModuleWalker(ModuleSyntax& out) : out_(out) {}

  void run(const python::Module& m) {
    collect_imports(m.body);
    out_.doc_head = docstring_of(m.body);
    walk_block(m.body, -1, -1);
  }

 private:
  static std::string docstring_of(const python::Block& body) {
    if (body.empty()) return {};
    const Stmt& first = *body.front();
    if (first.kind != StmtKind::Expr || first.values.empty()) return {};
    const Expr& e = *first.values.front();
    if (e.kind != ExprKind::Constant || !e.is_string) return {};
    return doc_first_paragraph(e.id);
  }

  // Package against which relative imports resolve.
  std::optional<std::string> base_package(int level, int line) {
    std::vector<std::string> parts;
    std::string pkg = out_.is_package ? out_.module_name : [&] {
      auto dot = out_.module_name.rfind('.');
      return dot == std::string::npos ? std::string() : out_.module_name.substr(0, dot);
    }();
    if (pkg == "__init__") pkg.clear();
    std::size_t start = 0;
    while (!pkg.empty() && start <= pkg.size()) {
      auto dot = pkg.find('.', start);
      if (dot == std::string::npos) dot = pkg.size();
      parts.push_back(pkg.substr(start, dot - start));
      start = dot + 1;
    }
    if (static_cast<std::size_t>(level) > parts.size()) {
      out_.diagnostics.push_back(out_.file_path + ":" + std::to_string(line) +
                                 ": relative import beyond top-level package dropped");
      return std::nullopt;
    }
    std::string base;
    for (std::size_t i = 0; i + (level - 1) < parts.size(); ++i) {
      if (!base.empty()) base += '.';
      base += parts[i];
    }
    return base;
  }

  void collect_imports(const python::Block& block) {
    for (const auto& sp : block) {
      const Stmt& s = *sp;
      if (s.kind == StmtKind::Import) {
        for (const auto& n : s.imports) {
          out_.imports.push_back({n.asname.empty() ? n.name : n.asname, n.name, s.line, true});
        }
      } else if (s.kind == StmtKind::ImportFrom) {
        std::string base = s.from_module;
        if (s.import_level > 0) {
          auto resolved = base_package(s.import_level, s.line);
          if (!resolved) continue;
          const std::string& pkg = *resolved;
          base = pkg.empty() ? s.from_module : (s.from_module.empty() ? pkg : pkg + "." + s.from_module);
        }
        for (const auto& n : s.imports) {
          if (n.name == "*") continue;
          std::string target = base.empty() ? n.name : base + "." + n.name;
          out_.imports.push_back({n.asname.empty() ? n.name : n.asname, target, s.line, false});
        }
      }
      for (const auto& b : s.blocks) collect_imports(b);
    }
    for (const auto& imp : out_.imports) aliases_.insert(imp.alias);
  }

  // Raw callee text for the two shapes call resolution understands.
  std::string callee_name(const Expr& callee) const {
    if (callee.kind == ExprKind::Name) return callee.id;
    if (callee.kind == ExprKind::Attribute) {
      const Expr& base = *callee.children.front();
      if (base.kind == ExprKind::Name && aliases_.contains(base.id)) return base.id + "." + callee.id;
    }
    return {};
  }

  void calls_in(const Expr* e, int function) {
    if (e == nullptr) return;
    if (e->kind == ExprKind::Call && function >= 0) {
      std::string name = callee_name(*e->children.front());
      if (!name.empty()) out_.call_sites.push_back({function, std::move(name), e->line});
    }
    for (const auto& c : e->children) calls_in(c.get(), function);
    for (const auto& c : e->targets) calls_in(c.get(), function);
  }

  void calls_in(const std::vector<python::ExprPtr>& v, int function) {
    for (const auto& e : v) calls_in(e.get(), function);
  }

  std::string qualify(int parent, const std::string& name) const {
    return parent < 0 ? name : out_.entities[parent].local_qualname + "." + name;
  }

  void walk_block(const python::Block& block, int entity, int function) {
    for (const auto& sp : block) walk_stmt(*sp, entity, function);
  }

  void walk_stmt(const Stmt& s, int entity, int function) {
    if (s.kind == StmtKind::FunctionDef) {
      calls_in(s.decorators, function);
      for (const auto& p : s.params) {
        calls_in(p.default_value.get(), function);
        calls_in(p.annotation.get(), function);
      }
      calls_in(s.values, function);

      EntityDecl d;
      bool in_class = entity >= 0 && out_.entities[entity].kind == EntityKind::Class;
      d.kind = in_class ? EntityKind::Method : EntityKind::Function;
      d.name = s.name;
      d.local_qualname = qualify(entity, s.name);
      d.start_line = s.line;
      d.end_line = s.end_line;
      d.signature_end_line = s.signature_end_line;
      d.parent = entity;
      d.doc_head = docstring_of(s.blocks.front());
      for (const auto& p : s.params) d.params.push_back(p.name);
      for (const auto& child : s.blocks.front()) d.body.push_back(extract_defs_uses(*child));
      int index = static_cast<int>(out_.entities.size());
      out_.entities.push_back(std::move(d));
      walk_block(s.blocks.front(), index, index);
      return;
    }
    if (s.kind == StmtKind::ClassDef) {
      calls_in(s.decorators, function);
      calls_in(s.bases, function);
      calls_in(s.values, function);

      EntityDecl d;
      d.kind = EntityKind::Class;
      d.name = s.name;
      d.local_qualname = qualify(entity, s.name);
      d.start_line = s.line;
      d.end_line = s.end_line;
      d.signature_end_line = s.signature_end_line;
      d.parent = entity;
      d.doc_head = docstring_of(s.blocks.front());
      for (const auto& b : s.bases) {
        if (b->kind == ExprKind::Name) {
          d.bases.push_back(b->id);
        } else if (b->kind == ExprKind::Attribute && b->children.front()->kind == ExprKind::Name) {
          d.bases.push_back(b->children.front()->id + "." + b->id);
        }
      }
      int index = static_cast<int>(out_.entities.size());
      out_.entities.push_back(std::move(d));
      walk_block(s.blocks.front(), index, function);
      return;
    }
    calls_in(s.values, function);
    calls_in(s.targets, function);
    for (const auto& b : s.blocks) walk_block(b, entity, function);
  }

  ModuleSyntax& out_;
  std::unordered_set<std::string> aliases_;
};

}  // namespace detail

// Never throws on bad input: syntax errors yield empty facts plus one
// diagnostic.
inline ModuleSyntax parse_module(const std::string& file_path, std::string_view source_text) {
  ModuleSyntax out;
  out.file_path = file_path;
  out.module_name = module_name_from_path(file_path);
  out.is_package = is_package_path(file_path);
  int lines = 0;
  for (char c : source_text) lines += c == '\n';
  if (!source_text.empty() && source_text.back() != '\n') ++lines;
  out.line_count = lines;
  try {
    python::Module m = python::parse(source_text);
    detail::ModuleWalker(out).run(m);
    out.parsed = true;
  } catch (const python::SyntaxError& e) {
    out.entities.clear();
    out.imports.clear();
    out.call_sites.clear();
    out.doc_head.clear();
    out.diagnostics.assign(1, file_path + ": syntax error: " + e.what());
  }
  return out;
}

}  // namespace slicegraph
