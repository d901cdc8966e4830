#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slicegraph/frontend.hpp"
#include "slicegraph/graph.hpp"
#include "slicegraph/text.hpp"

namespace slicegraph {

struct SourceFile {
  std::string path;  // repo-relative, '/'-separated
  std::string text;
};

struct BuildDiagnostics {
  std::vector<std::string> messages;
  std::size_t parse_failures = 0;
  std::size_t skipped_files = 0;
  std::size_t resolved_calls = 0;
  std::size_t unresolved_calls = 0;
  bool empty_repository = false;
};

struct PendingCall {
  std::string caller_id;
  std::string callee_raw_name;
  std::string module;
};

// Module-level symbol tables consulted by call and base-class resolution.
struct SymbolIndex {
  std::map<std::string, std::string> modules;  // module qualified name -> node id
  // qualified name -> node ids, only module-level entities
  std::map<std::string, std::vector<std::string>> functions;
  std::map<std::string, std::vector<std::string>> classes;
  // per module: alias -> absolute target; aliases bound to several targets
  // are recorded as ambiguous and never resolve
  std::map<std::string, std::map<std::string, std::string>> aliases;
  std::map<std::string, std::set<std::string>> ambiguous_aliases;
};

struct StructuralResult {
  RepoGraph graph;
  SymbolIndex symbols;
  std::vector<ModuleSyntax> modules;
  // per module (same order): entity index -> node id
  std::vector<std::vector<std::string>> entity_ids;
  std::vector<PendingCall> pending_calls;
};

namespace detail {

inline std::string parent_path(const std::string& path) {
  auto slash = path.rfind('/');
  return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

inline std::string last_component(const std::string& dotted, char sep) {
  auto p = dotted.rfind(sep);
  return p == std::string::npos ? dotted : dotted.substr(p + 1);
}

class SymbolResolver {
 public:
  SymbolResolver(const SymbolIndex& index, NodeKind kind) : index_(index), kind_(kind) {}

  // Unambiguous binding of `name` in `module`: defined there, or imported
  // there (following re-export chains). Returns empty when zero or several
  // candidates exist.
  std::string in_module(const std::string& module, const std::string& name, int depth = 0) const {
    std::set<std::string> found;
    bool ambiguous = false;
    collect(module, name, depth, found, ambiguous);
    return found.size() == 1 && !ambiguous ? *found.begin() : std::string();
  }

  // `alias.name` where alias is bound to a repository module.
  std::string qualified(const std::string& module, const std::string& alias, const std::string& name) const {
    auto am = index_.aliases.find(module);
    if (am == index_.aliases.end()) return {};
    auto it = am->second.find(alias);
    if (it == am->second.end() || is_ambiguous(module, alias)) return {};
    if (!index_.modules.contains(it->second)) return {};
    return in_module(it->second, name);
  }

 private:
  bool is_ambiguous(const std::string& module, const std::string& alias) const {
    auto it = index_.ambiguous_aliases.find(module);
    return it != index_.ambiguous_aliases.end() && it->second.contains(alias);
  }

  const std::map<std::string, std::vector<std::string>>& table() const {
    return kind_ == NodeKind::Class ? index_.classes : index_.functions;
  }

  void collect(const std::string& module, const std::string& name, int depth, std::set<std::string>& found,
               bool& ambiguous) const {
    if (depth > 8) return;
    if (auto it = table().find(module + "." + name); it != table().end()) {
      found.insert(it->second.begin(), it->second.end());
    }
    auto am = index_.aliases.find(module);
    if (am == index_.aliases.end()) return;
    auto alias = am->second.find(name);
    if (alias == am->second.end()) return;
    if (is_ambiguous(module, name)) {
      ambiguous = true;
      return;
    }
    follow(alias->second, depth + 1, found, ambiguous);
  }

  void follow(const std::string& target, int depth, std::set<std::string>& found, bool& ambiguous) const {
    if (auto it = table().find(target); it != table().end()) {
      found.insert(it->second.begin(), it->second.end());
      return;
    }
    auto dot = target.rfind('.');
    if (dot == std::string::npos) return;
    std::string owner = target.substr(0, dot);
    if (index_.modules.contains(owner)) collect(owner, target.substr(dot + 1), depth, found, ambiguous);
  }

  const SymbolIndex& index_;
  NodeKind kind_;
};

}  // namespace detail

// Second pass: resolves recorded call sites with the two unambiguous rules
// (bare name bound in the caller's module; `alias.f` with alias bound to a
// repository module). Everything else is dropped and counted.
inline std::vector<TypedEdge> resolve_calls(const std::vector<PendingCall>& pending, const SymbolIndex& symbols,
                                            BuildDiagnostics& diagnostics) {
  detail::SymbolResolver resolver(symbols, NodeKind::Function);
  std::set<TypedEdge, EdgeOrder> edges;
  for (const auto& call : pending) {
    std::string target;
    auto dot = call.callee_raw_name.find('.');
    if (dot == std::string::npos) {
      target = resolver.in_module(call.module, call.callee_raw_name);
    } else if (call.callee_raw_name.find('.', dot + 1) == std::string::npos) {
      target = resolver.qualified(call.module, call.callee_raw_name.substr(0, dot),
                                  call.callee_raw_name.substr(dot + 1));
    }
    if (target.empty()) {
      ++diagnostics.unresolved_calls;
      continue;
    }
    ++diagnostics.resolved_calls;
    edges.insert({call.caller_id, target, EdgeKind::Calls, {}});
  }
  return {edges.begin(), edges.end()};
}

inline std::string resolve_base_class(const SymbolIndex& symbols, const std::string& module, const std::string& raw) {
  detail::SymbolResolver resolver(symbols, NodeKind::Class);
  auto dot = raw.find('.');
  if (dot == std::string::npos) return resolver.in_module(module, raw);
  return resolver.qualified(module, raw.substr(0, dot), raw.substr(dot + 1));
}

// First traversal (Directory/Module/Class/Function/Method nodes, Contains,
// Imports, Inherits) followed by call resolution. The graph is left unfrozen
// for the dataflow pass.
inline StructuralResult build_structural_graph(std::vector<SourceFile> sources, BuildMode mode,
                                               BuildDiagnostics& diagnostics) {
  StructuralResult result{RepoGraph(mode), {}, {}, {}, {}};
  RepoGraph& g = result.graph;

  std::sort(sources.begin(), sources.end(), [](const auto& a, const auto& b) { return a.path < b.path; });

  EntityNode root;
  root.kind = NodeKind::Directory;
  root.name = ".";
  root.qualified_name = ".";
  root.file_path = ".";
  const std::string root_id = g.upsert_node(root);

  std::map<std::string, std::string> dir_ids{{".", root_id}};
  auto ensure_dir = [&](auto&& self, const std::string& path) -> std::string {
    if (auto it = dir_ids.find(path); it != dir_ids.end()) return it->second;
    std::string parent = self(self, detail::parent_path(path));
    EntityNode d;
    d.kind = NodeKind::Directory;
    d.name = detail::last_component(path, '/');
    d.qualified_name = path;
    std::replace(d.qualified_name.begin(), d.qualified_name.end(), '/', '.');
    d.file_path = path;
    std::string id = g.upsert_node(d);
    g.connect(parent, id, EdgeKind::Contains);
    dir_ids.emplace(path, id);
    return id;
  };

  std::size_t py_files = 0;
  for (const auto& src : sources) {
    if (!src.path.ends_with(".py")) continue;
    ++py_files;
    if (!is_valid_utf8(src.text)) {
      diagnostics.messages.push_back(src.path + ": not valid UTF-8, skipped");
      ++diagnostics.skipped_files;
      continue;
    }
    ModuleSyntax syntax = parse_module(src.path, src.text);
    if (!syntax.parsed) ++diagnostics.parse_failures;
    for (const auto& d : syntax.diagnostics) diagnostics.messages.push_back(d);

    EntityNode m;
    m.kind = NodeKind::Module;
    m.qualified_name = syntax.module_name;
    m.name = detail::last_component(syntax.module_name, '.');
    m.file_path = src.path;
    m.start_line = 1;
    m.end_line = std::max(1, syntax.line_count);
    m.doc_head = syntax.doc_head;
    if (result.symbols.modules.contains(m.qualified_name)) {
      diagnostics.messages.push_back(src.path + ": module name '" + m.qualified_name +
                                     "' already defined by another file, skipped");
      ++diagnostics.skipped_files;
      continue;
    }
    std::string dir_id = ensure_dir(ensure_dir, detail::parent_path(src.path));
    std::string module_id = g.upsert_node(m);
    g.connect(dir_id, module_id, EdgeKind::Contains);
    result.symbols.modules.emplace(m.qualified_name, module_id);

    std::vector<std::string> ids;
    for (const auto& e : syntax.entities) {
      EntityNode n;
      n.kind = e.kind == EntityKind::Class ? NodeKind::Class
               : e.kind == EntityKind::Method ? NodeKind::Method
                                              : NodeKind::Function;
      n.name = e.name;
      n.qualified_name = syntax.module_name + "." + e.local_qualname;
      n.file_path = src.path;
      n.start_line = e.start_line;
      n.end_line = e.end_line;
      n.doc_head = e.doc_head;
      std::string id;
      try {
        id = g.upsert_node(n);
      } catch (const IdCollision&) {
        diagnostics.messages.push_back(src.path + ":" + std::to_string(e.start_line) + ": duplicate entity " +
                                       n.qualified_name + " ignored");
      }
      ids.push_back(id);
      if (id.empty()) continue;
      const std::string& parent_id = e.parent < 0 ? module_id : ids[static_cast<std::size_t>(e.parent)];
      if (parent_id.empty()) continue;
      g.connect(parent_id, id, EdgeKind::Contains);
      if (e.parent < 0) {
        auto& table = n.kind == NodeKind::Class ? result.symbols.classes : result.symbols.functions;
        table[n.qualified_name].push_back(id);
      }
    }

    auto& alias_map = result.symbols.aliases[syntax.module_name];
    for (const auto& imp : syntax.imports) {
      auto [it, inserted] = alias_map.emplace(imp.alias, imp.target);
      if (!inserted && it->second != imp.target) result.symbols.ambiguous_aliases[syntax.module_name].insert(imp.alias);
    }
    for (const auto& call : syntax.call_sites) {
      const std::string& caller = ids[static_cast<std::size_t>(call.caller)];
      if (!caller.empty()) result.pending_calls.push_back({caller, call.callee, syntax.module_name});
    }
    result.entity_ids.push_back(std::move(ids));
    result.modules.push_back(std::move(syntax));
  }

  if (py_files == 0) {
    diagnostics.empty_repository = true;
    diagnostics.messages.push_back("warning: no .py files found; graph holds the root directory only");
  }

  // Imports between repository modules; `from m import f` links to m.
  for (const auto& syntax : result.modules) {
    const std::string& src_id = result.symbols.modules.at(syntax.module_name);
    for (const auto& imp : syntax.imports) {
      std::string target = imp.target;
      auto it = result.symbols.modules.find(target);
      if (it == result.symbols.modules.end() && !imp.module_import) {
        auto dot = target.rfind('.');
        if (dot != std::string::npos) it = result.symbols.modules.find(target.substr(0, dot));
      }
      if (it != result.symbols.modules.end() && it->second != src_id) g.connect(src_id, it->second, EdgeKind::Imports);
    }
  }

  // Inherits, with the same unambiguous rules as calls.
  for (std::size_t mi = 0; mi < result.modules.size(); ++mi) {
    const auto& syntax = result.modules[mi];
    for (std::size_t ei = 0; ei < syntax.entities.size(); ++ei) {
      const auto& e = syntax.entities[ei];
      const std::string& id = result.entity_ids[mi][ei];
      if (e.kind != EntityKind::Class || id.empty()) continue;
      for (const auto& base : e.bases) {
        std::string target = resolve_base_class(result.symbols, syntax.module_name, base);
        if (!target.empty() && target != id) g.connect(id, target, EdgeKind::Inherits);
      }
    }
  }

  for (const auto& edge : resolve_calls(result.pending_calls, result.symbols, diagnostics)) {
    g.connect(edge.src, edge.dst, edge.kind);
  }
  return result;
}

}  // namespace slicegraph
