#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slicegraph/frontend.hpp"
#include "slicegraph/graph.hpp"

namespace slicegraph {

struct ScopeState {
  std::map<std::string, std::string> last_def;  // variable -> statement id
  std::set<std::string> globals;
  std::set<std::string> nonlocals;

  bool declared_outside(const std::string& v) const { return globals.contains(v) || nonlocals.contains(v); }
};

// Body facts of one function, signature pseudo-statement first.
inline std::vector<StatementFact> statement_facts(const EntityDecl& fn) {
  std::vector<StatementFact> facts;
  StatementFact sig;
  sig.start_line = fn.start_line;
  sig.end_line = std::max(fn.start_line, std::min(fn.signature_end_line, fn.end_line));
  sig.form = StatementForm::Signature;
  for (const auto& p : fn.params) {
    if (sig.find_def(p) == nullptr) sig.defs.push_back({p, DefRole::Parameter});
  }
  facts.push_back(std::move(sig));
  for (const auto& st : fn.body) {
    if (st.form == StatementForm::NestedDef || st.form == StatementForm::NestedClass) continue;
    facts.push_back(st);
  }
  return facts;
}

// One Statement node per direct child of the body plus the signature
// pseudo-statement (#0), each contained by the function. Returns ids in
// textual order.
inline std::vector<std::string> emit_statement_nodes(RepoGraph& graph, const EntityNode& function,
                                                     const std::vector<StatementFact>& facts) {
  std::vector<std::string> ids;
  if (graph.build_mode() == BuildMode::Coarse) return ids;
  for (std::size_t k = 0; k < facts.size(); ++k) {
    EntityNode n;
    n.kind = NodeKind::Statement;
    n.name = "#" + std::to_string(k);
    n.qualified_name = function.qualified_name + n.name;
    n.file_path = function.file_path;
    n.start_line = facts[k].start_line;
    n.end_line = std::max(facts[k].start_line, facts[k].end_line);
    ids.push_back(graph.upsert_node(n));
    graph.connect(function.id, ids.back(), EdgeKind::Contains);
  }
  return ids;
}

// Textual-order reaching definitions: each use links to the latest earlier
// definer. Uses are linked before the statement's own defs take effect.
inline std::vector<TypedEdge> link_def_use(const std::vector<std::string>& ids,
                                           const std::vector<StatementFact>& facts) {
  ScopeState scope;
  for (const auto& f : facts) {
    scope.globals.insert(f.declares_global.begin(), f.declares_global.end());
    scope.nonlocals.insert(f.declares_nonlocal.begin(), f.declares_nonlocal.end());
  }
  std::vector<TypedEdge> edges;
  for (std::size_t i = 0; i < facts.size() && i < ids.size(); ++i) {
    for (const auto& v : facts[i].uses) {
      auto it = scope.last_def.find(v);
      if (it != scope.last_def.end()) edges.push_back({it->second, ids[i], EdgeKind::DataflowDefUse, v});
    }
    for (const auto& d : facts[i].defs) {
      if (d.role == DefRole::Parameter && scope.declared_outside(d.variable)) continue;
      scope.last_def[d.variable] = ids[i];
    }
  }
  return edges;
}

}  // namespace slicegraph
