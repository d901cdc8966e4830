#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicegraph/session.hpp"

namespace slicegraph {

enum class SliceDirection : std::uint8_t { Backward, Forward, Both };

inline std::string_view to_string(SliceDirection d) {
  switch (d) {
    case SliceDirection::Backward: return "backward";
    case SliceDirection::Forward: return "forward";
    case SliceDirection::Both: return "both";
  }
  return "?";
}

inline std::optional<SliceDirection> parse_direction(std::string_view s) {
  if (s == "backward") return SliceDirection::Backward;
  if (s == "forward") return SliceDirection::Forward;
  if (s == "both") return SliceDirection::Both;
  return std::nullopt;
}

struct SliceStep {
  std::string file;
  int start_line = 0;
  int end_line = 0;
  std::string variable;
  std::string role;  // parameter | definition | augmented_assignment | use | seed
  std::string statement_id;
};

struct DataflowSlice {
  std::vector<SliceStep> steps;
  SliceDirection direction = SliceDirection::Backward;
  bool truncated = false;
  std::string note;
};

inline constexpr int kDefaultMaxSteps = 50;

namespace detail {

inline std::string step_role(const StatementFact* fact, const std::string& variable) {
  const VariableDef* d = fact != nullptr ? fact->find_def(variable) : nullptr;
  if (d == nullptr) return "use";
  switch (d->role) {
    case DefRole::Parameter: return "parameter";
    case DefRole::Augmented: return "augmented_assignment";
    default: return "definition";
  }
}

inline int statement_ordinal(const EntityNode& n) { return std::stoi(n.name.substr(1)); }

// Statement covering `line` that references `variable`, searching enclosing
// functions innermost first. Sets `covered` when some statement spans the
// line at all.
inline std::optional<std::string> find_seed(const RetrievalSession& s, const std::string& file, int line,
                                            const std::string& variable, bool& covered) {
  std::vector<const EntityNode*> callables;
  for (const auto& [id, node] : s.graph().nodes()) {
    if (is_callable(node.kind) && node.file_path == file && node.start_line <= line && line <= node.end_line) {
      callables.push_back(&node);
    }
  }
  std::sort(callables.begin(), callables.end(), [](const EntityNode* a, const EntityNode* b) {
    return a->start_line != b->start_line ? a->start_line > b->start_line : a->end_line < b->end_line;
  });
  for (const EntityNode* fn : callables) {
    std::optional<std::string> signature_hit;
    for (const auto& child : s.graph().out(fn->id, EdgeKind::Contains)) {
      const EntityNode& st = s.graph().at(child);
      if (st.kind != NodeKind::Statement || st.start_line > line || line > st.end_line) continue;
      covered = true;
      const StatementFact* fact = s.statement_fact(child);
      if (fact == nullptr || (fact->find_def(variable) == nullptr && !fact->uses_var(variable))) continue;
      if (fact->form != StatementForm::Signature) return child;
      signature_hit = child;
    }
    if (signature_hit) return signature_hit;
    if (covered) return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace detail

// Bounded BFS over dataflow edges from the statement covering (file, line).
// The first hop follows only `variable` when the seed reads it (backward) or
// writes it (forward); later hops follow every variable. Steps come back in
// source order and are recorded in the session's slice registry.
inline DataflowSlice get_dataflow_slice(RetrievalSession& session, const std::string& file, int line,
                                        const std::string& variable, SliceDirection direction,
                                        int max_steps = kDefaultMaxSteps) {
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  if (!session.knows_file(file)) throw UnknownFile(file);
  DataflowSlice slice;
  slice.direction = direction;
  const RepoGraph& g = session.graph();
  if (g.build_mode() == BuildMode::Coarse) {
    slice.note = "graph was built without statement nodes; read the code with get_code_span instead";
    return slice;
  }
  bool covered = false;
  auto seed = detail::find_seed(session, file, line, variable, covered);
  if (!seed) {
    slice.note = covered ? "variable not referenced at seed: '" + variable + "' does not occur in the statement at " +
                               file + ":" + std::to_string(line)
                         : "no statement node covers " + file + ":" + std::to_string(line) +
                               "; use get_code_span to read the surrounding code";
    return slice;
  }
  const StatementFact* seed_fact = session.statement_fact(*seed);

  struct Visit {
    std::string id;
    EdgeKind kind;  // edge kind followed from this node
    std::string variable;
  };
  std::unordered_map<std::string, std::string> linked_by{{*seed, variable}};
  std::vector<Visit> layer;
  if (direction != SliceDirection::Forward) layer.push_back({*seed, EdgeKind::DataflowUseDef, variable});
  if (direction != SliceDirection::Backward) layer.push_back({*seed, EdgeKind::DataflowDefUse, variable});

  std::size_t visited = 0;
  bool first = true;
  while (!layer.empty() && !slice.truncated) {
    std::vector<Visit> next;
    for (const auto& v : layer) {
      bool restrict = first && (v.kind == EdgeKind::DataflowUseDef ? seed_fact->uses_var(variable)
                                                                  : seed_fact->find_def(variable) != nullptr);
      for (const TypedEdge* e : g.out_edges(v.id, v.kind)) {
        if (restrict && e->variable != variable) continue;
        if (!linked_by.contains(e->dst)) next.push_back({e->dst, v.kind, e->variable});
      }
    }
    first = false;
    std::stable_sort(next.begin(), next.end(), [](const Visit& a, const Visit& b) { return a.id < b.id; });
    layer.clear();
    for (auto& v : next) {
      if (linked_by.contains(v.id)) continue;
      if (visited >= static_cast<std::size_t>(max_steps)) {
        slice.truncated = true;
        break;
      }
      ++visited;
      linked_by.emplace(v.id, v.variable);
      layer.push_back(std::move(v));
    }
  }

  for (const auto& [id, var] : linked_by) {
    const EntityNode& n = g.at(id);
    std::string role = id == *seed ? "seed" : detail::step_role(session.statement_fact(id), var);
    slice.steps.push_back({n.file_path, n.start_line, n.end_line, var, std::move(role), id});
  }
  std::sort(slice.steps.begin(), slice.steps.end(), [&](const SliceStep& a, const SliceStep& b) {
    if (a.start_line != b.start_line) return a.start_line < b.start_line;
    return detail::statement_ordinal(g.at(a.statement_id)) < detail::statement_ordinal(g.at(b.statement_id));
  });
  for (const auto& step : slice.steps) session.registry().add({step.file, step.start_line, step.end_line});
  return slice;
}

}  // namespace slicegraph
