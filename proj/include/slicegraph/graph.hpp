#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "slicegraph/error.hpp"

namespace slicegraph {

enum class NodeKind : std::uint8_t { Directory, Module, Class, Function, Method, Statement };

enum class EdgeKind : std::uint8_t {
  Contains,
  Imports,
  ImportedBy,
  Calls,
  CalledBy,
  Inherits,
  DataflowDefUse,
  DataflowUseDef,
};

inline constexpr std::size_t kEdgeKindCount = 8;

inline constexpr std::array<EdgeKind, kEdgeKindCount> kAllEdgeKinds = {
    EdgeKind::Contains, EdgeKind::Imports,  EdgeKind::ImportedBy,     EdgeKind::Calls,
    EdgeKind::CalledBy, EdgeKind::Inherits, EdgeKind::DataflowDefUse, EdgeKind::DataflowUseDef,
};

enum class BuildMode : std::uint8_t { Full, Coarse };

inline std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Directory: return "Directory";
    case NodeKind::Module: return "Module";
    case NodeKind::Class: return "Class";
    case NodeKind::Function: return "Function";
    case NodeKind::Method: return "Method";
    case NodeKind::Statement: return "Statement";
  }
  return "?";
}

inline std::string_view to_string(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Contains: return "Contains";
    case EdgeKind::Imports: return "Imports";
    case EdgeKind::ImportedBy: return "ImportedBy";
    case EdgeKind::Calls: return "Calls";
    case EdgeKind::CalledBy: return "CalledBy";
    case EdgeKind::Inherits: return "Inherits";
    case EdgeKind::DataflowDefUse: return "DataflowDefUse";
    case EdgeKind::DataflowUseDef: return "DataflowUseDef";
  }
  return "?";
}

inline std::string_view to_string(BuildMode mode) { return mode == BuildMode::Full ? "full" : "coarse"; }

inline std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (auto k : {NodeKind::Directory, NodeKind::Module, NodeKind::Class, NodeKind::Function,
                 NodeKind::Method, NodeKind::Statement}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<EdgeKind> parse_edge_kind(std::string_view s) {
  for (auto k : kAllEdgeKinds) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline std::optional<BuildMode> parse_build_mode(std::string_view s) {
  if (s == "full") return BuildMode::Full;
  if (s == "coarse") return BuildMode::Coarse;
  return std::nullopt;
}

inline bool is_dataflow(EdgeKind kind) {
  return kind == EdgeKind::DataflowDefUse || kind == EdgeKind::DataflowUseDef;
}

// Mirrored kinds are always stored in pairs with swapped endpoints.
inline std::optional<EdgeKind> mirror_of(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Imports: return EdgeKind::ImportedBy;
    case EdgeKind::ImportedBy: return EdgeKind::Imports;
    case EdgeKind::Calls: return EdgeKind::CalledBy;
    case EdgeKind::CalledBy: return EdgeKind::Calls;
    case EdgeKind::DataflowDefUse: return EdgeKind::DataflowUseDef;
    case EdgeKind::DataflowUseDef: return EdgeKind::DataflowDefUse;
    default: return std::nullopt;
  }
}

inline bool is_callable(NodeKind kind) { return kind == NodeKind::Function || kind == NodeKind::Method; }

// "kind:qualified_name:start_line"
inline std::string make_node_id(NodeKind kind, std::string_view qualified_name, int start_line) {
  std::string id(to_string(kind));
  id += ':';
  id += qualified_name;
  id += ':';
  id += std::to_string(start_line);
  return id;
}

struct EntityNode {
  std::string id;
  NodeKind kind = NodeKind::Module;
  std::string name;
  std::string qualified_name;
  std::string file_path;
  int start_line = 0;
  int end_line = 0;
  std::string doc_head;

  bool operator==(const EntityNode&) const = default;
};

struct TypedEdge {
  std::string src;
  std::string dst;
  EdgeKind kind = EdgeKind::Contains;
  std::string variable;

  bool operator==(const TypedEdge&) const = default;
};

// Persisted order: (src, dst, kind name, variable).
struct EdgeOrder {
  bool operator()(const TypedEdge& a, const TypedEdge& b) const {
    if (auto c = a.src <=> b.src; c != 0) return c < 0;
    if (auto c = a.dst <=> b.dst; c != 0) return c < 0;
    if (auto c = to_string(a.kind) <=> to_string(b.kind); c != 0) return c < 0;
    return a.variable < b.variable;
  }
};

class RepoGraph {
 public:
  using NodeMap = std::map<std::string, EntityNode>;
  using EdgeSet = std::set<TypedEdge, EdgeOrder>;

  explicit RepoGraph(BuildMode mode = BuildMode::Full) : mode_(mode) {}

  BuildMode build_mode() const { return mode_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }

  // Computes the id from (kind, qualified_name, start_line), validates the
  // node's own invariants and stores it. Re-inserting an identical node is a
  // no-op.
  std::string upsert_node(EntityNode node) {
    if (frozen_) throw FrozenGraph();
    if (node.kind == NodeKind::Directory) {
      if (node.start_line != 0 || node.end_line != 0) {
        throw InvalidArgument("Directory nodes carry start_line = end_line = 0");
      }
    } else if (node.start_line < 1 || node.start_line > node.end_line) {
      throw InvalidArgument("invalid line span for " + node.qualified_name);
    }
    if (node.kind == NodeKind::Statement && mode_ == BuildMode::Coarse) {
      throw InvalidArgument("coarse graphs carry no Statement nodes");
    }
    node.id = make_node_id(node.kind, node.qualified_name, node.start_line);
    auto [it, inserted] = nodes_.try_emplace(node.id, node);
    if (!inserted && !(it->second == node)) throw IdCollision(node.id);
    return node.id;
  }

  // Stores the edge and, for mirrored kinds, its reverse. Returns the number
  // of edges newly stored (2 for a mirrored pair, 1 otherwise, 0 if already
  // present).
  int connect(const std::string& src, const std::string& dst, EdgeKind kind,
              const std::string& variable = {}) {
    if (frozen_) throw FrozenGraph();
    if (!nodes_.contains(src)) throw UnknownNode(src);
    if (!nodes_.contains(dst)) throw UnknownNode(dst);
    if (is_dataflow(kind) != !variable.empty()) {
      throw VariableOnNonDataflowEdge(std::string("variable must be set iff the edge is dataflow: ") +
                                      std::string(to_string(kind)));
    }
    if (is_dataflow(kind) && mode_ == BuildMode::Coarse) {
      throw InvalidArgument("coarse graphs carry no dataflow edges");
    }
    int added = insert_edge({src, dst, kind, variable}) ? 1 : 0;
    if (auto m = mirror_of(kind)) added += insert_edge({dst, src, *m, variable}) ? 1 : 0;
    return added;
  }

  const NodeMap& nodes() const { return nodes_; }
  const EdgeSet& edges() const { return edges_; }

  bool contains(const std::string& id) const { return nodes_.contains(id); }

  const EntityNode* find(const std::string& id) const {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }

  const EntityNode& at(const std::string& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw UnknownNode(id);
    return it->second;
  }

  // Outgoing neighbors along one edge kind, in insertion order.
  const std::vector<std::string>& out(const std::string& id, EdgeKind kind) const {
    return lists(out_, id)[static_cast<std::size_t>(kind)];
  }
  const std::vector<std::string>& in(const std::string& id, EdgeKind kind) const {
    return lists(in_, id)[static_cast<std::size_t>(kind)];
  }

  // Outgoing dataflow edges carry a variable, which `out` drops.
  std::vector<const TypedEdge*> out_edges(const std::string& id, EdgeKind kind) const {
    std::vector<const TypedEdge*> result;
    for (auto it = edges_.lower_bound(TypedEdge{id, "", EdgeKind::Contains, ""}); it != edges_.end() && it->src == id;
         ++it) {
      if (it->kind == kind) result.push_back(&*it);
    }
    return result;
  }

  std::size_t count_nodes(NodeKind kind) const {
    std::size_t n = 0;
    for (const auto& [_, node] : nodes_) n += node.kind == kind;
    return n;
  }
  std::size_t count_edges(EdgeKind kind) const {
    std::size_t n = 0;
    for (const auto& e : edges_) n += e.kind == kind;
    return n;
  }

  // Contains parent, if any.
  const EntityNode* parent(const std::string& id) const {
    const auto& p = in(id, EdgeKind::Contains);
    return p.empty() ? nullptr : find(p.front());
  }

  // Nearest Function/Method ancestor along Contains edges.
  const EntityNode* enclosing_callable(const std::string& id) const {
    const EntityNode* cur = parent(id);
    while (cur != nullptr && !is_callable(cur->kind)) cur = parent(cur->id);
    return cur;
  }

  // Structural equality: same node set, edge set and build mode.
  bool operator==(const RepoGraph& other) const {
    return mode_ == other.mode_ && nodes_ == other.nodes_ && edges_ == other.edges_;
  }

  // Checks every graph-level invariant; returns a description of the first
  // violation.
  std::optional<std::string> validate() const {
    for (const auto& e : edges_) {
      if (!nodes_.contains(e.src) || !nodes_.contains(e.dst)) return "dangling edge " + e.src + " -> " + e.dst;
      if (auto m = mirror_of(e.kind); m && !edges_.contains(TypedEdge{e.dst, e.src, *m, e.variable})) {
        return "missing mirror for " + std::string(to_string(e.kind)) + " " + e.src + " -> " + e.dst;
      }
      if (is_dataflow(e.kind)) {
        if (at(e.src).kind != NodeKind::Statement || at(e.dst).kind != NodeKind::Statement) {
          return "dataflow edge between non-statement nodes";
        }
        const auto* a = enclosing_callable(e.src);
        const auto* b = enclosing_callable(e.dst);
        if (a == nullptr || a != b) return "dataflow edge crosses a function boundary: " + e.src;
      }
    }
    for (const auto& [id, node] : nodes_) {
      const auto& parents = in(id, EdgeKind::Contains);
      if (parents.size() > 1) return "node with several Contains parents: " + id;
      if (parents.empty() && node.kind != NodeKind::Directory) return "node outside the Contains forest: " + id;
      if (node.kind == NodeKind::Statement && enclosing_callable(id) == nullptr) {
        return "statement without an enclosing function: " + id;
      }
      if (node.kind == NodeKind::Statement && mode_ == BuildMode::Coarse) return "statement in coarse graph";
    }
    // Every node has at most one parent, so a cycle shows up as a walk that
    // never reaches a root.
    for (const auto& [id, _] : nodes_) {
      std::size_t steps = 0;
      for (const EntityNode* cur = find(id); cur != nullptr; cur = parent(cur->id)) {
        if (++steps > nodes_.size()) return "Contains cycle through " + id;
      }
    }
    return std::nullopt;
  }

 private:
  using AdjLists = std::array<std::vector<std::string>, kEdgeKindCount>;

  bool insert_edge(TypedEdge e) {
    auto [it, inserted] = edges_.insert(std::move(e));
    if (inserted) {
      out_[it->src][static_cast<std::size_t>(it->kind)].push_back(it->dst);
      in_[it->dst][static_cast<std::size_t>(it->kind)].push_back(it->src);
    }
    return inserted;
  }

  static const AdjLists& lists(const std::unordered_map<std::string, AdjLists>& m, const std::string& id) {
    static const AdjLists kEmpty{};
    auto it = m.find(id);
    return it == m.end() ? kEmpty : it->second;
  }

  BuildMode mode_;
  bool frozen_ = false;
  NodeMap nodes_;
  EdgeSet edges_;
  std::unordered_map<std::string, AdjLists> out_;
  std::unordered_map<std::string, AdjLists> in_;
};

}  // namespace slicegraph
