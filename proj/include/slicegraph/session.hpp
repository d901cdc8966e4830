#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "slicegraph/builder.hpp"
#include "slicegraph/error.hpp"
#include "slicegraph/graph.hpp"
#include "slicegraph/text.hpp"

namespace slicegraph {

struct LineSpan {
  std::string file;
  int start_line = 0;
  int end_line = 0;

  bool overlaps(const std::string& f, int s, int e) const { return file == f && start_line <= e && s <= end_line; }
  bool operator==(const LineSpan&) const = default;
};

// Spans produced by slicer calls. The only mutable part of a session.
class SliceRegistry {
 public:
  void add(LineSpan span) {
    std::lock_guard lock(mu_);
    spans_.push_back(std::move(span));
  }

  bool overlaps(const std::string& file, int start, int end) const {
    std::lock_guard lock(mu_);
    return std::any_of(spans_.begin(), spans_.end(), [&](const LineSpan& s) { return s.overlaps(file, start, end); });
  }

  std::vector<LineSpan> snapshot() const {
    std::lock_guard lock(mu_);
    return spans_;
  }

  void clear() {
    std::lock_guard lock(mu_);
    spans_.clear();
  }

 private:
  mutable std::mutex mu_;
  std::vector<LineSpan> spans_;
};

enum class MatchedField : std::uint8_t { Name, Path, Doc };

inline std::string_view to_string(MatchedField f) {
  switch (f) {
    case MatchedField::Name: return "name";
    case MatchedField::Path: return "path";
    case MatchedField::Doc: return "doc";
  }
  return "?";
}

struct SearchHit {
  std::string id;
  double score = 0.0;
  MatchedField matched_field = MatchedField::Name;
};

// TF-IDF over one document per non-Statement entity. Vectors are sparse,
// sorted by term index, and L2-normalized.
class LexicalIndex {
 public:
  using Vector = std::vector<std::pair<std::size_t, double>>;

  explicit LexicalIndex(const RepoGraph& graph) {
    std::vector<std::map<std::size_t, double>> counts;
    for (const auto& [id, node] : graph.nodes()) {
      if (node.kind == NodeKind::Statement) continue;
      Doc doc{id, term_set(node.name), term_set(node.qualified_name + " " + node.file_path), {}};
      std::map<std::size_t, double> tf;
      for (const auto& text : {node.name, node.qualified_name, node.file_path, node.doc_head}) {
        for (const auto& t : tokenize_terms(text)) tf[intern(t)] += 1.0;
      }
      counts.push_back(std::move(tf));
      docs_.push_back(std::move(doc));
    }
    df_.assign(vocab_.size(), 0);
    for (const auto& tf : counts) {
      for (const auto& [t, _] : tf) ++df_[t];
    }
    const auto n = static_cast<double>(docs_.size());
    idf_.resize(vocab_.size());
    for (std::size_t t = 0; t < vocab_.size(); ++t) idf_[t] = std::log((1.0 + n) / (1.0 + df_[t])) + 1.0;
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      for (const auto& [t, c] : counts[i]) docs_[i].vec.emplace_back(t, c * idf_[t]);
      normalize(docs_[i].vec);
    }
  }

  std::size_t size() const { return docs_.size(); }

  std::vector<SearchHit> search(const std::string& query, std::size_t k) const {
    std::map<std::size_t, double> tf;
    std::vector<std::string> qterms;
    for (const auto& t : tokenize_terms(query)) {
      auto it = vocab_.find(t);
      if (it == vocab_.end()) continue;
      tf[it->second] += 1.0;
      qterms.push_back(t);
    }
    Vector q;
    for (const auto& [t, c] : tf) q.emplace_back(t, c * idf_[t]);
    normalize(q);
    std::vector<SearchHit> hits;
    if (q.empty()) return hits;
    for (const auto& doc : docs_) {
      double s = std::clamp(dot(q, doc.vec), 0.0, 1.0);
      if (s <= 0.0) continue;
      hits.push_back({doc.id, s, matched_field(doc, qterms)});
    }
    std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
      return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

  // Scores for every entity with a nonzero match, keyed by id.
  std::map<std::string, double> all_scores(const std::string& text) const {
    std::map<std::string, double> out;
    for (const auto& hit : search(text, docs_.size())) out.emplace(hit.id, hit.score);
    return out;
  }

 private:
  struct Doc {
    std::string id;
    std::vector<std::string> name_terms;
    std::vector<std::string> path_terms;
    Vector vec;
  };

  static std::vector<std::string> term_set(const std::string& text) {
    auto terms = tokenize_terms(text);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    return terms;
  }

  static bool has(const std::vector<std::string>& sorted, const std::string& t) {
    return std::binary_search(sorted.begin(), sorted.end(), t);
  }

  static MatchedField matched_field(const Doc& doc, const std::vector<std::string>& qterms) {
    auto any = [&](const std::vector<std::string>& field) {
      return std::any_of(qterms.begin(), qterms.end(), [&](const std::string& t) { return has(field, t); });
    };
    if (any(doc.name_terms)) return MatchedField::Name;
    if (any(doc.path_terms)) return MatchedField::Path;
    return MatchedField::Doc;
  }

  std::size_t intern(const std::string& term) {
    auto [it, inserted] = vocab_.try_emplace(term, vocab_.size());
    return it->second;
  }

  static void normalize(Vector& v) {
    double norm = 0.0;
    for (const auto& [_, x] : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      v.clear();
      return;
    }
    for (auto& [_, x] : v) x /= norm;
  }

  static double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i].first == b[j].first) {
        s += a[i++].second * b[j++].second;
      } else if (a[i].first < b[j].first) {
        ++i;
      } else {
        ++j;
      }
    }
    return s;
  }

  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<std::size_t> df_;
  std::vector<double> idf_;
  std::vector<Doc> docs_;
};

struct ScopeRecord {
  std::optional<std::string> function;
  std::optional<std::string> class_id;
  std::string module;
};

struct TraversalReport {
  std::vector<std::pair<std::string, int>> nodes;  // (id, hop), by hop then id
  bool truncated = false;
};

struct CodeSpan {
  std::string file;
  int start_line = 0;
  int end_line = 0;  // after clamping
  std::string text;
  bool clamped = false;
};

struct EntityInfo {
  EntityNode node;
  std::map<EdgeKind, std::size_t> in_degree;
  std::map<EdgeKind, std::size_t> out_degree;
  std::size_t statement_children = 0;
};

// Frozen graph plus the indexes every tool shares.
class RetrievalSession {
 public:
  // `sources` maps repo-relative paths to file text; every module file of the
  // graph must be present.
  RetrievalSession(RepoGraph graph, const std::map<std::string, std::string>& sources)
      : graph_(std::move(graph)), index_(graph_) {
    if (!graph_.frozen()) graph_.freeze();
    for (const auto& [id, node] : graph_.nodes()) {
      if (node.kind == NodeKind::Module) {
        modules_.emplace(node.file_path, id);
        auto it = sources.find(node.file_path);
        if (it == sources.end()) throw IoError("no source text for " + node.file_path);
        lines_.emplace(node.file_path, split_lines(it->second));
        if (graph_.build_mode() == BuildMode::Full) index_statement_facts(node.file_path, it->second);
      } else if (node.kind == NodeKind::Class || is_callable(node.kind)) {
        scopes_[node.file_path].push_back(&node);
      }
    }
  }

  static RetrievalSession open(RepoGraph graph, const std::filesystem::path& repo_root) {
    std::map<std::string, std::string> sources;
    for (const auto& [id, node] : graph.nodes()) {
      if (node.kind == NodeKind::Module) sources.emplace(node.file_path, read_file(repo_root / node.file_path));
    }
    return RetrievalSession(std::move(graph), sources);
  }

  RetrievalSession(const RetrievalSession&) = delete;
  RetrievalSession& operator=(const RetrievalSession&) = delete;
  RetrievalSession(RetrievalSession&& other) noexcept
      : graph_(std::move(other.graph_)),
        index_(std::move(other.index_)),
        modules_(std::move(other.modules_)),
        lines_(std::move(other.lines_)),
        scopes_(std::move(other.scopes_)),
        facts_(std::move(other.facts_)) {
    // scope pointers refer into the node map, which moves with the graph
    for (const auto& span : other.registry_.snapshot()) registry_.add(span);
  }

  const RepoGraph& graph() const { return graph_; }
  const LexicalIndex& index() const { return index_; }
  SliceRegistry& registry() { return registry_; }
  const SliceRegistry& registry() const { return registry_; }

  // Defs and uses of a Statement node, re-derived from the session's source.
  const StatementFact* statement_fact(const std::string& id) const {
    auto it = facts_.find(id);
    return it == facts_.end() ? nullptr : &it->second;
  }

  bool knows_file(const std::string& file) const { return modules_.contains(file); }
  std::vector<std::string> files() const {
    std::vector<std::string> out;
    for (const auto& [f, _] : modules_) out.push_back(f);
    return out;
  }

  std::vector<SearchHit> search_entities(const std::string& query, int k) const {
    if (k < 1) throw InvalidArgument("k must be >= 1");
    return index_.search(query, static_cast<std::size_t>(k));
  }

  TraversalReport traverse_relations(const std::string& seed, const std::vector<EdgeKind>& kinds, int max_hops,
                                     int node_budget) const {
    if (!graph_.contains(seed)) throw UnknownNode(seed);
    if (max_hops < 1) throw InvalidArgument("max_hops must be >= 1");
    if (node_budget < 1) throw InvalidArgument("node_budget must be >= 1");
    TraversalReport report;
    std::unordered_map<std::string, int> seen{{seed, 0}};
    report.nodes.emplace_back(seed, 0);
    std::vector<std::string> layer{seed};
    for (int hop = 1; hop <= max_hops && !layer.empty(); ++hop) {
      std::vector<std::string> next;
      for (const auto& id : layer) {
        for (EdgeKind k : kinds) {
          for (const auto& n : graph_.out(id, k)) {
            if (!seen.contains(n)) next.push_back(n);
          }
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      for (const auto& n : next) {
        if (report.nodes.size() >= static_cast<std::size_t>(node_budget)) {
          report.truncated = true;
          return report;
        }
        seen.emplace(n, hop);
        report.nodes.emplace_back(n, hop);
      }
      layer = std::move(next);
    }
    return report;
  }

  ScopeRecord get_enclosing_scopes(const std::string& file, int line) const {
    auto m = modules_.find(file);
    if (m == modules_.end()) throw UnknownFile(file);
    ScopeRecord rec;
    rec.module = m->second;
    const EntityNode& module = graph_.at(m->second);
    if (line < 1 || line > module.end_line) return rec;
    const EntityNode* fn = nullptr;
    const EntityNode* cls = nullptr;
    if (auto it = scopes_.find(file); it != scopes_.end()) {
      for (const EntityNode* n : it->second) {
        if (n->start_line > line || line > n->end_line) continue;
        const EntityNode*& slot = n->kind == NodeKind::Class ? cls : fn;
        if (slot == nullptr || inner(*n, *slot)) slot = n;
      }
    }
    if (fn != nullptr) rec.function = fn->id;
    if (cls != nullptr) rec.class_id = cls->id;
    return rec;
  }

  CodeSpan get_code_span(const std::string& file, int start, int end) const {
    auto it = lines_.find(file);
    if (it == lines_.end()) throw UnknownFile(file);
    if (start < 1 || start > end) throw InvalidArgument("need 1 <= start_line <= end_line");
    const auto& lines = it->second;
    const int n = static_cast<int>(lines.size());
    CodeSpan span{file, start, end, {}, false};
    if (end > n) {
      span.end_line = std::max(n, start - 1);
      span.clamped = true;
    }
    for (int l = start; l <= span.end_line; ++l) {
      if (l > start) span.text += '\n';
      span.text += lines[static_cast<std::size_t>(l - 1)];
    }
    return span;
  }

  EntityInfo get_entity_info(const std::string& id) const {
    EntityInfo info{graph_.at(id), {}, {}, 0};
    for (EdgeKind k : kAllEdgeKinds) {
      if (auto n = graph_.in(id, k).size()) info.in_degree[k] = n;
      if (auto n = graph_.out(id, k).size()) info.out_degree[k] = n;
    }
    for (const auto& child : graph_.out(id, EdgeKind::Contains)) {
      info.statement_children += graph_.at(child).kind == NodeKind::Statement;
    }
    return info;
  }

 private:
  void index_statement_facts(const std::string& file, const std::string& text) {
    if (!is_valid_utf8(text)) return;
    ModuleSyntax syntax = parse_module(file, text);
    for (const auto& e : syntax.entities) {
      if (e.kind == EntityKind::Class) continue;
      const std::string qn = syntax.module_name + "." + e.local_qualname;
      auto facts = statement_facts(e);
      for (std::size_t k = 0; k < facts.size(); ++k) {
        std::string id = make_node_id(NodeKind::Statement, qn + "#" + std::to_string(k), facts[k].start_line);
        if (graph_.contains(id)) facts_.emplace(std::move(id), std::move(facts[k]));
      }
    }
  }

  static bool inner(const EntityNode& a, const EntityNode& b) {
    if (a.start_line != b.start_line) return a.start_line > b.start_line;
    return a.end_line < b.end_line;
  }

  RepoGraph graph_;
  LexicalIndex index_;
  std::map<std::string, std::string> modules_;  // file path -> module id
  std::map<std::string, std::vector<std::string>> lines_;
  std::map<std::string, std::vector<const EntityNode*>> scopes_;
  std::map<std::string, StatementFact> facts_;
  SliceRegistry registry_;
};

}  // namespace slicegraph
