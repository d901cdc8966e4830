#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "slicegraph/session.hpp"
#include "slicegraph/slicer.hpp"

namespace slicegraph {

struct BundleWeights {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 1.5;
};

enum class BundleStrategy : std::uint8_t { StructuralOnly, SlicesOnly, Hybrid };

inline std::string_view to_string(BundleStrategy s) {
  switch (s) {
    case BundleStrategy::StructuralOnly: return "structural_only";
    case BundleStrategy::SlicesOnly: return "slices_only";
    case BundleStrategy::Hybrid: return "hybrid";
  }
  return "?";
}

inline std::optional<BundleStrategy> parse_strategy(std::string_view s) {
  if (s == "structural_only") return BundleStrategy::StructuralOnly;
  if (s == "slices_only") return BundleStrategy::SlicesOnly;
  if (s == "hybrid") return BundleStrategy::Hybrid;
  return std::nullopt;
}

inline BundleWeights weights_for(BundleStrategy s, BundleWeights w = {}) {
  if (s == BundleStrategy::StructuralOnly) w.gamma = 0.0;
  if (s == BundleStrategy::SlicesOnly) w.alpha = w.beta = 0.0;
  return w;
}

inline double score_span(double rel, double prox, bool in_slice, const BundleWeights& w) {
  return w.alpha * rel + w.beta * prox + w.gamma * (in_slice ? 1.0 : 0.0);
}

inline double proximity(int hops) { return 1.0 / (1.0 + hops); }

struct ScoredSpan {
  std::string entity_id;
  std::string file;
  int start_line = 0;
  int end_line = 0;
  double rel = 0.0;
  double prox = 0.0;
  bool in_slice = false;
  double score = 0.0;
  std::size_t token_cost = 0;
  std::string text;
};

struct ContextBundle {
  BundleStrategy strategy = BundleStrategy::Hybrid;
  BundleWeights weights;
  std::size_t budget_tokens = 0;
  std::vector<ScoredSpan> spans;  // packing order
  std::size_t total_tokens = 0;
  std::size_t skipped_count = 0;
};

inline constexpr int kProximityHops = 4;
inline constexpr int kRankExpansionHops = 2;
inline constexpr int kRankSearchHits = 10;
inline constexpr std::size_t kDefaultBudget = 8000;

namespace detail {

// Multi-source BFS treating the listed kinds as undirected.
inline std::map<std::string, int> hop_distances(const RepoGraph& g, const std::vector<std::string>& seeds,
                                                const std::vector<EdgeKind>& kinds, int max_hops) {
  std::map<std::string, int> dist;
  std::deque<std::string> queue;
  for (const auto& s : seeds) {
    if (dist.emplace(s, 0).second) queue.push_back(s);
  }
  while (!queue.empty()) {
    std::string cur = std::move(queue.front());
    queue.pop_front();
    int d = dist.at(cur);
    if (d == max_hops) continue;
    for (EdgeKind k : kinds) {
      for (const auto& n : g.out(cur, k)) {
        if (dist.emplace(n, d + 1).second) queue.push_back(n);
      }
      for (const auto& n : g.in(cur, k)) {
        if (dist.emplace(n, d + 1).second) queue.push_back(n);
      }
    }
  }
  return dist;
}

inline std::vector<ScoredSpan> merge_overlapping(std::vector<ScoredSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const ScoredSpan& a, const ScoredSpan& b) {
    if (a.file != b.file) return a.file < b.file;
    if (a.start_line != b.start_line) return a.start_line < b.start_line;
    return a.end_line > b.end_line;
  });
  std::vector<ScoredSpan> out;
  for (auto& s : spans) {
    if (!out.empty() && out.back().file == s.file && s.start_line <= out.back().end_line) {
      ScoredSpan& m = out.back();
      if (s.end_line - s.start_line > m.end_line - m.start_line) m.entity_id = s.entity_id;
      m.end_line = std::max(m.end_line, s.end_line);
      m.rel = std::max(m.rel, s.rel);
      m.prox = std::max(m.prox, s.prox);
      m.in_slice = m.in_slice || s.in_slice;
    } else {
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace detail

// Scores candidate spans with the linear relevance/proximity/slice formula
// and packs them greedily into the token budget.
inline ContextBundle build_context_bundle(const RetrievalSession& session, const std::vector<std::string>& seeds,
                                          const std::vector<DataflowSlice>& slices, BundleStrategy strategy,
                                          std::size_t budget = kDefaultBudget, const std::string& issue_text = {},
                                          BundleWeights base = {}) {
  const RepoGraph& g = session.graph();
  for (const auto& s : seeds) {
    if (!g.contains(s)) throw UnknownNode(s);
  }
  if (strategy != BundleStrategy::SlicesOnly && seeds.empty()) throw EmptySeedSet();

  ContextBundle bundle;
  bundle.strategy = strategy;
  bundle.weights = weights_for(strategy, base);
  bundle.budget_tokens = budget;

  const auto rel = issue_text.empty() ? std::map<std::string, double>{} : session.index().all_scores(issue_text);
  auto rel_of = [&](const std::string& id) {
    auto it = rel.find(id);
    return it == rel.end() ? 0.0 : it->second;
  };

  std::vector<LineSpan> slice_spans;
  std::vector<ScoredSpan> candidates;
  if (strategy != BundleStrategy::StructuralOnly) {
    for (const auto& slice : slices) {
      for (const auto& step : slice.steps) {
        slice_spans.push_back({step.file, step.start_line, step.end_line});
        const EntityNode* owner = g.contains(step.statement_id) ? g.enclosing_callable(step.statement_id) : nullptr;
        std::string entity = owner != nullptr ? owner->id : step.statement_id;
        ScoredSpan c;
        c.entity_id = entity;
        c.file = step.file;
        c.start_line = step.start_line;
        c.end_line = step.end_line;
        c.rel = rel_of(entity);
        c.in_slice = true;
        candidates.push_back(std::move(c));
      }
    }
  }
  if (strategy != BundleStrategy::SlicesOnly) {
    auto dist = detail::hop_distances(g, seeds, {EdgeKind::Calls, EdgeKind::Imports}, kProximityHops);
    for (const auto& [id, d] : dist) {
      const EntityNode& n = g.at(id);
      bool seed_scope = d == 0 && (n.kind == NodeKind::Class || n.kind == NodeKind::Module);
      if (!is_callable(n.kind) && !seed_scope) continue;
      ScoredSpan c;
      c.entity_id = id;
      c.file = n.file_path;
      c.start_line = n.start_line;
      c.end_line = n.end_line;
      c.rel = rel_of(id);
      c.prox = proximity(d);
      c.in_slice = std::any_of(slice_spans.begin(), slice_spans.end(),
                               [&](const LineSpan& s) { return s.overlaps(c.file, c.start_line, c.end_line); });
      candidates.push_back(std::move(c));
    }
  }

  auto merged = detail::merge_overlapping(std::move(candidates));
  for (auto& c : merged) {
    c.score = score_span(c.rel, c.prox, c.in_slice, bundle.weights);
    c.text = session.get_code_span(c.file, c.start_line, c.end_line).text;
    c.token_cost = estimate_tokens(c.text);
  }
  std::stable_sort(merged.begin(), merged.end(), [](const ScoredSpan& a, const ScoredSpan& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.file != b.file) return a.file < b.file;
    return a.start_line < b.start_line;
  });
  for (auto& c : merged) {
    if (bundle.total_tokens + c.token_cost <= budget) {
      bundle.total_tokens += c.token_cost;
      bundle.spans.push_back(std::move(c));
    } else {
      ++bundle.skipped_count;
    }
  }
  return bundle;
}

struct StackFrame {
  std::string file;
  int line = 0;
  std::string function;
  bool operator==(const StackFrame&) const = default;
};

// Standard interpreter traceback frames; anything else is ignored.
inline std::vector<StackFrame> parse_stack_trace(const std::string& text) {
  static const std::regex frame(R"re(File "([^"]+)", line (\d+)(?:, in ([^\s]+))?)re");
  std::vector<StackFrame> frames;
  for (const auto& line : split_lines(text)) {
    std::smatch m;
    if (!std::regex_search(line, m, frame)) continue;
    try {
      frames.push_back({m[1].str(), std::stoi(m[2].str()), m[3].matched ? m[3].str() : std::string()});
    } catch (const std::out_of_range&) {
    }
  }
  return frames;
}

// Known file a traceback path refers to: exact match, else the longest
// repository path that is a '/'-aligned suffix of it.
inline std::optional<std::string> match_frame_file(const RetrievalSession& session, std::string path) {
  std::replace(path.begin(), path.end(), '\\', '/');
  if (session.knows_file(path)) return path;
  std::optional<std::string> best;
  for (const auto& f : session.files()) {
    if (path.size() > f.size() && path.ends_with(f) && path[path.size() - f.size() - 1] == '/' &&
        (!best || f.size() > best->size())) {
      best = f;
    }
  }
  return best;
}

struct RankedRegion {
  std::string id;
  std::string file;
  int start_line = 0;
  int end_line = 0;
  double rel = 0.0;
  double prox = 0.0;
  bool in_slice = false;
  double score = 0.0;
};

// Seeds from traceback frames and lexical hits on functions, expanded two
// hops over the call graph, scored with slice membership read from the
// session registry.
inline std::vector<RankedRegion> rank_suspect_regions(const RetrievalSession& session, const std::string& issue_text,
                                                      const std::string& stack_trace = {}, BundleWeights w = {}) {
  if (issue_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw InvalidArgument("issue_text must be non-empty");
  }
  const RepoGraph& g = session.graph();
  std::vector<std::string> seeds;
  for (const auto& frame : parse_stack_trace(stack_trace)) {
    auto file = match_frame_file(session, frame.file);
    if (!file) continue;
    if (auto scope = session.get_enclosing_scopes(*file, frame.line); scope.function) seeds.push_back(*scope.function);
  }
  for (const auto& hit : session.search_entities(issue_text, kRankSearchHits)) {
    if (is_callable(g.at(hit.id).kind)) seeds.push_back(hit.id);
  }
  const auto rel = session.index().all_scores(issue_text);
  std::vector<RankedRegion> out;
  for (const auto& [id, d] : detail::hop_distances(g, seeds, {EdgeKind::Calls}, kRankExpansionHops)) {
    const EntityNode& n = g.at(id);
    RankedRegion r;
    r.id = id;
    r.file = n.file_path;
    r.start_line = n.start_line;
    r.end_line = n.end_line;
    if (auto it = rel.find(id); it != rel.end()) r.rel = it->second;
    r.prox = proximity(d);
    r.in_slice = session.registry().overlaps(n.file_path, n.start_line, n.end_line);
    r.score = score_span(r.rel, r.prox, r.in_slice, w);
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const RankedRegion& a, const RankedRegion& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  });
  return out;
}

}  // namespace slicegraph
