#pragma once

// Randomized checks shared by the unit suite and the acceptance binary. Each
// returns an empty optional on success and a description of the first
// disagreement otherwise.

#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixture.hpp"
#include "generator.hpp"
#include "oracles.hpp"

namespace testsupport {

inline int statement_index(const std::string& id) {
  auto hash = id.find('#');
  return std::stoi(id.substr(hash + 1, id.find(':', hash) - hash - 1));
}

inline std::set<OracleEdge> library_edges(const slicegraph::RepoGraph& g) {
  std::set<OracleEdge> out;
  for (const auto& e : g.edges()) {
    if (e.kind == slicegraph::EdgeKind::DataflowDefUse) {
      out.emplace(statement_index(e.src), statement_index(e.dst), e.variable);
    }
  }
  return out;
}

inline std::string describe(const std::set<OracleEdge>& edges) {
  std::ostringstream o;
  for (const auto& [d, u, v] : edges) o << "(" << d << "->" << u << " " << v << ") ";
  return o.str();
}

// Dataflow edges and every slice of one generated function against the
// oracles.
inline std::optional<std::string> check_generated_function(std::uint32_t seed) {
  auto fn = generate_function(seed);
  auto session = session_for({{"gen.py", fn.source}});
  auto expected = oracle_reaching_defs(fn.statements);
  auto actual = library_edges(session->graph());
  if (expected != actual) {
    return "seed " + std::to_string(seed) + ": edges differ\n  oracle:  " + describe(expected) +
           "\n  library: " + describe(actual) + "\n" + fn.source;
  }
  using slicegraph::SliceDirection;
  const std::pair<SliceDirection, OracleDirection> dirs[] = {{SliceDirection::Backward, OracleDirection::Backward},
                                                             {SliceDirection::Forward, OracleDirection::Forward},
                                                             {SliceDirection::Both, OracleDirection::Both}};
  for (int s = 0; s < static_cast<int>(fn.statements.size()); ++s) {
    const auto& st = fn.statements[s];
    std::set<std::string> vars;
    for (const auto& v : st.defs()) vars.insert(v);
    for (const auto& v : st.uses()) vars.insert(v);
    for (const auto& v : vars) {
      for (const auto& [lib_dir, oracle_dir] : dirs) {
        auto slice = slicegraph::get_dataflow_slice(*session, "gen.py", st.line, v, lib_dir, 50);
        std::set<int> got;
        for (const auto& step : slice.steps) got.insert(statement_index(step.statement_id));
        auto want = oracle_slice(expected, fn.statements, s, v, oracle_dir);
        if (got != want || slice.truncated) {
          std::ostringstream o;
          o << "seed " << seed << ": slice of '" << v << "' at statement " << s << " ("
            << slicegraph::to_string(lib_dir) << ") differs; oracle {";
          for (int x : want) o << x << ' ';
          o << "} library {";
          for (int x : got) o << x << ' ';
          o << "}\n" << fn.source;
          return o.str();
        }
      }
    }
  }
  return std::nullopt;
}

// Random directed Calls graph of up to `max_nodes` functions, traversed from
// a random seed with random limits and compared with an unbounded oracle BFS.
inline std::optional<std::string> check_random_traversal(std::uint32_t seed, int max_nodes = 200) {
  using namespace slicegraph;
  std::mt19937 rng(seed);
  const int n = 1 + static_cast<int>(rng() % static_cast<std::uint32_t>(max_nodes));
  const int edge_count = static_cast<int>(rng() % static_cast<std::uint32_t>(3 * n + 1));

  RepoGraph g;
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) {
    EntityNode node;
    node.kind = NodeKind::Function;
    node.name = "f" + std::to_string(i);
    node.qualified_name = "m." + node.name;
    node.file_path = "m.py";
    node.start_line = node.end_line = i + 1;
    ids.push_back(g.upsert_node(node));
  }
  std::map<std::string, std::vector<std::string>> adj;
  for (int e = 0; e < edge_count; ++e) {
    const auto& a = ids[rng() % ids.size()];
    const auto& b = ids[rng() % ids.size()];
    if (a == b) continue;
    if (g.connect(a, b, EdgeKind::Calls) > 0) adj[a].push_back(b);
  }
  g.freeze();
  RetrievalSession session(std::move(g), {});

  const std::string& start = ids[rng() % ids.size()];
  const int max_hops = 1 + static_cast<int>(rng() % 6);
  const int budget = 1 + static_cast<int>(rng() % static_cast<std::uint32_t>(n + 5));
  auto report = session.traverse_relations(start, {EdgeKind::Calls}, max_hops, budget);

  std::vector<std::pair<int, std::string>> reachable;
  for (const auto& [id, d] : oracle_bfs(adj, start)) {
    if (d <= max_hops) reachable.emplace_back(d, id);
  }
  std::sort(reachable.begin(), reachable.end());
  const std::size_t keep = std::min(reachable.size(), static_cast<std::size_t>(budget));

  std::ostringstream why;
  why << "seed " << seed << " (n=" << n << ", hops=" << max_hops << ", budget=" << budget << "): ";
  if (report.nodes.size() != keep) {
    why << "expected " << keep << " nodes, got " << report.nodes.size();
    return why.str();
  }
  for (std::size_t i = 0; i < keep; ++i) {
    if (report.nodes[i].first != reachable[i].second || report.nodes[i].second != reachable[i].first) {
      why << "node " << i << " is " << report.nodes[i].first << "@" << report.nodes[i].second << ", oracle "
          << reachable[i].second << "@" << reachable[i].first;
      return why.str();
    }
  }
  if (report.truncated != (reachable.size() > static_cast<std::size_t>(budget))) {
    why << "truncated flag is " << report.truncated;
    return why.str();
  }
  return std::nullopt;
}

// score_span against the formula written out directly.
inline std::optional<std::string> check_random_scores(std::uint32_t seed, int count, double tolerance = 1e-9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.0, 3.0);
  for (int i = 0; i < count; ++i) {
    slicegraph::BundleWeights w{weight(rng), weight(rng), weight(rng)};
    double rel = unit(rng), prox = unit(rng);
    bool in_slice = (rng() & 1u) != 0;
    double expected = w.alpha * rel + w.beta * prox + (in_slice ? w.gamma : 0.0);
    double got = slicegraph::score_span(rel, prox, in_slice, w);
    if (std::abs(got - expected) > tolerance) {
      return "score_span(" + std::to_string(rel) + ", " + std::to_string(prox) + ") = " + std::to_string(got) +
             ", expected " + std::to_string(expected);
    }
  }
  return std::nullopt;
}

// Bundle invariants over F1 for every seed subset, strategy and a range of
// budgets: budget compliance, non-increasing packed scores, and
// structural_only equal to hybrid without slices.
inline std::optional<std::string> check_bundle_invariants() {
  using namespace slicegraph;
  auto session = f1_session();
  auto slice = get_dataflow_slice(*session, "pkg/main.py", 6, "y", SliceDirection::Backward);
  std::vector<std::string> pool;
  for (const auto& [id, n] : session->graph().nodes()) {
    if (n.kind != NodeKind::Statement && n.kind != NodeKind::Directory) pool.push_back(id);
  }
  for (unsigned mask = 1; mask < (1u << pool.size()); ++mask) {
    std::vector<std::string> seeds;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mask & (1u << i)) seeds.push_back(pool[i]);
    }
    for (std::size_t budget : {0, 5, 12, 20, 40, 8000}) {
      for (auto strategy : {BundleStrategy::Hybrid, BundleStrategy::StructuralOnly, BundleStrategy::SlicesOnly}) {
        auto b = build_context_bundle(*session, seeds, {slice}, strategy, budget, "inc value");
        std::size_t sum = 0;
        for (std::size_t i = 0; i < b.spans.size(); ++i) {
          sum += b.spans[i].token_cost;
          if (i > 0 && b.spans[i].score > b.spans[i - 1].score) return std::string("packed scores increase");
          for (std::size_t j = 0; j < i; ++j) {
            if (b.spans[j].file == b.spans[i].file && b.spans[j].start_line <= b.spans[i].end_line &&
                b.spans[i].start_line <= b.spans[j].end_line) {
              return std::string("packed spans overlap");
            }
          }
        }
        if (sum != b.total_tokens || b.total_tokens > budget) return std::string("budget exceeded");
      }
      auto hybrid = build_context_bundle(*session, seeds, {}, BundleStrategy::Hybrid, budget, "inc value");
      auto structural = build_context_bundle(*session, seeds, {slice}, BundleStrategy::StructuralOnly, budget,
                                             "inc value");
      if (hybrid.spans.size() != structural.spans.size() || hybrid.skipped_count != structural.skipped_count) {
        return std::string("structural_only differs from hybrid without slices");
      }
      for (std::size_t i = 0; i < hybrid.spans.size(); ++i) {
        const auto& h = hybrid.spans[i];
        const auto& st = structural.spans[i];
        if (h.entity_id != st.entity_id || h.file != st.file || h.start_line != st.start_line ||
            h.end_line != st.end_line || h.score != st.score || h.token_cost != st.token_cost) {
          return std::string("structural_only differs from hybrid without slices at span ") + std::to_string(i);
        }
      }
    }
  }
  return std::nullopt;
}

// Recall@k never decreases as k grows.
inline std::optional<std::string> check_recall_monotone(std::uint32_t seed, int instances) {
  std::mt19937 rng(seed);
  for (int i = 0; i < instances; ++i) {
    std::vector<int> preds(rng() % 12);
    for (auto& p : preds) p = static_cast<int>(rng() % 20);
    std::set<int> gold;
    for (std::uint32_t g = 1 + rng() % 4; g > 0; --g) gold.insert(static_cast<int>(rng() % 20));
    double prev = 0.0;
    for (std::size_t k = 1; k <= 15; ++k) {
      double r = slicegraph::metrics::recall_at_k(preds, gold, k);
      if (r < prev) return "instance " + std::to_string(i) + ": R@" + std::to_string(k) + " dropped";
      prev = r;
    }
  }
  return std::nullopt;
}

}  // namespace testsupport
