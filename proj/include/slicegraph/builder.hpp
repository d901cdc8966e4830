#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slicegraph/dataflow_pass.hpp"
#include "slicegraph/error.hpp"
#include "slicegraph/structural_pass.hpp"

namespace slicegraph {

struct BuildResult {
  RepoGraph graph;
  BuildDiagnostics diagnostics;
};

// Both passes over in-memory sources; the returned graph is frozen.
inline BuildResult build_graph(std::vector<SourceFile> sources, BuildMode mode) {
  BuildResult out{RepoGraph(mode), {}};
  StructuralResult s = build_structural_graph(std::move(sources), mode, out.diagnostics);
  if (mode == BuildMode::Full) {
    for (std::size_t mi = 0; mi < s.modules.size(); ++mi) {
      const auto& entities = s.modules[mi].entities;
      for (std::size_t ei = 0; ei < entities.size(); ++ei) {
        const std::string& id = s.entity_ids[mi][ei];
        if (entities[ei].kind == EntityKind::Class || id.empty()) continue;
        auto facts = statement_facts(entities[ei]);
        auto ids = emit_statement_nodes(s.graph, s.graph.at(id), facts);
        for (const auto& e : link_def_use(ids, facts)) s.graph.connect(e.src, e.dst, e.kind, e.variable);
      }
    }
  }
  s.graph.freeze();
  out.graph = std::move(s.graph);
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Every .py file under root, paths relative and '/'-separated. Hidden
// directories are skipped and symlinks are not followed.
inline std::vector<SourceFile> collect_sources(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a readable directory: " + root.string());
  std::vector<SourceFile> files;
  fs::recursive_directory_iterator it(root, fs::directory_options::none, ec);
  if (ec) throw IoError("cannot open " + root.string() + ": " + ec.message());
  for (; it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) throw IoError("cannot walk " + root.string() + ": " + ec.message());
    const auto& entry = *it;
    const std::string name = entry.path().filename().string();
    if (entry.is_symlink(ec)) {
      if (entry.is_directory(ec)) it.disable_recursion_pending();
      continue;
    }
    if (entry.is_directory(ec)) {
      if (name.starts_with(".") || name == "__pycache__") it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file(ec) || entry.path().extension() != ".py") continue;
    files.push_back({fs::relative(entry.path(), root).generic_string(), read_file(entry.path())});
  }
  return files;
}

inline BuildResult build_repository(const std::filesystem::path& root, BuildMode mode) {
  return build_graph(collect_sources(root), mode);
}

}  // namespace slicegraph
