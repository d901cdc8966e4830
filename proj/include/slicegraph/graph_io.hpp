#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "slicegraph/graph.hpp"

namespace slicegraph {

inline constexpr const char* kGraphFormat = "arise-graph/1";

// JSON Lines: one meta record, then nodes sorted by id, then edges sorted by
// (src, dst, kind, variable). Both orders fall out of the container ordering,
// so two saves of equal graphs are byte-identical.
inline void save_graph(const RepoGraph& graph, std::ostream& sink) {
  using ordered = nlohmann::ordered_json;
  ordered meta = {{"rec", "meta"},
                  {"format", kGraphFormat},
                  {"build_mode", to_string(graph.build_mode())},
                  {"node_count", graph.nodes().size()},
                  {"edge_count", graph.edges().size()}};
  sink << meta.dump() << '\n';
  for (const auto& [id, n] : graph.nodes()) {
    ordered rec = {{"rec", "node"},
                   {"id", n.id},
                   {"kind", to_string(n.kind)},
                   {"name", n.name},
                   {"qualified_name", n.qualified_name},
                   {"file_path", n.file_path},
                   {"start_line", n.start_line},
                   {"end_line", n.end_line},
                   {"doc_head", n.doc_head}};
    sink << rec.dump() << '\n';
  }
  for (const auto& e : graph.edges()) {
    ordered rec = {{"rec", "edge"}, {"src", e.src}, {"dst", e.dst}, {"kind", to_string(e.kind)}};
    if (!e.variable.empty()) rec["variable"] = e.variable;
    sink << rec.dump() << '\n';
  }
}

inline std::string save_graph_string(const RepoGraph& graph) {
  std::ostringstream out;
  save_graph(graph, out);
  return out.str();
}

inline void save_graph_file(const RepoGraph& graph, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path);
  save_graph(graph, out);
  if (!out) throw Error("io_error", "write failed: " + path);
}

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw CorruptFile(line, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string string_field(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto& v = field(rec, key, line);
  if (!v.is_string()) throw CorruptFile(line, std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

inline int int_field(const nlohmann::json& rec, const char* key, std::size_t line) {
  const auto& v = field(rec, key, line);
  if (!v.is_number_integer()) throw CorruptFile(line, std::string("field '") + key + "' is not an integer");
  return v.get<int>();
}

}  // namespace detail

// Returns a frozen graph. Any malformed record, count mismatch (truncation)
// or violated graph invariant raises CorruptFile.
inline RepoGraph load_graph(std::istream& source) {
  using detail::int_field;
  using detail::string_field;

  std::string text;
  std::size_t line_no = 0;
  std::optional<RepoGraph> graph;
  std::size_t expected_nodes = 0;
  std::size_t expected_edges = 0;
  bool seen_edge = false;
  std::size_t edge_records = 0;

  while (std::getline(source, text)) {
    ++line_no;
    if (text.empty()) throw CorruptFile(line_no, "empty record");
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptFile(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw CorruptFile(line_no, "record is not an object");
    const std::string tag = string_field(rec, "rec", line_no);

    if (line_no == 1) {
      if (tag != "meta") throw CorruptFile(line_no, "first record must be meta");
      if (string_field(rec, "format", line_no) != kGraphFormat) throw CorruptFile(line_no, "unsupported format");
      auto mode = parse_build_mode(string_field(rec, "build_mode", line_no));
      if (!mode) throw CorruptFile(line_no, "unknown build_mode");
      expected_nodes = static_cast<std::size_t>(int_field(rec, "node_count", line_no));
      expected_edges = static_cast<std::size_t>(int_field(rec, "edge_count", line_no));
      graph.emplace(*mode);
      continue;
    }

    try {
      if (tag == "node") {
        if (seen_edge) throw CorruptFile(line_no, "node record after edge records");
        EntityNode n;
        auto kind = parse_node_kind(string_field(rec, "kind", line_no));
        if (!kind) throw CorruptFile(line_no, "unknown node kind");
        n.kind = *kind;
        n.name = string_field(rec, "name", line_no);
        n.qualified_name = string_field(rec, "qualified_name", line_no);
        n.file_path = string_field(rec, "file_path", line_no);
        n.start_line = int_field(rec, "start_line", line_no);
        n.end_line = int_field(rec, "end_line", line_no);
        n.doc_head = string_field(rec, "doc_head", line_no);
        const std::string id = string_field(rec, "id", line_no);
        if (graph->contains(id)) throw CorruptFile(line_no, "duplicate node " + id);
        if (graph->upsert_node(n) != id) throw CorruptFile(line_no, "id does not match node payload: " + id);
      } else if (tag == "edge") {
        seen_edge = true;
        ++edge_records;
        auto kind = parse_edge_kind(string_field(rec, "kind", line_no));
        if (!kind) throw CorruptFile(line_no, "unknown edge kind");
        std::string variable;
        if (rec.contains("variable")) variable = string_field(rec, "variable", line_no);
        // Mirrors are re-derived by connect(); the stored mirror record then
        // inserts nothing new.
        graph->connect(string_field(rec, "src", line_no), string_field(rec, "dst", line_no), *kind, variable);
      } else {
        throw CorruptFile(line_no, "unknown record tag '" + tag + "'");
      }
    } catch (const CorruptFile&) {
      throw;
    } catch (const Error& e) {
      throw CorruptFile(line_no, e.what());
    }
  }

  if (!graph) throw CorruptFile(line_no + 1, "missing meta record");
  if (graph->nodes().size() != expected_nodes || graph->edges().size() != expected_edges ||
      edge_records != expected_edges) {
    throw CorruptFile(line_no + 1, "record count does not match meta (truncated file?)");
  }
  if (auto violation = graph->validate()) throw CorruptFile(line_no + 1, *violation);
  graph->freeze();
  return std::move(*graph);
}

inline RepoGraph load_graph_string(const std::string& text) {
  std::istringstream in(text);
  return load_graph(in);
}

inline RepoGraph load_graph_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  return load_graph(in);
}

}  // namespace slicegraph
