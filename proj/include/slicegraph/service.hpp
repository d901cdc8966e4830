#pragma once

#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slicegraph/context.hpp"
#include "slicegraph/session.hpp"
#include "slicegraph/slicer.hpp"
#include "slicegraph/text.hpp"

namespace slicegraph {

using Json = nlohmann::ordered_json;

// Wire encodings shared by the service and anything that wants to compare
// against it.
namespace wire {

inline Json node(const EntityNode& n) {
  return {{"id", n.id},
          {"kind", to_string(n.kind)},
          {"name", n.name},
          {"qualified_name", n.qualified_name},
          {"file_path", n.file_path},
          {"start_line", n.start_line},
          {"end_line", n.end_line},
          {"doc_head", n.doc_head}};
}

inline Json search_hits(const RetrievalSession& s, const std::vector<SearchHit>& hits) {
  Json arr = Json::array();
  for (const auto& h : hits) {
    const EntityNode& n = s.graph().at(h.id);
    arr.push_back({{"id", h.id},
                   {"kind", to_string(n.kind)},
                   {"qualified_name", n.qualified_name},
                   {"file_path", n.file_path},
                   {"start_line", n.start_line},
                   {"end_line", n.end_line},
                   {"score", h.score},
                   {"matched_field", to_string(h.matched_field)}});
  }
  return {{"hits", arr}};
}

inline Json traversal(const RetrievalSession& s, const TraversalReport& r) {
  Json arr = Json::array();
  for (const auto& [id, hop] : r.nodes) arr.push_back({{"id", id}, {"kind", to_string(s.graph().at(id).kind)}, {"hop", hop}});
  return {{"nodes", arr}, {"truncated", r.truncated}};
}

inline Json scopes(const ScopeRecord& r) {
  return {{"function", r.function ? Json(*r.function) : Json(nullptr)},
          {"class", r.class_id ? Json(*r.class_id) : Json(nullptr)},
          {"module", r.module}};
}

inline Json code_span(const CodeSpan& c) {
  return {{"file", c.file}, {"start_line", c.start_line}, {"end_line", c.end_line}, {"text", c.text}, {"clamped", c.clamped}};
}

inline Json entity_info(const EntityInfo& info) {
  Json in = Json::object(), out = Json::object();
  for (const auto& [k, n] : info.in_degree) in[std::string(to_string(k))] = n;
  for (const auto& [k, n] : info.out_degree) out[std::string(to_string(k))] = n;
  return {{"node", node(info.node)}, {"in_degree", in}, {"out_degree", out}, {"statement_children", info.statement_children}};
}

inline Json slice(const DataflowSlice& sl) {
  Json steps = Json::array();
  for (const auto& st : sl.steps) {
    steps.push_back({{"file", st.file},
                     {"start_line", st.start_line},
                     {"end_line", st.end_line},
                     {"variable", st.variable},
                     {"role", st.role},
                     {"statement_id", st.statement_id}});
  }
  return {{"direction", to_string(sl.direction)}, {"steps", steps}, {"truncated", sl.truncated}, {"note", sl.note}};
}

inline Json bundle(const ContextBundle& b) {
  Json spans = Json::array();
  for (const auto& c : b.spans) {
    spans.push_back({{"entity_id", c.entity_id},
                     {"file", c.file},
                     {"start_line", c.start_line},
                     {"end_line", c.end_line},
                     {"rel", c.rel},
                     {"prox", c.prox},
                     {"in_slice", c.in_slice},
                     {"score", c.score},
                     {"token_cost", c.token_cost},
                     {"text", c.text}});
  }
  return {{"strategy", to_string(b.strategy)},
          {"weights", {{"alpha", b.weights.alpha}, {"beta", b.weights.beta}, {"gamma", b.weights.gamma}}},
          {"budget_tokens", b.budget_tokens},
          {"total_tokens", b.total_tokens},
          {"skipped_count", b.skipped_count},
          {"spans", spans}};
}

inline Json regions(const std::vector<RankedRegion>& rs) {
  Json arr = Json::array();
  for (const auto& r : rs) {
    arr.push_back({{"id", r.id},
                   {"file", r.file},
                   {"start_line", r.start_line},
                   {"end_line", r.end_line},
                   {"rel", r.rel},
                   {"prox", r.prox},
                   {"in_slice", r.in_slice},
                   {"score", r.score}});
  }
  return {{"regions", arr}};
}

// Slice steps arriving as tool arguments (the shape `slice` emits).
inline DataflowSlice slice_from_json(const nlohmann::json& j) {
  DataflowSlice sl;
  if (!j.is_object() || !j.contains("steps") || !j.at("steps").is_array()) {
    throw InvalidArgument("each slice must be an object with a 'steps' array");
  }
  for (const auto& st : j.at("steps")) {
    SliceStep step;
    step.file = st.at("file").get<std::string>();
    step.start_line = st.at("start_line").get<int>();
    step.end_line = st.at("end_line").get<int>();
    step.variable = st.value("variable", std::string());
    step.role = st.value("role", std::string());
    step.statement_id = st.value("statement_id", std::string());
    sl.steps.push_back(std::move(step));
  }
  return sl;
}

}  // namespace wire

inline const char* const kToolSchemas = R"json([
{"name":"search_entities","description":"TF-IDF search over entity names, qualified paths and docstring first paragraphs.",
 "input_schema":{"type":"object","properties":{"query":{"type":"string"},"k":{"type":"integer","minimum":1,"default":10}},"required":["query"],"additionalProperties":false}},
{"name":"traverse_relations","description":"Breadth-first traversal from a seed node along the given edge kinds.",
 "input_schema":{"type":"object","properties":{"seed_id":{"type":"string"},"edge_kinds":{"type":"array","items":{"enum":["Contains","Imports","ImportedBy","Calls","CalledBy","Inherits","DataflowDefUse","DataflowUseDef"]},"default":"all kinds"},"max_hops":{"type":"integer","minimum":1,"default":2},"node_budget":{"type":"integer","minimum":1,"default":50}},"required":["seed_id"],"additionalProperties":false}},
{"name":"get_enclosing_scopes","description":"Innermost function, class and module containing a file line.",
 "input_schema":{"type":"object","properties":{"file":{"type":"string"},"line":{"type":"integer"}},"required":["file","line"],"additionalProperties":false}},
{"name":"get_code_span","description":"Raw source lines [start_line, end_line], clamped to the end of the file.",
 "input_schema":{"type":"object","properties":{"file":{"type":"string"},"start_line":{"type":"integer","minimum":1},"end_line":{"type":"integer","minimum":1}},"required":["file","start_line","end_line"],"additionalProperties":false}},
{"name":"get_entity_info","description":"Node metadata and per-edge-kind degree summary.",
 "input_schema":{"type":"object","properties":{"id":{"type":"string"}},"required":["id"],"additionalProperties":false}},
{"name":"get_dataflow_slice","description":"Bounded intra-procedural dataflow slice from a (file, line, variable) seed.",
 "input_schema":{"type":"object","properties":{"file":{"type":"string"},"line":{"type":"integer"},"variable":{"type":"string"},"direction":{"enum":["backward","forward","both"],"default":"backward"},"max_steps":{"type":"integer","minimum":1,"default":50}},"required":["file","line","variable"],"additionalProperties":false}},
{"name":"build_context_bundle","description":"Scores candidate spans by relevance, call proximity and slice membership and packs them into a token budget.",
 "input_schema":{"type":"object","properties":{"seed_ids":{"type":"array","items":{"type":"string"}},"slices":{"type":"array","items":{"type":"object"}},"strategy":{"enum":["structural_only","slices_only","hybrid"],"default":"hybrid"},"budget":{"type":"integer","minimum":0,"default":8000},"issue_text":{"type":"string","default":""}},"required":["seed_ids"],"additionalProperties":false}},
{"name":"rank_suspect_regions","description":"Ranks functions from stack-trace frames and lexical hits, expanded two call hops.",
 "input_schema":{"type":"object","properties":{"issue_text":{"type":"string"},"stack_trace":{"type":"string","default":""}},"required":["issue_text"],"additionalProperties":false}},
{"name":"describe_tools","description":"JSON schema of every tool.",
 "input_schema":{"type":"object","properties":{},"additionalProperties":false}}
])json";

// Per-tool estimated token volume of request and response payloads.
class TokenLedger {
 public:
  struct Entry {
    std::size_t calls = 0;
    std::size_t request_tokens = 0;
    std::size_t response_tokens = 0;
  };

  void record(const std::string& tool, const std::string& request, const std::string& response) {
    std::lock_guard lock(mu_);
    Entry& e = entries_[tool];
    ++e.calls;
    e.request_tokens += estimate_tokens(request);
    e.response_tokens += estimate_tokens(response);
  }

  std::map<std::string, Entry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

  std::size_t total() const {
    std::lock_guard lock(mu_);
    std::size_t t = 0;
    for (const auto& [_, e] : entries_) t += e.request_tokens + e.response_tokens;
    return t;
  }

  Json to_json() const {
    Json tools = Json::object();
    for (const auto& [name, e] : entries()) {
      tools[name] = {{"calls", e.calls},
                     {"request_tokens", e.request_tokens},
                     {"response_tokens", e.response_tokens},
                     {"total_tokens", e.request_tokens + e.response_tokens}};
    }
    return {{"tools", tools}, {"total_tokens", total()}};
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

namespace detail {

// Typed access to a tool's `arguments` object; rejects unknown keys.
class Args {
 public:
  Args(const nlohmann::json& j, std::initializer_list<const char*> allowed) : j_(j) {
    if (!j.is_object()) throw InvalidArgument("arguments must be an object");
    for (const auto& [key, _] : j.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw InvalidArgument("unknown argument '" + key + "'");
    }
  }

  bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  std::string str(const char* key) const {
    if (!has(key)) throw InvalidArgument(std::string("missing argument '") + key + "'");
    if (!j_.at(key).is_string()) throw InvalidArgument(std::string("argument '") + key + "' must be a string");
    return j_.at(key).get<std::string>();
  }
  std::string str(const char* key, const std::string& fallback) const { return has(key) ? str(key) : fallback; }

  long long integer(const char* key) const {
    if (!has(key)) throw InvalidArgument(std::string("missing argument '") + key + "'");
    if (!j_.at(key).is_number_integer()) throw InvalidArgument(std::string("argument '") + key + "' must be an integer");
    return j_.at(key).get<long long>();
  }
  long long integer(const char* key, long long fallback) const { return has(key) ? integer(key) : fallback; }

  int small_int(const char* key) const { return clamp_int(key, integer(key)); }
  int small_int(const char* key, int fallback) const { return has(key) ? small_int(key) : fallback; }

  const nlohmann::json& array(const char* key) const {
    if (!has(key) || !j_.at(key).is_array()) throw InvalidArgument(std::string("argument '") + key + "' must be an array");
    return j_.at(key);
  }

 private:
  static int clamp_int(const char* key, long long v) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
      throw InvalidArgument(std::string("argument '") + key + "' out of range");
    }
    return static_cast<int>(v);
  }

  const nlohmann::json& j_;
};

}  // namespace detail

struct ToolError : Error {
  ToolError(std::string code, const std::string& what) : Error(std::move(code), what) {}
};

// Dispatches JSON tool requests against one session. Thread-safe: the
// session is read-only apart from its registry, and the ledger locks.
class ToolService {
 public:
  explicit ToolService(RetrievalSession& session) : session_(session) {}

  static const Json& schemas() {
    static const Json s = Json::parse(kToolSchemas);
    return s;
  }

  // Result object of one tool call; throws slicegraph::Error subclasses.
  Json call(const std::string& tool, const nlohmann::json& args) {
    using detail::Args;
    if (tool == "search_entities") {
      Args a(args, {"query", "k"});
      return wire::search_hits(session_, session_.search_entities(a.str("query"), a.small_int("k", 10)));
    }
    if (tool == "traverse_relations") {
      Args a(args, {"seed_id", "edge_kinds", "max_hops", "node_budget"});
      std::vector<EdgeKind> kinds(kAllEdgeKinds.begin(), kAllEdgeKinds.end());
      if (a.has("edge_kinds")) {
        kinds.clear();
        for (const auto& k : a.array("edge_kinds")) {
          auto kind = k.is_string() ? parse_edge_kind(k.get<std::string>()) : std::nullopt;
          if (!kind) throw InvalidArgument("unknown edge kind " + k.dump());
          kinds.push_back(*kind);
        }
      }
      return wire::traversal(session_, session_.traverse_relations(a.str("seed_id"), kinds, a.small_int("max_hops", 2),
                                                                   a.small_int("node_budget", 50)));
    }
    if (tool == "get_enclosing_scopes") {
      Args a(args, {"file", "line"});
      return wire::scopes(session_.get_enclosing_scopes(a.str("file"), a.small_int("line")));
    }
    if (tool == "get_code_span") {
      Args a(args, {"file", "start_line", "end_line"});
      return wire::code_span(session_.get_code_span(a.str("file"), a.small_int("start_line"), a.small_int("end_line")));
    }
    if (tool == "get_entity_info") {
      Args a(args, {"id"});
      return wire::entity_info(session_.get_entity_info(a.str("id")));
    }
    if (tool == "get_dataflow_slice") {
      Args a(args, {"file", "line", "variable", "direction", "max_steps"});
      auto dir = parse_direction(a.str("direction", "backward"));
      if (!dir) throw InvalidArgument("direction must be backward, forward or both");
      return wire::slice(get_dataflow_slice(session_, a.str("file"), a.small_int("line"), a.str("variable"), *dir,
                                            a.small_int("max_steps", kDefaultMaxSteps)));
    }
    if (tool == "build_context_bundle") {
      Args a(args, {"seed_ids", "slices", "strategy", "budget", "issue_text"});
      std::vector<std::string> seeds;
      for (const auto& s : a.array("seed_ids")) {
        if (!s.is_string()) throw InvalidArgument("seed_ids must hold strings");
        seeds.push_back(s.get<std::string>());
      }
      std::vector<DataflowSlice> slices;
      if (a.has("slices")) {
        for (const auto& s : a.array("slices")) slices.push_back(wire::slice_from_json(s));
      }
      auto strategy = parse_strategy(a.str("strategy", "hybrid"));
      if (!strategy) throw InvalidArgument("strategy must be structural_only, slices_only or hybrid");
      long long budget = a.integer("budget", static_cast<long long>(kDefaultBudget));
      if (budget < 0) throw InvalidArgument("budget must be >= 0");
      return wire::bundle(build_context_bundle(session_, seeds, slices, *strategy, static_cast<std::size_t>(budget),
                                               a.str("issue_text", "")));
    }
    if (tool == "rank_suspect_regions") {
      Args a(args, {"issue_text", "stack_trace"});
      return wire::regions(rank_suspect_regions(session_, a.str("issue_text"), a.str("stack_trace", "")));
    }
    if (tool == "describe_tools") {
      Args a(args, {});
      return {{"tools", schemas()}};
    }
    throw ToolError("unknown_tool", "unknown tool: " + tool);
  }

  // One request line in, one response line out. Never throws.
  std::string handle(const std::string& request_line) {
    Json response;
    std::string tool = "<invalid>";
    nlohmann::json id = nullptr;
    try {
      nlohmann::json req;
      try {
        req = nlohmann::json::parse(request_line);
      } catch (const nlohmann::json::parse_error& e) {
        throw ToolError("parse_error", e.what());
      }
      if (!req.is_object()) throw ToolError("invalid_request", "request must be a JSON object");
      if (req.contains("id")) id = req.at("id");
      if (!req.contains("tool") || !req.at("tool").is_string()) {
        throw ToolError("invalid_request", "request needs a string 'tool' field");
      }
      tool = req.at("tool").get<std::string>();
      static const nlohmann::json kNoArgs = nlohmann::json::object();
      const nlohmann::json& args = req.contains("arguments") ? req.at("arguments") : kNoArgs;
      Json result = call(tool, args);
      response = {{"id", id}, {"ok", true}, {"result", std::move(result)}};
    } catch (const Error& e) {
      response = error_response(id, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      response = error_response(id, "invalid_arguments", e.what());
    } catch (const std::exception& e) {
      response = error_response(id, "internal_error", e.what());
    }
    std::string out = response.dump();
    ledger_.record(tool, request_line, out);
    return out;
  }

  // Newline-delimited requests until EOF; blank lines are ignored.
  void serve_stream(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out << handle(line) << '\n' << std::flush;
    }
  }

  TokenLedger& ledger() { return ledger_; }
  RetrievalSession& session() { return session_; }

 private:
  static Json error_response(const nlohmann::json& id, const std::string& code, const std::string& message) {
    return {{"id", id}, {"ok", false}, {"error", {{"code", code}, {"message", message}}}};
  }

  RetrievalSession& session_;
  TokenLedger ledger_;
};

struct ReplayMismatch : Error {
  ReplayMismatch(const std::string& request_id, const std::string& expected, const std::string& actual)
      : Error("replay_mismatch",
              "response mismatch for request id " + request_id + "\n  expected: " + expected + "\n  actual:   " + actual),
        id(request_id) {}
  std::string id;
};

struct ReplayResult {
  std::vector<std::string> transcript;
  std::size_t checked = 0;
};

// Runs a trace (JSON Lines; each line a request or {"request", "expected"})
// in order, stopping at the first response that differs from its expected
// value.
inline ReplayResult replay_trace(ToolService& service, std::istream& trace) {
  ReplayResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(trace, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::ordered_json rec;
    try {
      rec = nlohmann::ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorruptFile(lineno, std::string("trace record is not JSON: ") + e.what());
    }
    if (!rec.is_object()) throw CorruptFile(lineno, "trace record must be an object");
    const bool wrapped = rec.contains("request");
    const std::string request = wrapped ? rec.at("request").dump() : rec.dump();
    std::string response = service.handle(request);
    if (wrapped && rec.contains("expected")) {
      std::string expected = rec.at("expected").dump();
      if (expected != response) {
        const auto& req = rec.at("request");
        std::string rid = req.is_object() && req.contains("id") ? req.at("id").dump() : "<none>";
        throw ReplayMismatch(rid, expected, response);
      }
      ++result.checked;
    }
    result.transcript.push_back(std::move(response));
  }
  return result;
}

}  // namespace slicegraph
