#pragma once

#include <stdexcept>
#include <string>

namespace slicegraph {

// Base of every error the library throws. `code()` is the stable
// machine-readable tag surfaced by the tool service.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct IdCollision : Error {
  explicit IdCollision(const std::string& id)
      : Error("id_collision", "node id already bound to a different payload: " + id) {}
};

struct UnknownNode : Error {
  explicit UnknownNode(const std::string& id) : Error("unknown_node", "unknown node: " + id) {}
};

struct UnknownFile : Error {
  explicit UnknownFile(const std::string& file) : Error("unknown_file", "unknown file: " + file) {}
};

struct VariableOnNonDataflowEdge : Error {
  explicit VariableOnNonDataflowEdge(const std::string& what)
      : Error("invalid_edge", what) {}
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& what) : Error("invalid_arguments", what) {}
};

struct FrozenGraph : Error {
  FrozenGraph() : Error("frozen_graph", "graph is frozen") {}
};

struct EmptySeedSet : Error {
  EmptySeedSet() : Error("empty_seed_set", "strategy requires at least one seed entity") {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

class CorruptFile : public Error {
 public:
  CorruptFile(std::size_t line, const std::string& what)
      : Error("corrupt_file", "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MalformedDiff : public Error {
 public:
  MalformedDiff(std::size_t line, const std::string& what)
      : Error("malformed_diff", "diff line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace slicegraph
