#pragma once

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "slicegraph/error.hpp"
#include "slicegraph/session.hpp"
#include "slicegraph/text.hpp"

namespace slicegraph {

using FileLine = std::pair<std::string, int>;

struct GoldSets {
  std::set<std::string> files;
  std::set<std::string> functions;  // node ids
  std::set<FileLine> lines;         // pre-patch coordinates
};

namespace detail {

inline std::string diff_path(std::string raw) {
  if (auto tab = raw.find('\t'); tab != std::string::npos) raw.resize(tab);
  while (!raw.empty() && (raw.back() == ' ' || raw.back() == '\r')) raw.pop_back();
  if (raw.starts_with("a/") || raw.starts_with("b/")) raw.erase(0, 2);
  return raw;
}

inline bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\f\v") == std::string_view::npos; }

}  // namespace detail

// Touched files and lines of a unified diff. Removed lines keep their old
// numbers; an added line anchors to the old line just before the insertion
// point (line 1 at the top of a file). Blank lines count for neither.
inline GoldSets parse_unified_diff(const std::string& diff) {
  static const std::regex hunk_re(R"(^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@.*)");
  GoldSets gold;
  const auto lines = split_lines(diff);
  std::optional<std::string> old_path;
  std::string file;  // target of the current hunks, empty for a new file
  bool have_file = false;
  int old_line = 0;
  int old_left = 0;
  int new_left = 0;
  bool saw_header = false;

  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    const std::size_t lineno = i + 1;
    if (old_left > 0 || new_left > 0) {
      char tag = line.empty() ? ' ' : line[0];
      std::string_view body = line.empty() ? std::string_view() : std::string_view(line).substr(1);
      if (tag == ' ') {
        if (old_left == 0 || new_left == 0) throw MalformedDiff(lineno, "context line beyond hunk length");
        ++old_line, --old_left, --new_left;
      } else if (tag == '-') {
        if (old_left == 0) throw MalformedDiff(lineno, "removed line beyond hunk length");
        if (!file.empty() && !detail::blank(body)) gold.lines.emplace(file, old_line);
        ++old_line, --old_left;
      } else if (tag == '+') {
        if (new_left == 0) throw MalformedDiff(lineno, "added line beyond hunk length");
        if (!file.empty() && !detail::blank(body)) gold.lines.emplace(file, std::max(1, old_line - 1));
        --new_left;
      } else if (tag != '\\') {
        throw MalformedDiff(lineno, "unexpected line inside hunk");
      }
      continue;
    }
    if (line.starts_with("--- ")) {
      old_path = detail::diff_path(line.substr(4));
      have_file = false;
    } else if (line.starts_with("+++ ")) {
      if (!old_path) throw MalformedDiff(lineno, "'+++' header without preceding '---'");
      std::string new_path = detail::diff_path(line.substr(4));
      saw_header = true;
      have_file = true;
      if (*old_path == "/dev/null") {
        gold.files.insert(new_path);
        file.clear();
      } else {
        gold.files.insert(*old_path);
        file = *old_path;
      }
      old_path.reset();
    } else if (line.starts_with("@@")) {
      std::smatch m;
      if (!have_file) throw MalformedDiff(lineno, "hunk before file header");
      if (!std::regex_match(line, m, hunk_re)) throw MalformedDiff(lineno, "bad hunk header");
      old_line = std::stoi(m[1].str());
      old_left = m[2].matched ? std::stoi(m[2].str()) : 1;
      new_left = m[4].matched ? std::stoi(m[4].str()) : 1;
      if (old_left == 0) ++old_line;  // "-N,0" names the line before the insertion
    }
    // anything else (diff --git, index, mode lines) is preamble
  }
  if (!saw_header) throw MalformedDiff(lines.size(), "no '---'/'+++' file headers found");
  if (old_left > 0 || new_left > 0) throw MalformedDiff(lines.size(), "diff ends inside a hunk");
  return gold;
}

// Gold sets of a patch against the pre-patch snapshot loaded in `session`;
// functions come from enclosing-scope lookup of each gold line.
inline GoldSets parse_gold_patch(const std::string& diff, const RetrievalSession& session) {
  GoldSets gold = parse_unified_diff(diff);
  for (const auto& [file, line] : gold.lines) {
    if (!session.knows_file(file)) continue;
    if (auto scope = session.get_enclosing_scopes(file, line); scope.function) gold.functions.insert(*scope.function);
  }
  return gold;
}

}  // namespace slicegraph
