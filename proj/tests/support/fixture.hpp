#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "slicegraph/slicegraph.hpp"

#ifndef SLICEGRAPH_FIXTURE_DIR
#error "SLICEGRAPH_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace testsupport {

inline std::filesystem::path fixture_dir() { return SLICEGRAPH_FIXTURE_DIR; }
inline std::filesystem::path f1_root() { return fixture_dir() / "f1"; }
inline std::filesystem::path golden_dir() { return fixture_dir().parent_path() / "golden"; }

inline slicegraph::RepoGraph build_f1(slicegraph::BuildMode mode = slicegraph::BuildMode::Full) {
  return slicegraph::build_repository(f1_root(), mode).graph;
}

inline std::unique_ptr<slicegraph::RetrievalSession> f1_session(
    slicegraph::BuildMode mode = slicegraph::BuildMode::Full) {
  return std::make_unique<slicegraph::RetrievalSession>(slicegraph::RetrievalSession::open(build_f1(mode), f1_root()));
}

// Session over in-memory sources.
inline std::unique_ptr<slicegraph::RetrievalSession> session_for(const std::map<std::string, std::string>& files,
                                                                 slicegraph::BuildMode mode = slicegraph::BuildMode::Full) {
  std::vector<slicegraph::SourceFile> sources;
  for (const auto& [path, text] : files) sources.push_back({path, text});
  auto graph = slicegraph::build_graph(sources, mode).graph;
  return std::make_unique<slicegraph::RetrievalSession>(std::move(graph), files);
}

// F1 node ids.
inline const std::string kRun = "Function:pkg.main.run:3";
inline const std::string kInc = "Function:pkg.util.inc:1";
inline const std::string kMainMod = "Module:pkg.main:1";
inline const std::string kUtilMod = "Module:pkg.util:1";
inline const std::string kRunSig = "Statement:pkg.main.run#0:3";
inline const std::string kRunS1 = "Statement:pkg.main.run#1:4";
inline const std::string kRunS2 = "Statement:pkg.main.run#2:5";
inline const std::string kRunS3 = "Statement:pkg.main.run#3:6";

}  // namespace testsupport
