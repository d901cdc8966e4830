#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "support/fixture.hpp"

using namespace slicegraph;
using namespace testsupport;

namespace {

using Files = std::map<std::string, std::string>;

BuildResult build(const Files& files, BuildMode mode = BuildMode::Full) {
  std::vector<SourceFile> sources;
  for (const auto& [p, t] : files) sources.push_back({p, t});
  return build_graph(sources, mode);
}

std::set<std::tuple<std::string, std::string, std::string>> dataflow(const RepoGraph& g) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const auto& e : g.edges()) {
    if (e.kind == EdgeKind::DataflowDefUse) out.emplace(g.at(e.src).name, g.at(e.dst).name, e.variable);
  }
  return out;
}

bool has_edge(const RepoGraph& g, const std::string& src, const std::string& dst, EdgeKind kind) {
  const auto& out = g.out(src, kind);
  return std::find(out.begin(), out.end(), dst) != out.end();
}

}  // namespace

TEST(StructuralPass, F1Census) {
  auto g = build_f1();
  EXPECT_EQ(g.count_nodes(NodeKind::Directory), 2u);
  EXPECT_EQ(g.count_nodes(NodeKind::Module), 3u);
  EXPECT_EQ(g.count_nodes(NodeKind::Function), 2u);
  EXPECT_EQ(g.count_nodes(NodeKind::Class), 0u);
  EXPECT_TRUE(has_edge(g, kMainMod, kUtilMod, EdgeKind::Imports));
  EXPECT_TRUE(has_edge(g, kUtilMod, kMainMod, EdgeKind::ImportedBy));
  EXPECT_EQ(g.count_edges(EdgeKind::Imports), 1u);
  EXPECT_TRUE(has_edge(g, kRun, kInc, EdgeKind::Calls));
  EXPECT_TRUE(has_edge(g, kInc, kRun, EdgeKind::CalledBy));
  EXPECT_EQ(g.count_edges(EdgeKind::Calls), 1u);
}

TEST(StructuralPass, ModuleNamesFollowPaths) {
  auto g = build_f1();
  for (const auto& [id, n] : g.nodes()) {
    if (n.kind != NodeKind::Module) continue;
    EXPECT_EQ(n.qualified_name, module_name_from_path(n.file_path));
  }
  EXPECT_TRUE(g.contains("Module:pkg:1"));
}

TEST(StructuralPass, InheritsResolvesDirectBase) {
  auto r = build({{"shapes.py", "class A:\n    pass\n\nclass B(A):\n    pass\n\nclass C(Unknown):\n    pass\n"}});
  EXPECT_TRUE(has_edge(r.graph, "Class:shapes.B:4", "Class:shapes.A:1", EdgeKind::Inherits));
  EXPECT_EQ(r.graph.count_edges(EdgeKind::Inherits), 1u);
}

TEST(StructuralPass, InheritsAcrossModulesViaImports) {
  auto r = build({{"base.py", "class A:\n    pass\n"},
                  {"child.py", "import base\nfrom base import A as Alias\n\nclass B(base.A):\n    pass\n\n"
                               "class C(Alias):\n    pass\n"}});
  EXPECT_TRUE(has_edge(r.graph, "Class:child.B:4", "Class:base.A:1", EdgeKind::Inherits));
  EXPECT_TRUE(has_edge(r.graph, "Class:child.C:7", "Class:base.A:1", EdgeKind::Inherits));
}

TEST(StructuralPass, ZeroPythonFilesGiveRootOnly) {
  auto r = build({});
  EXPECT_TRUE(r.diagnostics.empty_repository);
  EXPECT_FALSE(r.diagnostics.messages.empty());
  EXPECT_EQ(r.graph.nodes().size(), 1u);
}

TEST(ResolveCalls, DynamicDispatchAndUnknownNamesAreDropped) {
  auto r = build({{"m.py",
                   "class K:\n"
                   "    def helper(self):\n"
                   "        return 1\n"
                   "    def run(self):\n"
                   "        return self.helper()\n"
                   "\n"
                   "def f():\n"
                   "    frob()\n"
                   "    return g()\n"
                   "\n"
                   "def g():\n"
                   "    return f()\n"}});
  const auto& g = r.graph;
  EXPECT_TRUE(g.out("Method:m.K.run:4", EdgeKind::Calls).empty());
  EXPECT_TRUE(has_edge(g, "Function:m.f:7", "Function:m.g:11", EdgeKind::Calls));
  EXPECT_TRUE(has_edge(g, "Function:m.g:11", "Function:m.f:7", EdgeKind::Calls));
  EXPECT_EQ(r.diagnostics.resolved_calls, 2u);
  EXPECT_EQ(r.diagnostics.unresolved_calls, 1u);  // self.helper never reaches resolution
}

TEST(ResolveCalls, ModuleAliasAndReexports) {
  auto r = build({{"pkg/__init__.py", "from .core import work\n"},
                  {"pkg/core.py", "def work():\n    return 1\n"},
                  {"app.py", "import pkg.core as core\nimport pkg\nfrom pkg import work\n\n"
                             "def a():\n    return core.work()\n\n"
                             "def b():\n    return work()\n\n"
                             "def c():\n    return pkg.work()\n"}});
  const auto& g = r.graph;
  const std::string work = "Function:pkg.core.work:1";
  EXPECT_TRUE(has_edge(g, "Function:app.a:5", work, EdgeKind::Calls));
  EXPECT_TRUE(has_edge(g, "Function:app.b:8", work, EdgeKind::Calls));
  EXPECT_TRUE(has_edge(g, "Function:app.c:11", work, EdgeKind::Calls));
  EXPECT_TRUE(has_edge(g, "Module:app:1", "Module:pkg.core:1", EdgeKind::Imports));
  EXPECT_TRUE(has_edge(g, "Module:app:1", "Module:pkg:1", EdgeKind::Imports));
}

TEST(ResolveCalls, AmbiguousBindingsAreDropped) {
  auto r = build({{"a.py", "def f():\n    return 1\n"},
                  {"b.py", "def f():\n    return 2\n"},
                  {"c.py", "from a import f\nfrom b import f\n\ndef g():\n    return f()\n"}});
  EXPECT_TRUE(r.graph.out("Function:c.g:4", EdgeKind::Calls).empty());
}

TEST(StructuralPass, DirectoriesWithoutPythonAreOmitted) {
  auto r = build({{"src/pkg/a.py", "x = 1\n"}, {"docs/readme.txt", "hello\n"}});
  EXPECT_TRUE(r.graph.contains("Directory:src:0"));
  EXPECT_TRUE(r.graph.contains("Directory:src.pkg:0"));
  EXPECT_FALSE(r.graph.contains("Directory:docs:0"));
}

TEST(StructuralPass, FilesystemWalkSkipsHiddenDirectoriesAndBadEncodings) {
  namespace fs = std::filesystem;
  auto root = fs::temp_directory_path() / "slicegraph_walk_test";
  fs::remove_all(root);
  fs::create_directories(root / ".venv");
  fs::create_directories(root / "lib");
  std::ofstream(root / ".venv" / "hidden.py") << "def h():\n    pass\n";
  std::ofstream(root / "lib" / "ok.py") << "def ok():\n    pass\n";
  std::ofstream(root / "lib" / "latin.py") << "s = '\xe9'\n";
  auto r = build_repository(root, BuildMode::Full);
  EXPECT_TRUE(r.graph.contains("Function:lib.ok.ok:1"));
  for (const auto& [id, n] : r.graph.nodes()) EXPECT_EQ(n.file_path.find(".venv"), std::string::npos) << id;
  EXPECT_FALSE(r.graph.contains("Module:lib.latin:1"));
  EXPECT_EQ(r.diagnostics.skipped_files, 1u);
  fs::remove_all(root);
  EXPECT_THROW(build_repository(root, BuildMode::Full), IoError);
}

TEST(StructuralPass, SyntaxErrorsKeepTheModuleNode) {
  auto r = build({{"bad.py", "def f(:\n"}, {"good.py", "def g():\n    return 1\n"}});
  EXPECT_TRUE(r.graph.contains("Module:bad:1"));
  EXPECT_TRUE(r.graph.contains("Function:good.g:1"));
  EXPECT_EQ(r.diagnostics.parse_failures, 1u);
}

TEST(DataflowPass, F1StatementsAndEdges) {
  auto g = build_f1();
  EXPECT_EQ(g.count_nodes(NodeKind::Statement), 7u);
  EXPECT_EQ(g.at(kInc).kind, NodeKind::Function);
  std::size_t inc_statements = 0;
  for (const auto& c : g.out(kInc, EdgeKind::Contains)) inc_statements += g.at(c).kind == NodeKind::Statement;
  EXPECT_EQ(inc_statements, 3u);

  std::set<std::tuple<std::string, std::string, std::string>> run_edges;
  for (const auto& e : g.edges()) {
    if (e.kind == EdgeKind::DataflowDefUse && g.enclosing_callable(e.src)->id == kRun) {
      run_edges.emplace(e.src, e.dst, e.variable);
      EXPECT_TRUE(g.edges().contains(TypedEdge{e.dst, e.src, EdgeKind::DataflowUseDef, e.variable}));
    }
  }
  EXPECT_EQ(run_edges, (std::set<std::tuple<std::string, std::string, std::string>>{
                           {kRunSig, kRunS1, "x"}, {kRunS1, kRunS2, "y"}, {kRunS2, kRunS3, "y"}}));
  EXPECT_EQ(g.count_edges(EdgeKind::DataflowDefUse), g.count_edges(EdgeKind::DataflowUseDef));
}

TEST(DataflowPass, PassOnlyBodyHasSignatureAndOneStatement) {
  auto r = build({{"m.py", "def f():\n    pass\n"}});
  std::size_t n = 0;
  for (const auto& c : r.graph.out("Function:m.f:1", EdgeKind::Contains)) n += r.graph.at(c).kind == NodeKind::Statement;
  EXPECT_EQ(n, 2u);
}

TEST(DataflowPass, CoarseModeEmitsNoStatements) {
  auto g = build_f1(BuildMode::Coarse);
  EXPECT_EQ(g.count_nodes(NodeKind::Statement), 0u);
  EXPECT_EQ(g.count_edges(EdgeKind::DataflowDefUse) + g.count_edges(EdgeKind::DataflowUseDef), 0u);
  EXPECT_EQ(g.count_edges(EdgeKind::Calls), 1u);
}

TEST(DataflowPass, BuiltinsProduceNoEdges) {
  auto r = build({{"m.py", "def f(xs):\n    n = len(xs)\n    return n\n"}});
  EXPECT_EQ(dataflow(r.graph), (std::set<std::tuple<std::string, std::string, std::string>>{
                                   {"#0", "#1", "xs"}, {"#1", "#2", "n"}}));
}

TEST(DataflowPass, GlobalDeclarationNeverLinksToParameters) {
  auto r = build({{"m.py", "def f():\n    global g\n    g = 1\n    return g\n"}});
  EXPECT_EQ(dataflow(r.graph), (std::set<std::tuple<std::string, std::string, std::string>>{{"#2", "#3", "g"}}));
}

TEST(DataflowPass, CompoundStatementsAreSingleNodesInTextualOrder) {
  auto r = build({{"m.py",
                   "def f(flag):\n"
                   "    x = 0\n"
                   "    if flag:\n"
                   "        x = 1\n"
                   "    else:\n"
                   "        y = x\n"
                   "    for i in range(3):\n"
                   "        x += i\n"
                   "    return x\n"}});
  EXPECT_EQ(dataflow(r.graph), (std::set<std::tuple<std::string, std::string, std::string>>{
                                   {"#0", "#2", "flag"}, {"#1", "#2", "x"}, {"#2", "#3", "x"}, {"#3", "#4", "x"}}));
  EXPECT_TRUE(r.graph.contains("Statement:m.f#2:3"));
  EXPECT_EQ(r.graph.at("Statement:m.f#2:3").end_line, 6);
}

TEST(DataflowPass, NestedDefinitionsGetTheirOwnStatements) {
  auto r = build({{"m.py",
                   "def outer(a):\n"
                   "    def inner(b):\n"
                   "        return b + a\n"
                   "    return inner(a)\n"}});
  const auto& g = r.graph;
  std::vector<std::string> outer_children;
  for (const auto& c : g.out("Function:m.outer:1", EdgeKind::Contains)) outer_children.push_back(g.at(c).name);
  std::sort(outer_children.begin(), outer_children.end());
  EXPECT_EQ(outer_children, (std::vector<std::string>{"#0", "#1", "inner"}));
  EXPECT_EQ(g.validate(), std::nullopt);
}

TEST(DataflowPass, MultiLineSignatureSpansToTheColon) {
  auto r = build({{"m.py", "def f(a,\n      b):\n    return a + b\n"}});
  const auto& sig = r.graph.at("Statement:m.f#0:1");
  EXPECT_EQ(sig.end_line, 2);
  EXPECT_TRUE(r.graph.contains("Statement:m.f#1:3"));
}
