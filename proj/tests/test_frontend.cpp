#include <gtest/gtest.h>

#include "slicegraph/frontend.hpp"
#include "slicegraph/text.hpp"

using namespace slicegraph;

namespace {

// Facts of the first body statement of `def f():` wrapping `body`.
StatementFact fact_of(const std::string& body) {
  std::string src = "def f():\n";
  for (const auto& line : split_lines(body)) src += "    " + line + "\n";
  auto m = parse_module("t.py", src);
  EXPECT_TRUE(m.parsed) << (m.diagnostics.empty() ? "" : m.diagnostics.front());
  if (m.entities.empty() || m.entities.front().body.empty()) return {};
  return m.entities.front().body.front();
}

std::vector<std::string> def_names(const StatementFact& f) {
  std::vector<std::string> out;
  for (const auto& d : f.defs) out.push_back(d.variable);
  return out;
}

using Names = std::vector<std::string>;

}  // namespace

TEST(ParseModule, F1UtilHasOneFunctionWithTwoBodyStatements) {
  auto m = parse_module("pkg/util.py", "def inc(a):\n    b = a + 1\n    return b\n");
  ASSERT_TRUE(m.parsed);
  EXPECT_EQ(m.module_name, "pkg.util");
  ASSERT_EQ(m.entities.size(), 1u);
  const auto& inc = m.entities[0];
  EXPECT_EQ(inc.kind, EntityKind::Function);
  EXPECT_EQ(inc.name, "inc");
  EXPECT_EQ(inc.start_line, 1);
  EXPECT_EQ(inc.end_line, 3);
  EXPECT_EQ(inc.params, Names{"a"});
  ASSERT_EQ(inc.body.size(), 2u);
  EXPECT_EQ(def_names(inc.body[0]), Names{"b"});
  EXPECT_EQ(inc.body[0].uses, Names{"a"});
  EXPECT_TRUE(inc.body[1].defs.empty());
  EXPECT_EQ(inc.body[1].form, StatementForm::Return);
}

TEST(ParseModule, BareImportRecordsOneFact) {
  auto m = parse_module("x.py", "import os\n");
  EXPECT_TRUE(m.entities.empty());
  ASSERT_EQ(m.imports.size(), 1u);
  EXPECT_EQ(m.imports[0].alias, "os");
  EXPECT_EQ(m.imports[0].target, "os");
  EXPECT_TRUE(m.imports[0].module_import);
}

TEST(ParseModule, SyntaxErrorYieldsEmptyFactsAndOneDiagnostic) {
  auto m = parse_module("bad.py", "def f(:\n    return 1\nimport os\n");
  EXPECT_FALSE(m.parsed);
  EXPECT_TRUE(m.entities.empty());
  EXPECT_TRUE(m.imports.empty());
  EXPECT_TRUE(m.call_sites.empty());
  EXPECT_EQ(m.diagnostics.size(), 1u);
}

TEST(ParseModule, ImportAliasesAndRelativeImports) {
  auto m = parse_module("pkg/sub/mod.py",
                        "import a.b.c\nimport numpy as np\nfrom m import f as g\nfrom . import sib\n"
                        "from ..top import thing\nfrom .x import *\nfrom .... import too_far\n");
  std::map<std::string, std::string> alias;
  for (const auto& i : m.imports) alias[i.alias] = i.target;
  EXPECT_EQ(alias["a.b.c"], "a.b.c");
  EXPECT_EQ(alias["np"], "numpy");
  EXPECT_EQ(alias["g"], "m.f");
  EXPECT_EQ(alias["sib"], "pkg.sub.sib");
  EXPECT_EQ(alias["thing"], "pkg.top.thing");
  EXPECT_FALSE(alias.contains("*"));
  EXPECT_FALSE(alias.contains("too_far"));
  EXPECT_EQ(m.diagnostics.size(), 1u);
}

TEST(ParseModule, PackageInitResolvesRelativeImportsAgainstItself) {
  auto m = parse_module("pkg/__init__.py", "from .util import inc\n");
  EXPECT_EQ(m.module_name, "pkg");
  ASSERT_EQ(m.imports.size(), 1u);
  EXPECT_EQ(m.imports[0].target, "pkg.util.inc");
}

TEST(ParseModule, EntitiesNestAndMethodsAreRecognized) {
  auto m = parse_module("c.py",
                        "class A(Base, mod.Mixin):\n"
                        "    \"\"\"Doc head line.\n"
                        "    continues.\n\n    Second paragraph.\"\"\"\n"
                        "    def run(self):\n"
                        "        def helper():\n"
                        "            return 1\n"
                        "        return helper()\n"
                        "\n"
                        "@decorator\n"
                        "async def top(x, *args, y=2, **kw) -> int:\n"
                        "    return x\n");
  ASSERT_TRUE(m.parsed) << m.diagnostics.front();
  ASSERT_EQ(m.entities.size(), 4u);
  EXPECT_EQ(m.entities[0].kind, EntityKind::Class);
  EXPECT_EQ(m.entities[0].doc_head, "Doc head line. continues.");
  EXPECT_EQ(m.entities[0].bases, (Names{"Base", "mod.Mixin"}));
  EXPECT_EQ(m.entities[1].kind, EntityKind::Method);
  EXPECT_EQ(m.entities[1].local_qualname, "A.run");
  EXPECT_EQ(m.entities[2].kind, EntityKind::Function);
  EXPECT_EQ(m.entities[2].local_qualname, "A.run.helper");
  EXPECT_EQ(m.entities[3].params, (Names{"x", "args", "y", "kw"}));
  for (const auto& e : m.entities) {
    if (e.parent >= 0) {
      const auto& p = m.entities[static_cast<std::size_t>(e.parent)];
      EXPECT_LE(p.start_line, e.start_line);
      EXPECT_GE(p.end_line, e.end_line);
    }
  }
}

TEST(ParseModule, CallSitesKeepOnlyResolvableShapes) {
  auto m = parse_module("c.py",
                        "import util\n"
                        "def f(self):\n"
                        "    inc(1)\n"
                        "    util.inc(2)\n"
                        "    self.helper()\n"
                        "    a.b.c()\n"
                        "    x = [g(i) for i in range(3)]\n");
  Names callees;
  for (const auto& c : m.call_sites) callees.push_back(c.callee);
  EXPECT_EQ(callees, (Names{"inc", "util.inc", "g", "range"}));
}

TEST(ExtractDefsUses, AssignmentOfCall) {
  auto f = fact_of("y = inc(x)");
  EXPECT_EQ(f.form, StatementForm::Assign);
  ASSERT_EQ(f.defs.size(), 1u);
  EXPECT_EQ(f.defs[0], (VariableDef{"y", DefRole::Definition}));
  EXPECT_EQ(f.uses, (Names{"inc", "x"}));
}

TEST(ExtractDefsUses, AugmentedAssignmentIsUseAndDef) {
  auto f = fact_of("y += 1");
  EXPECT_EQ(f.defs, (std::vector<VariableDef>{{"y", DefRole::Augmented}}));
  EXPECT_EQ(f.uses, Names{"y"});
}

TEST(ExtractDefsUses, ForLoopAttributesBodyToHead) {
  auto f = fact_of("for i in xs: total += i");
  EXPECT_EQ(f.form, StatementForm::ForLoop);
  EXPECT_EQ(f.defs, (std::vector<VariableDef>{{"i", DefRole::LoopTarget}, {"total", DefRole::Augmented}}));
  EXPECT_EQ(f.uses, (Names{"xs", "total", "i"}));
}

TEST(ExtractDefsUses, WithTargetsAndAttributeTargets) {
  auto w = fact_of("with open(p) as fh, lock:\n    obj.attr = fh.read()");
  EXPECT_EQ(w.form, StatementForm::WithBlock);
  EXPECT_EQ(w.defs, (std::vector<VariableDef>{{"fh", DefRole::ContextTarget}}));
  EXPECT_EQ(w.uses, (Names{"open", "p", "lock", "fh", "obj"}));

  auto s = fact_of("a[i] = v");
  EXPECT_TRUE(s.defs.empty());
  EXPECT_EQ(s.uses, (Names{"v", "a", "i"}));
}

TEST(ExtractDefsUses, AnnotatedAssignment) {
  auto with_value = fact_of("n: int = m");
  EXPECT_EQ(def_names(with_value), Names{"n"});
  EXPECT_EQ(with_value.uses, (Names{"m", "int"}));
  auto bare = fact_of("n: int");
  EXPECT_TRUE(bare.defs.empty());
}

TEST(ExtractDefsUses, TupleUnpackingAndStarred) {
  auto f = fact_of("a, (b, *c) = d");
  EXPECT_EQ(def_names(f), (Names{"a", "b", "c"}));
  EXPECT_EQ(f.uses, Names{"d"});
}

TEST(ExtractDefsUses, ComprehensionAndLambdaLocalsAreNotDefsOrUses) {
  auto c = fact_of("r = [x * k for x in xs if x]");
  EXPECT_EQ(def_names(c), Names{"r"});
  EXPECT_EQ(c.uses, (Names{"x", "k", "xs"}));

  auto l = fact_of("g = lambda q, w=z: q + w + outer");
  EXPECT_EQ(def_names(l), Names{"g"});
  EXPECT_EQ(l.uses, (Names{"outer", "z"}));
}

TEST(ExtractDefsUses, WalrusDefinesOnEnclosingStatement) {
  auto f = fact_of("if (n := compute()) > 3:\n    use(n)");
  EXPECT_EQ(f.form, StatementForm::CompoundOther);
  EXPECT_EQ(def_names(f), Names{"n"});
  EXPECT_EQ(f.uses, (Names{"compute", "use", "n"}));
}

TEST(ExtractDefsUses, GlobalAndNonlocalDeclarations) {
  auto g = fact_of("global g, h");
  EXPECT_EQ(g.declares_global, (Names{"g", "h"}));
  auto n = fact_of("nonlocal k");
  EXPECT_EQ(n.declares_nonlocal, Names{"k"});
}

TEST(ExtractDefsUses, NestedDefinitionsOnlyContributeOuterEvaluations) {
  auto f = fact_of("@deco(a)\ndef inner(p=b) -> c:\n    return hidden");
  EXPECT_EQ(f.form, StatementForm::NestedDef);
  EXPECT_TRUE(f.defs.empty());
  EXPECT_EQ(f.uses, (Names{"deco", "a", "b", "c"}));

  auto k = fact_of("class K(Base):\n    attr = hidden");
  EXPECT_EQ(k.form, StatementForm::NestedClass);
  EXPECT_EQ(k.uses, Names{"Base"});
}

TEST(ExtractDefsUses, TryAndWhileAreSingleCompoundStatements) {
  auto t = fact_of("try:\n    v = load()\nexcept KeyError as err:\n    v = err\nfinally:\n    close()");
  EXPECT_EQ(t.form, StatementForm::CompoundOther);
  EXPECT_EQ(def_names(t), Names{"v"});
  EXPECT_EQ(t.uses, (Names{"load", "KeyError", "err", "close"}));
}

TEST(ExtractDefsUses, ClauseHeadersInterleaveWithBodies) {
  auto f = fact_of("if a:\n    x = b\nelif c:\n    x = d\nelse:\n    x = e");
  EXPECT_EQ(f.uses, (Names{"a", "b", "c", "d", "e"}));
}

TEST(ExtractDefsUses, FStringFieldsAreUses) {
  auto f = fact_of("msg = f\"{name!r}: {value:>{width}}\"");
  EXPECT_EQ(def_names(f), Names{"msg"});
  EXPECT_EQ(f.uses, (Names{"name", "value", "width"}));
}

TEST(ExtractDefsUses, EveryUseAppearsInTheSource) {
  const std::vector<std::string> bodies = {
      "x = a.b(c)[d] + e", "for k, v in items(): out[k] = v", "while cond(x): x -= step",
      "return {k: v for k, v in pairs}", "assert check(a), msg", "del cache[key]",
  };
  for (const auto& body : bodies) {
    auto f = fact_of(body);
    for (const auto& u : f.uses) EXPECT_NE(body.find(u), std::string::npos) << u << " in " << body;
  }
}

TEST(ParseModule, HandlesMatchStatementsAndDecoratedClasses) {
  auto m = parse_module("m.py",
                        "def f(cmd):\n"
                        "    match cmd:\n"
                        "        case [\"go\", direction] if direction:\n"
                        "            return direction\n"
                        "        case Point(x=0, y=yy):\n"
                        "            return yy\n"
                        "        case _:\n"
                        "            return None\n");
  ASSERT_TRUE(m.parsed) << m.diagnostics.front();
  ASSERT_EQ(m.entities.size(), 1u);
  ASSERT_EQ(m.entities[0].body.size(), 1u);
  EXPECT_EQ(m.entities[0].body[0].form, StatementForm::CompoundOther);
}

TEST(Text, TermsSplitCamelCaseAndUnderscores) {
  EXPECT_EQ(tokenize_terms("parseHTTPRequest_v2 pkg.util"), (Names{"parse", "httprequest", "v2", "pkg", "util"}));
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("abcde"), 2u);
  EXPECT_TRUE(is_valid_utf8("h\xc3\xa9llo"));
  EXPECT_FALSE(is_valid_utf8("\xc3"));
  EXPECT_FALSE(is_valid_utf8("\xff"));
}
