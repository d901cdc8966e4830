#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "support/fixture.hpp"

using namespace slicegraph;
using namespace testsupport;
namespace m = slicegraph::metrics;

using Strs = std::vector<std::string>;
using StrSet = std::set<std::string>;

TEST(RecallAtK, Definitional) {
  Strs preds{"a.py", "b.py"};
  EXPECT_EQ(m::recall_at_k(preds, StrSet{"b.py"}, 1), 0.0);
  EXPECT_EQ(m::recall_at_k(preds, StrSet{"b.py"}, 3), 1.0);
  EXPECT_EQ(m::recall_at_k(Strs{}, StrSet{"b.py"}, 5), 0.0);
  EXPECT_THROW(m::recall_at_k(preds, StrSet{"b.py"}, 0), InvalidArgument);
}

TEST(Mrr, FirstGoldHit) {
  EXPECT_EQ(m::mrr(Strs{"a", "b"}, StrSet{"b"}), 0.5);
  EXPECT_EQ(m::mrr(Strs{"b", "a"}, StrSet{"b"}), 1.0);
  EXPECT_EQ(m::mrr(Strs{"a", "c"}, StrSet{"b"}), 0.0);
}

TEST(F1AtK, OneThirdPrecision) {
  EXPECT_DOUBLE_EQ(m::f1_at_k(Strs{"f", "g", "h"}, StrSet{"f"}, 3), 0.5);
  EXPECT_EQ(m::f1_at_k(Strs{"g", "h"}, StrSet{"f"}, 3), 0.0);
  EXPECT_EQ(m::f1_at_k(Strs{"f", "g"}, StrSet{"f", "g"}, 2), 1.0);
}

TEST(Iou, Examples) {
  EXPECT_EQ(m::iou(std::set<int>{3, 4, 5}, std::set<int>{4, 5, 6}), 0.5);
  EXPECT_EQ(m::iou(std::set<int>{1, 2}, std::set<int>{1, 2}), 1.0);
  EXPECT_EQ(m::iou(std::set<int>{1}, std::set<int>{2}), 0.0);
}

TEST(Coverage, Examples) {
  EXPECT_EQ(m::coverage(std::set<int>{1, 2, 3, 9}, std::set<int>{1, 2, 3, 4}), 0.75);
  EXPECT_EQ(m::coverage(std::set<int>{}, std::set<int>{1}), 0.0);
  EXPECT_EQ(m::coverage(std::set<int>{1, 2, 3, 4, 5}, std::set<int>{2, 3}), 1.0);
}

TEST(Spearman, PerfectAndInverse) {
  auto up = m::spearman_rho({1, 2, 3}, {1, 2, 3});
  ASSERT_TRUE(up.defined);
  EXPECT_DOUBLE_EQ(up.value, 1.0);
  auto down = m::spearman_rho({1, 2, 3}, {3, 2, 1});
  ASSERT_TRUE(down.defined);
  EXPECT_DOUBLE_EQ(down.value, -1.0);
}

TEST(Spearman, ConstantSeriesIsUndefined) {
  auto c = m::spearman_rho({1, 1, 1}, {1, 2, 3});
  EXPECT_FALSE(c.defined);
  EXPECT_TRUE(std::isnan(c.value));
  EXPECT_FALSE(m::spearman_rho({1}, {1}).defined);
  EXPECT_THROW(m::spearman_rho({1, 2}, {1}), InvalidArgument);
}

TEST(Spearman, TiesShareAverageRanks) {
  EXPECT_EQ(m::average_ranks({10, 20, 20, 30}), (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(Dedupe, KeepsBestRank) {
  EXPECT_EQ(m::dedupe(Strs{"a", "b", "a", "c", "b"}), (Strs{"a", "b", "c"}));
}

TEST(ParseGoldPatch, RemovedLineMapsToInc) {
  auto s = f1_session();
  auto gold = parse_gold_patch(
      "--- a/pkg/util.py\n"
      "+++ b/pkg/util.py\n"
      "@@ -1,3 +1,2 @@\n"
      " def inc(a):\n"
      "-    b = a + 1\n"
      "     return b\n",
      *s);
  EXPECT_EQ(gold.files, StrSet{"pkg/util.py"});
  EXPECT_EQ(gold.lines, (std::set<FileLine>{{"pkg/util.py", 2}}));
  EXPECT_EQ(gold.functions, StrSet{kInc});
}

TEST(ParseGoldPatch, BlankLinesAreExcluded) {
  auto gold = parse_unified_diff(
      "--- a/pkg/main.py\n"
      "+++ b/pkg/main.py\n"
      "@@ -2,1 +2,2 @@\n"
      "-\n"
      "+   \n"
      "+\n");
  EXPECT_TRUE(gold.lines.empty());
  EXPECT_EQ(gold.files, StrSet{"pkg/main.py"});
}

TEST(ParseGoldPatch, HeaderlessTextIsMalformed) {
  EXPECT_THROW(parse_unified_diff("just some words\n"), MalformedDiff);
  EXPECT_THROW(parse_unified_diff(""), MalformedDiff);
}

TEST(ParseGoldPatch, InsertionAnchorsToPrecedingOldLine) {
  auto gold = parse_unified_diff(
      "--- a/m.py\n"
      "+++ b/m.py\n"
      "@@ -3,2 +3,3 @@\n"
      " a = 1\n"
      "+b = 2\n"
      " c = 3\n");
  EXPECT_EQ(gold.lines, (std::set<FileLine>{{"m.py", 3}}));
  auto pure = parse_unified_diff(
      "--- a/m.py\n"
      "+++ b/m.py\n"
      "@@ -7,0 +8,1 @@\n"
      "+z = 0\n");
  EXPECT_EQ(pure.lines, (std::set<FileLine>{{"m.py", 7}}));
  auto top = parse_unified_diff(
      "--- a/m.py\n"
      "+++ b/m.py\n"
      "@@ -0,0 +1,1 @@\n"
      "+import os\n");
  EXPECT_EQ(top.lines, (std::set<FileLine>{{"m.py", 1}}));
}

TEST(ParseGoldPatch, NewFileHasNoGoldLines) {
  auto gold = parse_unified_diff(
      "--- /dev/null\n"
      "+++ b/new.py\n"
      "@@ -0,0 +1,2 @@\n"
      "+x = 1\n"
      "+y = 2\n");
  EXPECT_EQ(gold.files, StrSet{"new.py"});
  EXPECT_TRUE(gold.lines.empty());
}

TEST(ParseGoldPatch, MalformedHunksReportTheLine) {
  try {
    parse_unified_diff(
        "--- a/m.py\n"
        "+++ b/m.py\n"
        "@@ -1,1 +1,1 @@\n"
        "-a\n"
        "-b\n");
    FAIL() << "expected MalformedDiff";
  } catch (const MalformedDiff& e) {
    EXPECT_EQ(e.line(), 5u);
  }
  EXPECT_THROW(parse_unified_diff("--- a/m.py\n+++ b/m.py\n@@ nonsense @@\n"), MalformedDiff);
  EXPECT_THROW(parse_unified_diff("--- a/m.py\n+++ b/m.py\n@@ -1,2 +1,2 @@\n a\n"), MalformedDiff);
}

TEST(ParseGoldPatch, MultipleFiles) {
  auto gold = parse_unified_diff(
      "diff --git a/x.py b/x.py\n"
      "index 1..2 100644\n"
      "--- a/x.py\n"
      "+++ b/x.py\n"
      "@@ -4 +4 @@\n"
      "-old\n"
      "+new\n"
      "--- a/y.py\n"
      "+++ b/y.py\n"
      "@@ -10,2 +10,1 @@\n"
      " keep\n"
      "-drop\n");
  EXPECT_EQ(gold.files, (StrSet{"x.py", "y.py"}));
  EXPECT_EQ(gold.lines, (std::set<FileLine>{{"x.py", 4}, {"y.py", 11}}));
}

namespace {

std::filesystem::path eval_dir() { return fixture_dir() / "eval"; }

std::map<std::string, InstancePrediction> load_predictions(const std::string& name) {
  std::ifstream in(eval_dir() / name);
  return parse_predictions(in);
}

}  // namespace

TEST(Evaluate, ToyCorpus) {
  auto s = f1_session();
  auto preds = load_predictions("predictions.jsonl");
  auto gold = load_gold_dir(eval_dir() / "gold");
  ASSERT_EQ(gold.size(), 3u);
  auto report = evaluate(*s, preds, gold, 8000, std::map<std::string, double>{{"t1", 1}, {"t2", 0}});
  ASSERT_EQ(report.instances.size(), 3u);

  const auto& t1 = report.instances[0].values;
  EXPECT_EQ(t1.at("file_recall@1"), 1.0);
  EXPECT_EQ(t1.at("function_recall@1"), 1.0);
  EXPECT_EQ(t1.at("function_f1@1"), 1.0);
  EXPECT_DOUBLE_EQ(*t1.at("function_f1@3"), 2.0 / 3.0);
  EXPECT_EQ(t1.at("line_recall@1"), 1.0);
  EXPECT_DOUBLE_EQ(*t1.at("line_iou"), 1.0 / 7.0);
  EXPECT_EQ(t1.at("coverage@budget"), 1.0);

  const auto& t2 = report.instances[1].values;
  EXPECT_EQ(t2.at("file_recall@1"), 0.0);
  EXPECT_EQ(t2.at("file_recall@3"), 1.0);
  EXPECT_EQ(t2.at("file_mrr"), 0.5);
  EXPECT_EQ(t2.at("function_mrr"), 0.5);
  EXPECT_EQ(t2.at("coverage@budget"), 0.0);  // supplied bundle misses main.py

  const auto& t3 = report.instances[2];
  EXPECT_TRUE(t3.missing_prediction);
  EXPECT_EQ(t3.values.at("file_recall@1"), 0.0);
  EXPECT_EQ(t3.values.at("function_recall@1"), std::nullopt);
  EXPECT_EQ(t3.values.at("line_iou"), std::nullopt);

  EXPECT_EQ(report.missing_predictions, 1u);
  EXPECT_DOUBLE_EQ(report.means.at("file_recall@1"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(report.means.at("function_recall@1"), 0.5);
  EXPECT_EQ(report.counted.at("function_recall@1"), 2u);
  EXPECT_EQ(report.excluded.at("function_recall@1"), 1u);
  ASSERT_TRUE(report.spearman.has_value());
  EXPECT_TRUE(report.spearman->defined);
  EXPECT_DOUBLE_EQ(report.spearman->value, 1.0);

  for (const auto& inst : report.instances) {
    for (const auto& [name, v] : inst.values) {
      if (v) {
        EXPECT_GE(*v, 0.0) << name;
        EXPECT_LE(*v, 1.0) << name;
      }
    }
  }
  auto j = report_to_json(report);
  EXPECT_EQ(j["instance_count"], 3);
  EXPECT_TRUE(j["instances"][2]["metrics"]["line_iou"].is_null());
  EXPECT_NE(report_to_table(report).find("function_recall@1"), std::string::npos);
}

TEST(ParsePredictions, MalformedLineIsReported) {
  try {
    load_predictions("malformed.jsonl");
    FAIL() << "expected CorruptFile";
  } catch (const CorruptFile& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParsePredictions, ScoresMustNotIncrease) {
  std::istringstream in(
      R"({"instance_id":"x","predictions":[{"file":"a.py","start_line":1,"end_line":1,"score":0.1},)"
      R"({"file":"b.py","start_line":1,"end_line":1,"score":0.2}]})");
  EXPECT_THROW(parse_predictions(in), CorruptFile);
}

TEST(ResolvePredictedFunction, NameStartLineAndSpan) {
  auto s = f1_session();
  EXPECT_EQ(resolve_predicted_function(*s, {"pkg/util.py", "inc", 1, 3, 1}), kInc);
  EXPECT_EQ(resolve_predicted_function(*s, {"pkg/util.py", "pkg.util.inc", 2, 2, 1}), kInc);
  EXPECT_EQ(resolve_predicted_function(*s, {"pkg/main.py", "", 5, 5, 1}), kRun);
  EXPECT_EQ(resolve_predicted_function(*s, {"pkg/main.py", "missing", 5, 5, 1}), std::nullopt);
}
