#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "slicegraph/context.hpp"
#include "slicegraph/diff.hpp"
#include "slicegraph/metrics.hpp"

namespace slicegraph {

struct PredictedRegion {
  std::string file;
  std::string function;
  int start_line = 0;
  int end_line = 0;
  double score = 0.0;
};

struct InstancePrediction {
  std::string instance_id;
  std::vector<PredictedRegion> regions;
  std::optional<std::vector<LineSpan>> bundle;  // packed spans, when the run produced them
  std::string issue;
};

// One JSON object per line: {"instance_id", "predictions": [{file, function,
// start_line, end_line, score}], "bundle"?: [{file, start_line, end_line}],
// "issue"?}.
inline std::map<std::string, InstancePrediction> parse_predictions(std::istream& in) {
  std::map<std::string, InstancePrediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      InstancePrediction p;
      p.instance_id = rec.at("instance_id").get<std::string>();
      double last = std::numeric_limits<double>::infinity();
      for (const auto& r : rec.at("predictions")) {
        PredictedRegion reg{r.at("file").get<std::string>(), r.value("function", std::string()),
                            r.at("start_line").get<int>(), r.at("end_line").get<int>(), r.value("score", 0.0)};
        if (reg.start_line < 1 || reg.end_line < reg.start_line) throw CorruptFile(lineno, "invalid line span");
        if (reg.score > last) throw CorruptFile(lineno, "prediction scores must be non-increasing");
        last = reg.score;
        p.regions.push_back(std::move(reg));
      }
      if (rec.contains("bundle")) {
        std::vector<LineSpan> spans;
        for (const auto& s : rec.at("bundle")) {
          spans.push_back({s.at("file").get<std::string>(), s.at("start_line").get<int>(), s.at("end_line").get<int>()});
        }
        p.bundle = std::move(spans);
      }
      p.issue = rec.value("issue", std::string());
      if (!out.emplace(p.instance_id, p).second) throw CorruptFile(lineno, "duplicate instance_id " + p.instance_id);
    } catch (const nlohmann::json::exception& e) {
      throw CorruptFile(lineno, std::string("malformed prediction record: ") + e.what());
    }
  }
  return out;
}

// <instance_id>.diff or .patch files, keyed by instance id.
inline std::map<std::string, std::string> load_gold_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, std::string> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (!entry.is_regular_file() || (ext != ".diff" && ext != ".patch")) continue;
    out.emplace(entry.path().stem().string(), read_file(entry.path()));
  }
  return out;
}

inline const std::vector<std::string> kMetricNames = {
    "file_recall@1",     "file_recall@3",     "file_recall@5",  "file_mrr",      "function_recall@1",
    "function_recall@3", "function_recall@5", "function_mrr",   "function_f1@1", "function_f1@3",
    "function_f1@5",     "line_recall@1",     "line_recall@5",  "line_recall@10", "line_iou",
    "coverage@budget"};

struct InstanceReport {
  std::string instance_id;
  bool missing_prediction = false;
  std::map<std::string, std::optional<double>> values;  // nullopt: excluded (empty gold set)
  std::size_t gold_files = 0;
  std::size_t gold_functions = 0;
  std::size_t gold_lines = 0;
};

struct LocalizationReport {
  std::size_t budget = kDefaultBudget;
  std::vector<InstanceReport> instances;
  std::map<std::string, double> means;
  std::map<std::string, std::size_t> counted;
  std::map<std::string, std::size_t> excluded;
  std::size_t missing_predictions = 0;
  std::vector<std::string> unmatched_predictions;  // predictions without a gold patch
  std::optional<metrics::Correlation> spearman;     // function_recall@1 vs outcomes
};

// Node id of a predicted function: a Function/Method in that file whose name
// or qualified name matches, preferring the exact start line, then a span
// containing the start line, then a unique name match.
inline std::optional<std::string> resolve_predicted_function(const RetrievalSession& session,
                                                             const PredictedRegion& p) {
  if (p.function.empty()) {
    if (!session.knows_file(p.file)) return std::nullopt;
    return session.get_enclosing_scopes(p.file, p.start_line).function;
  }
  std::vector<const EntityNode*> named;
  for (const auto& [id, n] : session.graph().nodes()) {
    if (!is_callable(n.kind) || n.file_path != p.file) continue;
    if (n.name == p.function || n.qualified_name == p.function || n.qualified_name.ends_with("." + p.function)) {
      named.push_back(&n);
    }
  }
  for (const auto* n : named) {
    if (n->start_line == p.start_line) return n->id;
  }
  const EntityNode* best = nullptr;
  for (const auto* n : named) {
    if (n->start_line <= p.start_line && p.start_line <= n->end_line &&
        (best == nullptr || n->start_line > best->start_line)) {
      best = n;
    }
  }
  if (best != nullptr) return best->id;
  if (named.size() == 1) return named.front()->id;
  return std::nullopt;
}

namespace detail {

inline void add_span_lines(std::set<FileLine>& out, const std::string& file, int start, int end) {
  for (int l = start; l <= end; ++l) out.emplace(file, l);
}

}  // namespace detail

inline InstanceReport evaluate_instance(const RetrievalSession& session, const std::string& id, const GoldSets& gold,
                                        const InstancePrediction* pred, std::size_t budget) {
  InstanceReport r;
  r.instance_id = id;
  r.gold_files = gold.files.size();
  r.gold_functions = gold.functions.size();
  r.gold_lines = gold.lines.size();
  r.missing_prediction = pred == nullptr;
  static const InstancePrediction kEmpty;
  const InstancePrediction& p = pred != nullptr ? *pred : kEmpty;

  std::vector<std::string> files;
  std::vector<std::string> functions;
  for (const auto& reg : p.regions) {
    files.push_back(reg.file);
    auto fn = resolve_predicted_function(session, reg);
    functions.push_back(fn ? *fn : "unresolved:" + reg.file + ":" + reg.function + ":" +
                                       std::to_string(reg.start_line));
  }
  files = metrics::dedupe(files);
  functions = metrics::dedupe(functions);

  auto put = [&](const std::string& name, bool include, double v) {
    r.values[name] = include ? std::optional<double>(v) : std::nullopt;
  };
  const bool has_files = !gold.files.empty();
  for (std::size_t k : {1, 3, 5}) put("file_recall@" + std::to_string(k), has_files, metrics::recall_at_k(files, gold.files, k));
  put("file_mrr", has_files, metrics::mrr(files, gold.files));

  const bool has_fns = !gold.functions.empty();
  for (std::size_t k : {1, 3, 5}) {
    put("function_recall@" + std::to_string(k), has_fns, metrics::recall_at_k(functions, gold.functions, k));
  }
  put("function_mrr", has_fns, metrics::mrr(functions, gold.functions));
  for (std::size_t k : {1, 3, 5}) {
    put("function_f1@" + std::to_string(k), has_fns, metrics::f1_at_k(functions, gold.functions, k));
  }

  const bool has_lines = !gold.lines.empty();
  for (std::size_t k : {1, 5, 10}) {
    std::set<FileLine> covered;
    for (std::size_t i = 0; i < p.regions.size() && i < k; ++i) {
      detail::add_span_lines(covered, p.regions[i].file, p.regions[i].start_line, p.regions[i].end_line);
    }
    bool hit = std::any_of(gold.lines.begin(), gold.lines.end(), [&](const FileLine& l) { return covered.contains(l); });
    put("line_recall@" + std::to_string(k), has_lines, hit ? 1.0 : 0.0);
  }
  std::set<FileLine> predicted_lines;
  for (const auto& reg : p.regions) detail::add_span_lines(predicted_lines, reg.file, reg.start_line, reg.end_line);
  put("line_iou", has_lines, metrics::iou(predicted_lines, gold.lines));

  std::set<FileLine> bundle_lines;
  if (p.bundle) {
    for (const auto& s : *p.bundle) detail::add_span_lines(bundle_lines, s.file, s.start_line, s.end_line);
  } else {
    std::vector<std::string> seeds;
    for (const auto& f : functions) {
      if (session.graph().contains(f)) seeds.push_back(f);
    }
    if (!seeds.empty()) {
      auto bundle = build_context_bundle(session, seeds, {}, BundleStrategy::Hybrid, budget, p.issue);
      for (const auto& s : bundle.spans) detail::add_span_lines(bundle_lines, s.file, s.start_line, s.end_line);
    }
  }
  put("coverage@budget", has_lines, metrics::coverage(bundle_lines, gold.lines));
  return r;
}

inline LocalizationReport evaluate(const RetrievalSession& session,
                                   const std::map<std::string, InstancePrediction>& predictions,
                                   const std::map<std::string, std::string>& gold_diffs, std::size_t budget,
                                   const std::optional<std::map<std::string, double>>& outcomes = std::nullopt) {
  LocalizationReport report;
  report.budget = budget;
  for (const auto& [id, diff] : gold_diffs) {
    GoldSets gold;
    try {
      gold = parse_gold_patch(diff, session);
    } catch (const MalformedDiff& e) {
      throw MalformedDiff(e.line(), "instance " + id + ": " + e.what());
    }
    auto it = predictions.find(id);
    report.instances.push_back(evaluate_instance(session, id, gold, it == predictions.end() ? nullptr : &it->second,
                                                 budget));
    report.missing_predictions += it == predictions.end();
  }
  for (const auto& [id, _] : predictions) {
    if (!gold_diffs.contains(id)) report.unmatched_predictions.push_back(id);
  }
  for (const auto& name : kMetricNames) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& inst : report.instances) {
      const auto& v = inst.values.at(name);
      if (v) sum += *v, ++n;
    }
    report.counted[name] = n;
    report.excluded[name] = report.instances.size() - n;
    report.means[name] = n == 0 ? 0.0 : sum / static_cast<double>(n);
  }
  if (outcomes) {
    std::vector<double> a, b;
    for (const auto& inst : report.instances) {
      const auto& v = inst.values.at("function_recall@1");
      auto o = outcomes->find(inst.instance_id);
      if (v && o != outcomes->end()) a.push_back(*v), b.push_back(o->second);
    }
    report.spearman = metrics::spearman_rho(a, b);
  }
  return report;
}

inline nlohmann::ordered_json report_to_json(const LocalizationReport& r) {
  using nlohmann::ordered_json;
  auto number_or_null = [](std::optional<double> v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["budget"] = r.budget;
  j["instance_count"] = r.instances.size();
  j["missing_predictions"] = r.missing_predictions;
  j["unmatched_predictions"] = r.unmatched_predictions;
  ordered_json agg = ordered_json::object();
  for (const auto& name : kMetricNames) {
    agg[name] = {{"mean", r.means.at(name)}, {"counted", r.counted.at(name)}, {"excluded", r.excluded.at(name)}};
  }
  j["aggregate"] = agg;
  if (r.spearman) {
    j["spearman_function_recall@1_vs_outcome"] = {{"rho", number_or_null(r.spearman->defined
                                                                              ? std::optional(r.spearman->value)
                                                                              : std::nullopt)},
                                                  {"defined", r.spearman->defined}};
  }
  ordered_json insts = ordered_json::array();
  for (const auto& inst : r.instances) {
    ordered_json v = ordered_json::object();
    for (const auto& name : kMetricNames) v[name] = number_or_null(inst.values.at(name));
    insts.push_back({{"instance_id", inst.instance_id},
                     {"missing_prediction", inst.missing_prediction},
                     {"gold", {{"files", inst.gold_files}, {"functions", inst.gold_functions}, {"lines", inst.gold_lines}}},
                     {"metrics", v}});
  }
  j["instances"] = insts;
  return j;
}

inline std::string report_to_table(const LocalizationReport& r) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "metric" << std::right << std::setw(10) << "mean" << std::setw(9) << "counted"
      << std::setw(10) << "excluded" << '\n';
  for (const auto& name : kMetricNames) {
    out << std::left << std::setw(20) << name << std::right << std::setw(10) << std::fixed << std::setprecision(4)
        << r.means.at(name) << std::setw(9) << r.counted.at(name) << std::setw(10) << r.excluded.at(name) << '\n';
  }
  out << "instances: " << r.instances.size() << ", missing predictions: " << r.missing_predictions << '\n';
  if (r.spearman) {
    out << "spearman(function_recall@1, outcome): ";
    if (r.spearman->defined) {
      out << std::setprecision(4) << r.spearman->value << '\n';
    } else {
      out << "nan (undefined: constant series or fewer than two points)\n";
    }
  }
  return out.str();
}

}  // namespace slicegraph
