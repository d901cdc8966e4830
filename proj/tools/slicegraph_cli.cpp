#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <httplib.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "slicegraph/slicegraph.hpp"

namespace sg = slicegraph;

namespace {

void init_logging() {
  auto logger = spdlog::stderr_color_mt("slicegraph");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* level = std::getenv("SLICEGRAPH_LOG_LEVEL");
  spdlog::set_level(level != nullptr ? spdlog::level::from_str(level) : spdlog::level::info);
}

sg::RetrievalSession open_session(const std::string& graph_path, const std::string& repo) {
  auto graph = sg::load_graph_file(graph_path);
  spdlog::debug("loaded {} nodes, {} edges from {}", graph.nodes().size(), graph.edges().size(), graph_path);
  return sg::RetrievalSession::open(std::move(graph), repo);
}

int run_build(const std::string& repo, const std::string& mode_name, const std::string& out) {
  auto mode = sg::parse_build_mode(mode_name);
  if (!mode) throw sg::InvalidArgument("--mode must be full or coarse");
  auto result = sg::build_repository(repo, *mode);
  for (const auto& msg : result.diagnostics.messages) spdlog::warn("{}", msg);
  sg::save_graph_file(result.graph, out);
  const auto& g = result.graph;
  spdlog::info("wrote {}: {} nodes ({} statements), {} edges; calls resolved {}, unresolved {}; parse failures {}",
               out, g.nodes().size(), g.count_nodes(sg::NodeKind::Statement), g.edges().size(),
               result.diagnostics.resolved_calls, result.diagnostics.unresolved_calls,
               result.diagnostics.parse_failures);
  return 0;
}

int run_serve(const std::string& graph, const std::string& repo, const std::string& transport,
              const std::string& host, int port) {
  auto session = open_session(graph, repo);
  sg::ToolService service(session);
  if (transport == "stdio") {
    spdlog::info("serving {} tools on stdio", sg::ToolService::schemas().size());
    service.serve_stream(std::cin, std::cout);
    spdlog::info("ledger: {}", service.ledger().to_json().dump());
    return 0;
  }
  if (transport != "http") throw sg::InvalidArgument("--transport must be stdio or http");
  httplib::Server server;
  server.Post("/tool", [&](const httplib::Request& req, httplib::Response& res) {
    res.set_content(service.handle(req.body), "application/json");
  });
  if (!server.bind_to_port(host, port)) {
    spdlog::error("cannot bind {}:{} (port busy?)", host, port);
    return 3;
  }
  spdlog::info("serving POST /tool on http://{}:{}", host, port);
  server.listen_after_bind();
  return 0;
}

int run_replay(const std::string& graph, const std::string& repo, const std::string& trace_path,
               const std::string& transcript_path, const std::string& ledger_path) {
  auto session = open_session(graph, repo);
  sg::ToolService service(session);
  std::ifstream trace(trace_path);
  if (!trace) throw sg::IoError("cannot read " + trace_path);
  sg::ReplayResult result;
  int status = 0;
  try {
    result = sg::replay_trace(service, trace);
  } catch (const sg::ReplayMismatch& e) {
    spdlog::error("{}", e.what());
    status = 1;
  }
  std::ofstream transcript_file;
  if (!transcript_path.empty()) {
    transcript_file.open(transcript_path);
    if (!transcript_file) throw sg::IoError("cannot write " + transcript_path);
  }
  std::ostream& out = transcript_path.empty() ? std::cout : transcript_file;
  for (const auto& line : result.transcript) out << line << '\n';
  const std::string ledger = service.ledger().to_json().dump(2);
  if (ledger_path.empty()) {
    std::cerr << ledger << '\n';
  } else {
    std::ofstream(ledger_path) << ledger << '\n';
  }
  if (status == 0) spdlog::info("replayed {} requests, {} checked against expected responses",
                                result.transcript.size(), result.checked);
  return status;
}

int run_eval(const std::string& predictions_path, const std::string& gold_dir, const std::string& graph,
             const std::string& repo, long long budget, const std::string& outcomes_path, const std::string& json_path) {
  if (budget < 0) throw sg::InvalidArgument("--budget must be >= 0");
  auto session = open_session(graph, repo);
  std::ifstream pred_in(predictions_path);
  if (!pred_in) throw sg::IoError("cannot read " + predictions_path);
  auto predictions = sg::parse_predictions(pred_in);
  auto gold = sg::load_gold_dir(gold_dir);
  std::optional<std::map<std::string, double>> outcomes;
  if (!outcomes_path.empty()) {
    auto j = nlohmann::json::parse(sg::read_file(outcomes_path));
    outcomes.emplace();
    for (const auto& [id, v] : j.items()) (*outcomes)[id] = v.get<double>();
  }
  auto report = sg::evaluate(session, predictions, gold, static_cast<std::size_t>(budget), outcomes);
  for (const auto& inst : report.instances) {
    if (inst.missing_prediction) spdlog::warn("instance {}: no prediction, scored 0", inst.instance_id);
  }
  std::cout << sg::report_to_table(report);
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw sg::IoError("cannot write " + json_path);
    out << sg::report_to_json(report).dump(2) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"Repository graph builder and code-retrieval tool service for Python codebases"};
  app.require_subcommand(1);

  std::string repo, mode = "full", out = "graph.jsonl";
  auto* build = app.add_subcommand("build", "Build and persist the repository graph");
  build->add_option("repo", repo, "Repository root")->required();
  build->add_option("--mode", mode, "full or coarse")->check(CLI::IsMember({"full", "coarse"}));
  build->add_option("--out", out, "Graph file to write");

  std::string graph, transport = "stdio", host = "127.0.0.1";
  int port = 8765;
  auto* serve = app.add_subcommand("serve", "Serve the JSON tools over stdio or HTTP");
  serve->add_option("graph", graph, "Graph file")->required();
  serve->add_option("--repo", repo, "Repository root the graph was built from")->required();
  serve->add_option("--transport", transport, "stdio or http")->check(CLI::IsMember({"stdio", "http"}));
  serve->add_option("--host", host, "HTTP bind address");
  serve->add_option("--port", port, "HTTP port");

  std::string trace, transcript, ledger;
  auto* replay = app.add_subcommand("replay", "Replay a recorded tool-call trace");
  replay->add_option("trace", trace, "Trace file (JSON Lines)")->required();
  replay->add_option("graph", graph, "Graph file")->required();
  replay->add_option("--repo", repo, "Repository root")->required();
  replay->add_option("--transcript", transcript, "Write responses here instead of stdout");
  replay->add_option("--ledger", ledger, "Write the token ledger here instead of stderr");

  std::string predictions, gold_dir, outcomes, json_out;
  long long budget = static_cast<long long>(sg::kDefaultBudget);
  auto* eval = app.add_subcommand("eval", "Score localization predictions against gold patches");
  eval->add_option("predictions", predictions, "Predictions file (JSON Lines)")->required();
  eval->add_option("gold_dir", gold_dir, "Directory of <instance_id>.diff files")->required();
  eval->add_option("graph", graph, "Graph file of the pre-patch snapshot")->required();
  eval->add_option("--repo", repo, "Pre-patch repository root")->required();
  eval->add_option("--budget", budget, "Token budget for Coverage@budget");
  eval->add_option("--outcomes", outcomes, "JSON object of per-instance outcomes for rank correlation");
  eval->add_option("--json", json_out, "Also write the report as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*build) return run_build(repo, mode, out);
    if (*serve) return run_serve(graph, repo, transport, host, port);
    if (*replay) return run_replay(graph, repo, trace, transcript, ledger);
    if (*eval) return run_eval(predictions, gold_dir, graph, repo, budget, outcomes, json_out);
  } catch (const sg::Error& e) {
    spdlog::error("{}: {}", e.code(), e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
