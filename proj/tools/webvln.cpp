// Command-line front end over the C API.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "webvln/webvln.h"

using nlohmann::json;

namespace {

struct Failure {
  wvln_status status;
};

void check(wvln_status s) {
  if (s != WVLN_OK) {
    std::cerr << "error: " << wvln_last_error() << "\n";
    throw Failure{s};
  }
}

// Takes ownership of a C API string.
std::string take(char* s) {
  std::string out = s ? s : "";
  wvln_string_free(s);
  return out;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "error: cannot read " << path << "\n";
    throw Failure{WVLN_ERR_IO};
  }
  return json::parse(in);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text << "\n";
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    throw Failure{WVLN_ERR_IO};
  }
}

// Site directory or graph JSON.
wvln_graph* open_graph(const std::string& path) {
  wvln_graph* g = nullptr;
  if (std::filesystem::is_directory(path)) {
    char* report = nullptr;
    check(wvln_graph_ingest(path.c_str(), &g, &report));
    wvln_string_free(report);
  } else {
    check(wvln_graph_load(path.c_str(), &g));
  }
  return g;
}

struct ConfigArgs {
  std::string file;
  std::vector<std::string> sites;
  std::string records;
  std::string checkpoint;
  std::string output_dir;
  std::vector<std::string> taxonomy;
  long long seed = -1;

  void add_to(CLI::App* app) {
    app->add_option("-c,--config", file, "Harness config JSON");
    app->add_option("--site", sites, "Site directory or graph JSON (repeatable)");
    app->add_option("--records", records, "Episode records JSONL");
    app->add_option("--checkpoint", checkpoint, "Model checkpoint");
    app->add_option("--output-dir", output_dir, "Run output directory");
    app->add_option("--taxonomy", taxonomy, "Taxonomy files (JSON or data.noun)");
    app->add_option("--seed", seed, "Seed");
  }

  json build() const {
    json j = file.empty() ? json::object() : read_json_file(file);
    if (!sites.empty()) j["sites"] = sites;
    if (!records.empty()) j["records"] = records;
    if (!checkpoint.empty()) j["checkpoint"] = checkpoint;
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    if (!taxonomy.empty()) j["taxonomy"] = taxonomy;
    if (seed >= 0) j["seed"] = seed;
    return j;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WebVLN benchmark kit"};
  app.require_subcommand(1);

  auto* fixture = app.add_subcommand("fixture", "Write the synthetic 30-page fixture site");
  std::string fixture_dir;
  fixture->add_option("dir", fixture_dir, "Output directory")->required();

  auto* ingest = app.add_subcommand("ingest", "Build a site graph from HTML snapshots");
  std::string ingest_dir, ingest_out;
  ingest->add_option("site_dir", ingest_dir, "Site directory")->required();
  ingest->add_option("-o,--out", ingest_out, "Graph JSON output");

  auto* pathgen = app.add_subcommand("pathgen", "Sample shortest paths to distinct targets");
  std::string pg_graph, pg_out;
  std::size_t pg_n = 10;
  std::uint64_t pg_seed = 0;
  pathgen->add_option("-g,--graph", pg_graph, "Site directory or graph JSON")->required();
  pathgen->add_option("-n", pg_n, "Number of paths");
  pathgen->add_option("--seed", pg_seed, "Seed");
  pathgen->add_option("-o,--out", pg_out, "Output JSON");

  auto* qagen = app.add_subcommand("qagen", "Generate QA episode records with an LLM");
  std::string qa_graph, qa_out, qa_mock, qa_captions, qa_config;
  std::size_t qa_n = 100;
  std::uint64_t qa_seed = 0;
  qagen->add_option("-g,--graph", qa_graph, "Site directory or graph JSON")->required();
  qagen->add_option("-n,--paths", qa_n, "Number of sampled paths");
  qagen->add_option("--seed", qa_seed, "Seed");
  qagen->add_option("--mock-dir", qa_mock, "Canned LLM responses");
  qagen->add_option("--captions", qa_captions, "Screenshot caption sidecar JSON");
  qagen->add_option("-c,--config", qa_config, "Harness config JSON (llm block)");
  qagen->add_option("-o,--out", qa_out, "Records JSONL output")->required();

  auto* train = app.add_subcommand("train", "Train the toy model on the train split");
  ConfigArgs train_cfg;
  train_cfg.add_to(train);
  std::string train_out, train_log;
  long long train_iters = -1;
  train->add_option("-o,--out", train_out, "Checkpoint output")->required();
  train->add_option("--log", train_log, "Training log JSONL");
  train->add_option("--iterations", train_iters, "Override train.iterations");

  auto* eval = app.add_subcommand("eval", "Evaluate an agent on a split");
  ConfigArgs eval_cfg;
  eval_cfg.add_to(eval);
  std::string eval_agent = "random", eval_split = "test", eval_run;
  eval->add_option("-a,--agent", eval_agent, "random|greedy|oracle|llm|learned");
  eval->add_option("-s,--split", eval_split, "train|val|test|all");
  eval->add_option("--run-id", eval_run, "Run id (default <agent>-<split>)");

  auto* report = app.add_subcommand("report", "Recompute a report from a trajectory log");
  ConfigArgs report_cfg;
  report_cfg.add_to(report);
  std::string report_log;
  report->add_option("log", report_log, "Trajectory JSONL")->required();

  auto* serve = app.add_subcommand("serve", "Serve the HTTP session API");
  ConfigArgs serve_cfg;
  serve_cfg.add_to(serve);
  int serve_port = -1;
  std::string serve_host, serve_ui, serve_token;
  serve->add_option("--port", serve_port, "Port");
  serve->add_option("--host", serve_host, "Bind address");
  serve->add_option("--ui-dir", serve_ui, "Static UI bundle");
  serve->add_option("--token", serve_token, "Shared API token");

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check on a small model");
  ConfigArgs gc_cfg;
  gc_cfg.add_to(gradcheck);
  double gc_eps = 1e-5;
  std::size_t gc_coords = 500;
  int gc_dim = 16;
  std::string gc_record;
  gradcheck->add_option("--eps", gc_eps, "Finite-difference step");
  gradcheck->add_option("--min-coords", gc_coords, "Minimum coordinates checked");
  gradcheck->add_option("--dim", gc_dim, "Model width");
  gradcheck->add_option("--record", gc_record, "Record id (default: first)");

  auto* quality = app.add_subcommand("quality-sample", "Seeded per-site sample of records for review");
  std::string qs_records;
  std::size_t qs_k = 5;
  std::uint64_t qs_seed = 0;
  quality->add_option("records", qs_records, "Records JSONL")->required();
  quality->add_option("-k", qs_k, "Records per site");
  quality->add_option("--seed", qs_seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fixture) {
      char* info = nullptr;
      check(wvln_fixture(fixture_dir.c_str(), &info));
      std::cout << take(info) << "\n";
    } else if (*ingest) {
      wvln_graph* g = nullptr;
      char* rep = nullptr;
      check(wvln_graph_ingest(ingest_dir.c_str(), &g, &rep));
      std::cout << take(rep) << "\n";
      if (!ingest_out.empty()) check(wvln_graph_save(g, ingest_out.c_str()));
      wvln_graph_free(g);
    } else if (*pathgen) {
      wvln_graph* g = open_graph(pg_graph);
      char* out = nullptr;
      const wvln_status s = wvln_pathgen(g, pg_n, pg_seed, &out);
      wvln_graph_free(g);
      check(s);
      const std::string text = take(out);
      if (pg_out.empty()) {
        std::cout << text << "\n";
      } else {
        write_text(pg_out, text);
      }
    } else if (*qagen) {
      json opts{{"n_paths", qa_n}, {"seed", qa_seed}, {"out", qa_out}};
      json llm = qa_config.empty() ? json::object() : read_json_file(qa_config).value("llm", json::object());
      if (!qa_mock.empty()) llm["mock_dir"] = qa_mock;
      opts["llm"] = llm;
      if (!qa_captions.empty()) opts["captions"] = qa_captions;
      wvln_graph* g = open_graph(qa_graph);
      char* rep = nullptr;
      const wvln_status s = wvln_qagen(g, opts.dump().c_str(), &rep);
      wvln_graph_free(g);
      check(s);
      std::cout << take(rep) << "\n";
    } else if (*train) {
      json cfg = train_cfg.build();
      if (train_iters > 0) cfg["train"]["iterations"] = train_iters;
      char* summary = nullptr;
      check(wvln_train(cfg.dump().c_str(), train_out.c_str(), train_log.empty() ? nullptr : train_log.c_str(), &summary));
      std::cout << take(summary) << "\n";
    } else if (*eval) {
      const std::string run = eval_run.empty() ? eval_agent + "-" + eval_split : eval_run;
      char* rep = nullptr;
      check(wvln_eval(eval_cfg.build().dump().c_str(), eval_agent.c_str(), eval_split.c_str(), run.c_str(), &rep));
      const json j = json::parse(take(rep));
      std::cout << j.at("table").get<std::string>();
      if (!j.at("failures").empty()) std::cout << j.at("failures").size() << " record(s) failed; see report.json\n";
    } else if (*report) {
      char* rep = nullptr;
      check(wvln_report_from_log(report_cfg.build().dump().c_str(), report_log.c_str(), &rep));
      std::cout << take(rep) << "\n";
    } else if (*serve) {
      json cfg = serve_cfg.build();
      if (serve_port >= 0) cfg["serve"]["port"] = serve_port;
      if (!serve_host.empty()) cfg["serve"]["host"] = serve_host;
      if (!serve_ui.empty()) cfg["serve"]["ui_dir"] = serve_ui;
      if (!serve_token.empty()) cfg["serve"]["token"] = serve_token;
      check(wvln_service_run(cfg.dump().c_str()));
    } else if (*gradcheck) {
      json cfg = gc_cfg.build();
      cfg["model"]["dim"] = gc_dim;
      if (!cfg["model"].contains("heads")) cfg["model"]["heads"] = 2;
      if (!cfg["model"].contains("ff")) cfg["model"]["ff"] = 2 * gc_dim;
      json opts{{"eps", gc_eps}, {"min_coords", gc_coords}};
      if (!gc_record.empty()) opts["record_id"] = gc_record;
      char* res = nullptr;
      check(wvln_gradcheck(cfg.dump().c_str(), opts.dump().c_str(), &res));
      std::cout << take(res) << "\n";
    } else if (*quality) {
      char* out = nullptr;
      check(wvln_quality_sample(qs_records.c_str(), qs_k, qs_seed, &out));
      std::cout << take(out) << "\n";
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(WVLN_ERR_PARSE);
  }
  return 0;
}
