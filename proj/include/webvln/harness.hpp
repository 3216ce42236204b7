#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "webvln/agents.hpp"
#include "webvln/metrics.hpp"
#include "webvln/train.hpp"

namespace webvln {

// Site id -> graph. Records with an empty site id resolve to the only graph.
class GraphSet {
 public:
  void add(NavGraph graph);
  const NavGraph& get(const std::string& site_id) const;
  bool empty() const { return graphs_.empty(); }
  const std::map<std::string, NavGraph>& all() const { return graphs_; }
  std::vector<const NavGraph*> pointers() const;
  GraphLookup lookup() const;

 private:
  std::map<std::string, NavGraph> graphs_;
};

// Directories are ingested as sites; files are read as graph JSON.
GraphSet load_graphs(const std::vector<std::string>& paths);

// Records of one split; "" or "all" keeps everything.
std::vector<EpisodeRecord> filter_split(const std::vector<EpisodeRecord>& records, const std::string& split);

struct EpisodeOutcome {
  Trajectory trajectory;
  bool fallback = false;
};

// Runs an agent to completion. Invalid decisions throw InvalidActionIndex.
EpisodeOutcome run_episode(Agent& agent, const NavGraph& graph, const EpisodeRecord& record,
                           std::size_t max_steps = kDefaultMaxSteps);

struct EvalOptions {
  std::string split;
  std::size_t max_steps = kDefaultMaxSteps;
  std::string log_path;     // trajectory JSONL, empty = none
  std::string report_path;  // report JSON, empty = none
};

struct EvalFailure {
  std::string record_id;
  std::string error;
};

struct EvalResult {
  MetricsReport report;
  std::vector<Trajectory> trajectories;
  std::vector<EvalFailure> failures;
  std::size_t fallbacks = 0;
};

// Per-record failures are collected, never fatal.
EvalResult run_eval(Agent& agent, const std::vector<EpisodeRecord>& records, const GraphSet& graphs,
                    const Taxonomy& taxonomy, const EvalOptions& options);

// Recomputes a report from a trajectory log alone.
MetricsReport report_from_log(const std::string& log_path, const std::vector<EpisodeRecord>& records,
                              const GraphSet& graphs, const Taxonomy& taxonomy);

enum class AgentKind { kRandom, kGreedy, kOracle, kLlm, kLearned };
AgentKind parse_agent_kind(const std::string& name);

struct ServeSettings {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;    // shared token, empty = open
  std::string ui_dir;   // static UI bundle, empty = none
  double idle_seconds = 1800;
};

// Config file keys (all optional):
//   sites[], records, taxonomy[], output_dir, seed, max_steps, checkpoint,
//   llm{endpoint, model, api_key, mock_dir, max_in_flight, timeout_seconds},
//   model{dim, heads, ff, n_init, n_nav, n_ans, max_text_len, max_answer_len, patch_grid},
//   train{learning_rate, iterations, batch_size, eta, lambda, weight_decay, clip_norm,
//         lr_decay_factor, lr_decay_fraction, checkpoint_every, optimizer},
//   serve{host, port, token, ui_dir, idle_seconds}
// Env overrides: WEBVLN_RECORDS, WEBVLN_OUTPUT_DIR, WEBVLN_SEED, WEBVLN_PORT,
// WEBVLN_TOKEN, LLM_ENDPOINT, LLM_API_KEY, LLM_MODEL.
struct HarnessConfig {
  std::vector<std::string> sites;
  std::string records;
  std::vector<std::string> taxonomy;
  std::string output_dir = "runs";
  std::string checkpoint;
  std::uint64_t seed = 0;
  std::size_t max_steps = kDefaultMaxSteps;
  LlmConfig llm;
  ModelConfig model;
  TrainConfig train;
  ServeSettings serve;

  static HarnessConfig from_json(std::string_view text);
  static HarnessConfig load(const std::string& path);
  HarnessConfig with_env_overrides() const;
};

// ---- end-to-end pipelines shared by the C API and the CLI ----

struct TrainRunResult {
  TrainSummary summary;
  std::size_t records = 0;
  std::size_t vocab_size = 0;
  std::size_t parameters = 0;
};

// Trains on the "train" split of config.records over config.sites and writes
// the checkpoint (periodically when train.checkpoint_every > 0).
TrainRunResult run_training(const HarnessConfig& config, const std::string& checkpoint_out,
                            const std::string& log_path = {});

// Owns whatever an agent needs (client, model, vocabulary).
struct AgentBundle {
  std::unique_ptr<LlmClient> client;
  std::unique_ptr<Model<float>> model;
  std::unique_ptr<Vocab> vocab;
  std::unique_ptr<Agent> agent;
};
AgentBundle make_agent(AgentKind kind, const HarnessConfig& config);

Taxonomy load_taxonomy(const HarnessConfig& config);

// Writes <output_dir>/<run_id>/{trajectories.jsonl, report.json}.
EvalResult evaluate(const HarnessConfig& config, AgentKind kind, const std::string& split, const std::string& run_id);

// Gradient check of a freshly initialised small model on one record
// (the first one, or `record_id`), with the vocabulary of that record's pages.
GradCheckResult gradcheck_record(const HarnessConfig& config, const GradCheckOptions& options,
                                 const std::string& record_id = {});

}  // namespace webvln
