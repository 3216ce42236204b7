#include "webvln/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>

#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/json_io.hpp"
#include "webvln/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace webvln {

void GraphSet::add(NavGraph graph) {
  const std::string id = graph.site_id();
  if (graphs_.count(id)) fail(ErrorCode::kInvalidArgument, "DuplicateSite", "site '" + id + "' loaded twice");
  graphs_.emplace(id, std::move(graph));
}

const NavGraph& GraphSet::get(const std::string& site_id) const {
  if (site_id.empty() && graphs_.size() == 1) return graphs_.begin()->second;
  auto it = graphs_.find(site_id);
  if (it == graphs_.end()) fail(ErrorCode::kNotFound, "UnknownSite", "no graph for site '" + site_id + "'");
  return it->second;
}

std::vector<const NavGraph*> GraphSet::pointers() const {
  std::vector<const NavGraph*> out;
  for (const auto& [id, g] : graphs_) out.push_back(&g);
  return out;
}

GraphLookup GraphSet::lookup() const {
  return [this](const std::string& site_id) -> const NavGraph& { return get(site_id); };
}

GraphSet load_graphs(const std::vector<std::string>& paths) {
  GraphSet set;
  for (const auto& p : paths) set.add(fs::is_directory(p) ? load_site(p) : load_graph(p));
  return set;
}

std::vector<EpisodeRecord> filter_split(const std::vector<EpisodeRecord>& records, const std::string& split) {
  if (split.empty() || split == "all") return records;
  if (split != "train" && split != "val" && split != "test") {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "unknown split '" + split + "'");
  }
  std::vector<EpisodeRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

EpisodeOutcome run_episode(Agent& agent, const NavGraph& graph, const EpisodeRecord& record, std::size_t max_steps) {
  agent.begin(record, graph);
  EpisodeState st = reset(graph, record, max_steps);
  EpisodeOutcome out;
  std::string answer;
  while (!st.done) {
    const Observation obs = observe(st, graph);
    const AgentDecision d = agent.act(st, obs, graph);
    out.fallback = out.fallback || d.fallback;
    st = step(st, d.action_index, graph);
    if (st.done && !st.forced_stop) answer = d.answer.value_or("");
  }
  if (st.forced_stop) answer = agent.forced_answer(st, graph);
  out.trajectory = finish_with_answer(st, answer);
  return out;
}

EvalResult run_eval(Agent& agent, const std::vector<EpisodeRecord>& records, const GraphSet& graphs,
                    const Taxonomy& taxonomy, const EvalOptions& options) {
  const auto selected = filter_split(records, options.split);
  EvalResult res;
  std::vector<json> rows;
  for (const auto& rec : selected) {
    try {
      const EpisodeOutcome o = run_episode(agent, graphs.get(rec.site_id), rec, options.max_steps);
      res.fallbacks += o.fallback;
      json row = o.trajectory;
      row["fallback"] = o.fallback;
      rows.push_back(std::move(row));
      res.trajectories.push_back(o.trajectory);
    } catch (const std::exception& e) {
      res.failures.push_back({rec.record_id, e.what()});
    }
  }
  res.report = compute_report(res.trajectories, index_records(selected), graphs.lookup(), taxonomy);

  auto ensure_parent = [](const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
  };
  if (!options.log_path.empty()) {
    ensure_parent(options.log_path);
    write_jsonl(options.log_path, rows);
  }
  if (!options.report_path.empty()) {
    ensure_parent(options.report_path);
    json j = json::parse(report_to_json(res.report));
    j["agent"] = agent.name();
    j["split"] = options.split.empty() ? "all" : options.split;
    j["fallbacks"] = res.fallbacks;
    j["failures"] = json::array();
    for (const auto& f : res.failures) j["failures"].push_back({{"record_id", f.record_id}, {"error", f.error}});
    write_file(options.report_path, j.dump(2) + "\n");
  }
  return res;
}

MetricsReport report_from_log(const std::string& log_path, const std::vector<EpisodeRecord>& records,
                              const GraphSet& graphs, const Taxonomy& taxonomy) {
  return compute_report(load_trajectories(log_path), index_records(records), graphs.lookup(), taxonomy);
}

AgentKind parse_agent_kind(const std::string& name) {
  static const std::map<std::string, AgentKind> kKinds = {{"random", AgentKind::kRandom},
                                                          {"greedy", AgentKind::kGreedy},
                                                          {"oracle", AgentKind::kOracle},
                                                          {"llm", AgentKind::kLlm},
                                                          {"learned", AgentKind::kLearned}};
  auto it = kKinds.find(name);
  if (it == kKinds.end()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "unknown agent '" + name + "'");
  return it->second;
}

namespace {

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

HarnessConfig HarnessConfig::from_json(std::string_view text) {
  HarnessConfig c;
  json j;
  try {
    j = json::parse(text);
    if (!j.is_object()) fail(ErrorCode::kParse, "InvalidConfig", "config must be a JSON object");
    maybe(j, "sites", c.sites);
    maybe(j, "records", c.records);
    maybe(j, "taxonomy", c.taxonomy);
    maybe(j, "output_dir", c.output_dir);
    maybe(j, "checkpoint", c.checkpoint);
    maybe(j, "seed", c.seed);
    maybe(j, "max_steps", c.max_steps);
    if (j.contains("llm")) {
      const json& l = j.at("llm");
      maybe(l, "endpoint", c.llm.endpoint);
      maybe(l, "model", c.llm.model);
      maybe(l, "api_key", c.llm.api_key);
      maybe(l, "mock_dir", c.llm.mock_dir);
      maybe(l, "max_in_flight", c.llm.max_in_flight);
      maybe(l, "timeout_seconds", c.llm.timeout_seconds);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      maybe(m, "dim", c.model.dim);
      maybe(m, "heads", c.model.heads);
      maybe(m, "ff", c.model.ff);
      maybe(m, "n_init", c.model.n_init);
      maybe(m, "n_nav", c.model.n_nav);
      maybe(m, "n_ans", c.model.n_ans);
      maybe(m, "max_text_len", c.model.max_text_len);
      maybe(m, "max_answer_len", c.model.max_answer_len);
      maybe(m, "patch_grid", c.model.patches.grid);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      maybe(t, "learning_rate", c.train.learning_rate);
      maybe(t, "iterations", c.train.iterations);
      maybe(t, "batch_size", c.train.batch_size);
      maybe(t, "eta", c.train.eta);
      maybe(t, "lambda", c.train.lambda);
      maybe(t, "weight_decay", c.train.weight_decay);
      maybe(t, "clip_norm", c.train.clip_norm);
      maybe(t, "lr_decay_factor", c.train.lr_decay_factor);
      maybe(t, "lr_decay_fraction", c.train.lr_decay_fraction);
      maybe(t, "checkpoint_every", c.train.checkpoint_every);
      std::string opt;
      maybe(t, "optimizer", opt);
      if (opt == "sgd") {
        c.train.optimizer = Optimizer::kSgd;
      } else if (!opt.empty() && opt != "adamw") {
        fail(ErrorCode::kInvalidArgument, "InvalidConfig", "optimizer must be adamw or sgd");
      }
    }
    if (j.contains("serve")) {
      const json& s = j.at("serve");
      maybe(s, "host", c.serve.host);
      maybe(s, "port", c.serve.port);
      maybe(s, "token", c.serve.token);
      maybe(s, "ui_dir", c.serve.ui_dir);
      maybe(s, "idle_seconds", c.serve.idle_seconds);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "InvalidConfig", e.what());
  }
  c.train.seed = c.seed;
  return c;
}

HarnessConfig HarnessConfig::load(const std::string& path) { return from_json(read_file(path)); }

HarnessConfig HarnessConfig::with_env_overrides() const {
  HarnessConfig c = *this;
  auto env = [](const char* name) -> const char* {
    const char* v = std::getenv(name);
    return v && *v ? v : nullptr;
  };
  try {
    if (const char* v = env("WEBVLN_RECORDS")) c.records = v;
    if (const char* v = env("WEBVLN_OUTPUT_DIR")) c.output_dir = v;
    if (const char* v = env("WEBVLN_SEED")) c.seed = c.train.seed = std::stoull(v);
    if (const char* v = env("WEBVLN_PORT")) c.serve.port = std::stoi(v);
    if (const char* v = env("WEBVLN_TOKEN")) c.serve.token = v;
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "InvalidConfig", "malformed numeric environment override");
  }
  c.llm = c.llm.with_env_overrides();
  return c;
}

}  // namespace webvln

namespace webvln {

TrainRunResult run_training(const HarnessConfig& config, const std::string& checkpoint_out,
                            const std::string& log_path) {
  const GraphSet graphs = load_graphs(config.sites);
  const auto train_records = filter_split(load_records(config.records), "train");
  if (train_records.empty()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "no train-split records");
  const Vocab vocab = build_vocab(train_records, graphs.pointers());
  Model<float> model(config.model, vocab.size(), config.seed);

  std::map<std::string, std::unique_ptr<FeatureCache>> caches;
  std::vector<EpisodeInputs> data;
  for (const auto& r : train_records) {
    const NavGraph& g = graphs.get(r.site_id);
    auto& cache = caches[g.site_id()];
    if (!cache) cache = std::make_unique<FeatureCache>(g, config.model.patches);
    data.push_back(make_episode_inputs(g, r, vocab, *cache));
  }

  TrainHooks hooks;
  hooks.log_path = log_path;
  if (!checkpoint_out.empty()) {
    hooks.on_checkpoint = [&](std::size_t) { save_checkpoint(checkpoint_out, model, vocab); };
  }
  TrainRunResult out;
  out.summary = train(model, data, config.train, hooks);
  out.records = data.size();
  out.vocab_size = vocab.size();
  out.parameters = model.parameter_count();
  return out;
}

Taxonomy load_taxonomy(const HarnessConfig& config) {
  return config.taxonomy.empty() ? Taxonomy() : Taxonomy::load(config.taxonomy);
}

AgentBundle make_agent(AgentKind kind, const HarnessConfig& config) {
  AgentBundle b;
  switch (kind) {
    case AgentKind::kRandom:
      b.agent = std::make_unique<RandomAgent>(config.seed);
      break;
    case AgentKind::kGreedy:
      b.agent = std::make_unique<GreedyAgent>();
      break;
    case AgentKind::kOracle:
      b.agent = std::make_unique<OracleAgent>();
      break;
    case AgentKind::kLlm:
      b.client = make_llm_client(config.llm);
      b.agent = std::make_unique<LlmAgent>(*b.client);
      break;
    case AgentKind::kLearned: {
      if (config.checkpoint.empty()) fail(ErrorCode::kInvalidArgument, "InvalidConfig", "learned agent needs a checkpoint");
      auto [model, vocab] = load_checkpoint(config.checkpoint);
      b.model = std::make_unique<Model<float>>(std::move(model));
      b.vocab = std::make_unique<Vocab>(std::move(vocab));
      b.agent = std::make_unique<LearnedAgent>(*b.model, *b.vocab);
      break;
    }
  }
  return b;
}

EvalResult evaluate(const HarnessConfig& config, AgentKind kind, const std::string& split, const std::string& run_id) {
  static const std::regex kSafe("[A-Za-z0-9_.-]+");
  if (!std::regex_match(run_id, kSafe) || run_id == "." || run_id == "..") {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "run id may only contain letters, digits, '.', '_' and '-'");
  }
  const GraphSet graphs = load_graphs(config.sites);
  const auto records = load_records(config.records);
  const Taxonomy taxonomy = load_taxonomy(config);
  AgentBundle bundle = make_agent(kind, config);
  EvalOptions opts;
  opts.split = split;
  opts.max_steps = config.max_steps;
  const fs::path dir = fs::path(config.output_dir) / run_id;
  opts.log_path = (dir / "trajectories.jsonl").string();
  opts.report_path = (dir / "report.json").string();
  return run_eval(*bundle.agent, records, graphs, taxonomy, opts);
}

GradCheckResult gradcheck_record(const HarnessConfig& config, const GradCheckOptions& options,
                                 const std::string& record_id) {
  const GraphSet graphs = load_graphs(config.sites);
  const auto records = load_records(config.records);
  if (records.empty()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "no records");
  const EpisodeRecord* rec = &records.front();
  if (!record_id.empty()) {
    auto it = std::find_if(records.begin(), records.end(), [&](const auto& r) { return r.record_id == record_id; });
    if (it == records.end()) fail(ErrorCode::kNotFound, "UnknownRecord", "no record '" + record_id + "'");
    rec = &*it;
  }
  const NavGraph& g = graphs.get(rec->site_id);
  std::vector<std::string> texts = {rec->question, rec->description, rec->answer};
  for (const auto& pid : rec->path) {
    for (const auto& b : g.page(pid).buttons) texts.push_back(b.description);
  }
  const Vocab vocab = Vocab::build(texts);
  FeatureCache cache(g, config.model.patches);
  const EpisodeInputs inputs = make_episode_inputs(g, *rec, vocab, cache);
  const Model<GradReal> model(config.model, vocab.size(), config.seed);
  return grad_check(model, inputs, options);
}

}  // namespace webvln
