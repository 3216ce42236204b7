#include "webvln/webvln.h"

#include <csignal>
#include <cstring>
#include <filesystem>
#include <memory>

#include <json.hpp>

#include "webvln/datagen.hpp"
#include "webvln/error.hpp"
#include "webvln/fixture.hpp"
#include "webvln/harness.hpp"
#include "webvln/json_io.hpp"
#include "webvln/service.hpp"
#include "webvln/text.hpp"

using nlohmann::json;
using namespace webvln;

struct wvln_graph {
  NavGraph graph;
};

struct wvln_episode {
  const NavGraph* graph;
  EpisodeState state;
};

struct wvln_service {
  GraphSet graphs;
  Taxonomy taxonomy;
  std::unique_ptr<Service> service;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

wvln_status record(wvln_status s, std::string kind, std::string message) {
  g_kind = std::move(kind);
  g_error = std::move(message);
  return s;
}

// Runs fn, mapping exceptions to status codes.
template <class Fn>
wvln_status guarded(Fn&& fn) {
  try {
    fn();
    g_error.clear();
    g_kind.clear();
    return WVLN_OK;
  } catch (const Error& e) {
    return record(static_cast<wvln_status>(static_cast<int>(e.code()) + 1), e.kind(), e.what());
  } catch (const json::exception& e) {
    return record(WVLN_ERR_PARSE, "ParseError", std::string("ParseError: ") + e.what());
  } catch (const std::bad_alloc&) {
    return record(WVLN_ERR_INTERNAL, "OutOfMemory", "OutOfMemory: allocation failed");
  } catch (const std::exception& e) {
    return record(WVLN_ERR_INTERNAL, "InternalError", std::string("InternalError: ") + e.what());
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* name) {
  if (!p) fail(ErrorCode::kInvalidArgument, "InvalidArgument", std::string(name) + " must not be null");
}

void put(char** out, const json& j) {
  if (out) *out = dup(j.dump(2));
}

HarnessConfig config_of(const char* config_json) {
  require(config_json, "config_json");
  return HarnessConfig::from_json(config_json).with_env_overrides();
}

json candidates_json(const Observation& obs) {
  json arr = json::array();
  for (std::size_t i = 0; i < obs.candidates.size(); ++i) {
    json c{{"index", i}};
    if (const auto* click = std::get_if<ClickButton>(&obs.candidates[i])) {
      c["kind"] = "button";
      c["button_id"] = click->button.button_id;
      c["description"] = click->button.description;
      c["image_ref"] = click->button.image_ref;
      c["target_page_id"] = click->button.target_page_id;
    } else {
      c["kind"] = "stop";
    }
    arr.push_back(std::move(c));
  }
  return arr;
}

ServiceConfig service_config(const HarnessConfig& c) {
  ServiceConfig sc;
  sc.settings = c.serve;
  sc.reports_dir = c.output_dir;
  sc.session_log = (std::filesystem::path(c.output_dir) / "sessions.jsonl").string();
  sc.max_steps = c.max_steps;
  sc.seed = c.seed;
  std::filesystem::create_directories(c.output_dir);
  return sc;
}

}  // namespace

extern "C" {

const char* wvln_version(void) { return "0.1.0"; }
const char* wvln_last_error(void) { return g_error.c_str(); }
const char* wvln_last_error_kind(void) { return g_kind.c_str(); }
void wvln_string_free(char* s) { std::free(s); }

wvln_status wvln_graph_ingest(const char* site_dir, wvln_graph** out, char** report_json) {
  return guarded([&] {
    require(site_dir, "site_dir");
    require(out, "out");
    NavGraph::BuildReport rep;
    auto g = std::make_unique<wvln_graph>(wvln_graph{load_site(site_dir, &rep)});
    put(report_json, {{"site_id", g->graph.site_id()},
                      {"pages", g->graph.pages().size()},
                      {"edges", g->graph.edge_count()},
                      {"dropped_buttons", rep.dropped_buttons},
                      {"warnings", rep.warnings}});
    *out = g.release();
  });
}

wvln_status wvln_graph_load(const char* path, wvln_graph** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new wvln_graph{load_graph(path)};
  });
}

wvln_status wvln_graph_save(const wvln_graph* graph, const char* path) {
  return guarded([&] {
    require(graph, "graph");
    require(path, "path");
    write_file(path, graph_to_json(graph->graph));
  });
}

wvln_status wvln_graph_info(const wvln_graph* graph, char** info_json) {
  return guarded([&] {
    require(graph, "graph");
    put(info_json, {{"site_id", graph->graph.site_id()},
                    {"homepage_id", graph->graph.homepage_id()},
                    {"pages", graph->graph.pages().size()},
                    {"edges", graph->graph.edge_count()}});
  });
}

wvln_status wvln_graph_shortest_path(const wvln_graph* graph, const char* from, const char* to, char** path_json) {
  return guarded([&] {
    require(graph, "graph");
    require(from, "from");
    require(to, "to");
    const auto p = shortest_path(graph->graph, from, to);
    put(path_json, p ? json(*p) : json(nullptr));
  });
}

void wvln_graph_free(wvln_graph* graph) { delete graph; }

wvln_status wvln_pathgen(const wvln_graph* graph, size_t n, uint64_t seed, char** paths_json) {
  return guarded([&] {
    require(graph, "graph");
    json arr = json::array();
    for (const auto& p : sample_paths(graph->graph, n, seed)) {
      arr.push_back({{"path", p.path}, {"target_page_id", p.target_page_id}});
    }
    put(paths_json, arr);
  });
}

wvln_status wvln_qagen(const wvln_graph* graph, const char* options_json, char** report_json) {
  return guarded([&] {
    require(graph, "graph");
    require(options_json, "options_json");
    const json o = json::parse(options_json);
    const std::string out = o.at("out").get<std::string>();
    GenerationOptions gen;
    gen.seed = o.value("seed", std::uint64_t{0});
    const auto paths = sample_paths(graph->graph, o.value("n_paths", std::size_t{100}), gen.seed);

    HarnessConfig hc = HarnessConfig::from_json(json{{"llm", o.value("llm", json::object())}}.dump()).with_env_overrides();
    auto client = make_llm_client(hc.llm);
    std::unique_ptr<Captioner> captioner;
    if (o.contains("captions")) captioner = std::make_unique<SidecarCaptioner>(o.at("captions").get<std::string>());

    GenerationReport rep;
    const auto records = generate_records(graph->graph, paths, *client, captioner.get(), gen, &rep);
    save_records(out, records);
    std::map<std::string, std::size_t> splits{{"train", 0}, {"val", 0}, {"test", 0}};
    for (const auto& r : records) ++splits[r.split];
    put(report_json, {{"records", records.size()},
                      {"paths", paths.size()},
                      {"prompts_sent", rep.prompts_sent},
                      {"skipped", rep.skipped},
                      {"splits", splits}});
  });
}

wvln_status wvln_quality_sample(const char* records_path, size_t k, uint64_t seed, char** records_json) {
  return guarded([&] {
    require(records_path, "records_path");
    put(records_json, json(quality_sample(load_records(records_path), k, seed)));
  });
}

wvln_status wvln_fixture(const char* dir, char** info_json) {
  return guarded([&] {
    require(dir, "dir");
    const FixtureSite f = write_fixture_site(dir);
    put(info_json, {{"site_dir", f.site_dir}, {"mock_dir", f.mock_dir}, {"pages", f.pages}});
  });
}

wvln_status wvln_train(const char* config_json, const char* checkpoint_out, const char* log_path,
                       char** summary_json) {
  return guarded([&] {
    require(checkpoint_out, "checkpoint_out");
    const HarnessConfig c = config_of(config_json);
    const TrainRunResult r = run_training(c, checkpoint_out, log_path ? log_path : "");
    const auto& h = r.summary.history;
    put(summary_json, {{"iterations", r.summary.iterations},
                       {"records", r.records},
                       {"vocab_size", r.vocab_size},
                       {"parameters", r.parameters},
                       {"first_loss", h.empty() ? 0.0 : h.front().loss},
                       {"last_loss", h.empty() ? 0.0 : h.back().loss}});
  });
}

wvln_status wvln_eval(const char* config_json, const char* agent, const char* split, const char* run_id,
                      char** report_json) {
  return guarded([&] {
    require(agent, "agent");
    require(run_id, "run_id");
    const HarnessConfig c = config_of(config_json);
    const EvalResult r = evaluate(c, parse_agent_kind(agent), split ? split : "", run_id);
    json j = json::parse(report_to_json(r.report));
    j["failures"] = json::array();
    for (const auto& f : r.failures) j["failures"].push_back({{"record_id", f.record_id}, {"error", f.error}});
    j["fallbacks"] = r.fallbacks;
    j["table"] = report_to_table(r.report, std::string(agent) + (split && *split ? "/" + std::string(split) : ""));
    put(report_json, j);
  });
}

wvln_status wvln_report_from_log(const char* config_json, const char* log_path, char** report_json) {
  return guarded([&] {
    require(log_path, "log_path");
    const HarnessConfig c = config_of(config_json);
    const MetricsReport r = report_from_log(log_path, load_records(c.records), load_graphs(c.sites), load_taxonomy(c));
    if (report_json) *report_json = dup(report_to_json(r));
  });
}

wvln_status wvln_gradcheck(const char* config_json, const char* options_json, char** result_json) {
  return guarded([&] {
    const HarnessConfig c = config_of(config_json);
    const json o = options_json ? json::parse(options_json) : json::object();
    GradCheckOptions opt;
    opt.eps = o.value("eps", opt.eps);
    opt.min_coords = o.value("min_coords", opt.min_coords);
    opt.per_tensor = o.value("per_tensor", opt.per_tensor);
    opt.seed = o.value("seed", c.seed);
    const GradCheckResult r = gradcheck_record(c, opt, o.value("record_id", std::string()));
    put(result_json, {{"max_relative_error", r.max_relative_error},
                      {"coords_checked", r.coords_checked},
                      {"worst_tensor", r.worst_tensor},
                      {"worst_offset", r.worst_offset},
                      {"worst_analytic", r.worst_analytic},
                      {"worst_numeric", r.worst_numeric}});
  });
}

wvln_status wvln_episode_reset(const wvln_graph* graph, const char* record_json, size_t max_steps, wvln_episode** out) {
  return guarded([&] {
    require(graph, "graph");
    require(record_json, "record_json");
    require(out, "out");
    const EpisodeRecord rec = json::parse(record_json).get<EpisodeRecord>();
    *out = new wvln_episode{&graph->graph, reset(graph->graph, rec, max_steps ? max_steps : kDefaultMaxSteps)};
  });
}

wvln_status wvln_episode_observe(const wvln_episode* episode, char** observation_json) {
  return guarded([&] {
    require(episode, "episode");
    const Observation obs = observe(episode->state, *episode->graph);
    put(observation_json,
        {{"page_id", obs.page_id}, {"screenshot_ref", obs.screenshot_ref}, {"candidates", candidates_json(obs)}});
  });
}

wvln_status wvln_episode_step(wvln_episode* episode, size_t action_index, int* done) {
  return guarded([&] {
    require(episode, "episode");
    episode->state = step(episode->state, action_index, *episode->graph);
    if (done) *done = episode->state.done ? 1 : 0;
  });
}

wvln_status wvln_episode_finish(const wvln_episode* episode, const char* answer, char** trajectory_json) {
  return guarded([&] {
    require(episode, "episode");
    put(trajectory_json, json(finish_with_answer(episode->state, answer ? answer : "")));
  });
}

void wvln_episode_free(wvln_episode* episode) { delete episode; }

wvln_status wvln_service_start(const char* config_json, wvln_service** out, int* bound_port) {
  return guarded([&] {
    require(out, "out");
    const HarnessConfig c = config_of(config_json);
    auto s = std::make_unique<wvln_service>();
    s->graphs = load_graphs(c.sites);
    s->taxonomy = load_taxonomy(c);
    s->service = std::make_unique<Service>(s->graphs, load_records(c.records), s->taxonomy, service_config(c));
    const int port = s->service->start();
    if (bound_port) *bound_port = port;
    *out = s.release();
  });
}

wvln_status wvln_service_run(const char* config_json) {
  return guarded([&] {
    const HarnessConfig c = config_of(config_json);
    const GraphSet graphs = load_graphs(c.sites);
    const Taxonomy taxonomy = load_taxonomy(c);
    Service service(graphs, load_records(c.records), taxonomy, service_config(c));
    service.run();
  });
}

void wvln_service_stop(wvln_service* service) {
  if (!service) return;
  if (service->service) service->service->stop();
  delete service;
}

}  // extern "C"
