#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <unistd.h>

#include <json.hpp>

#include "webvln/webvln.h"

#include <httplib.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Takes ownership of a returned string and parses it.
json take(char* s) {
  REQUIRE(s != nullptr);
  json j = json::parse(s);
  wvln_string_free(s);
  return j;
}

const std::string& work() {
  static const std::string dir = [] {
    const fs::path p = fs::temp_directory_path() / ("webvln-capi-" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
  }();
  return dir;
}

struct Site {
  std::string site_dir, mock_dir, records;
};

// Fixture site plus generated records, built once through the C API.
const Site& site() {
  static const Site s = [] {
    Site out;
    char* info = nullptr;
    REQUIRE(wvln_fixture((work() + "/fixture").c_str(), &info) == WVLN_OK);
    const json j = take(info);
    out.site_dir = j.at("site_dir");
    out.mock_dir = j.at("mock_dir");
    out.records = work() + "/records.jsonl";

    wvln_graph* g = nullptr;
    REQUIRE(wvln_graph_ingest(out.site_dir.c_str(), &g, nullptr) == WVLN_OK);
    const json opts{{"n_paths", 100},
                    {"seed", 0},
                    {"out", out.records},
                    {"llm", {{"mock_dir", out.mock_dir}}},
                    {"captions", out.site_dir + "/captions.json"}};
    char* rep = nullptr;
    REQUIRE(wvln_qagen(g, opts.dump().c_str(), &rep) == WVLN_OK);
    wvln_string_free(rep);
    wvln_graph_free(g);
    return out;
  }();
  return s;
}

std::string config(const json& extra = json::object()) {
  json c{{"sites", {site().site_dir}}, {"records", site().records}, {"output_dir", work() + "/runs"}};
  c.update(extra);
  return c.dump();
}

json first_record() {
  std::ifstream in(site().records);
  std::string line;
  std::getline(in, line);
  return json::parse(line);
}

}  // namespace

TEST_CASE("version and error reporting") {
  CHECK(std::string(wvln_version()).size() > 0);
  wvln_graph* g = nullptr;
  CHECK(wvln_graph_ingest(nullptr, &g, nullptr) == WVLN_ERR_INVALID_ARGUMENT);
  CHECK(std::string(wvln_last_error_kind()) == "InvalidArgument");
  CHECK(std::string(wvln_last_error()).find("site_dir") != std::string::npos);
  CHECK(wvln_graph_load((work() + "/missing.json").c_str(), &g) == WVLN_ERR_IO);
  CHECK(wvln_eval("{not json", "oracle", "val", "x", nullptr) == WVLN_ERR_PARSE);
  char* out = nullptr;
  CHECK(wvln_fixture((work() + "/again").c_str(), &out) == WVLN_OK);
  CHECK(std::string(wvln_last_error()).empty());
  wvln_string_free(out);
  wvln_string_free(nullptr);
}

TEST_CASE("graph ingest, info and persistence") {
  wvln_graph* g = nullptr;
  char* rep = nullptr;
  REQUIRE(wvln_graph_ingest(site().site_dir.c_str(), &g, &rep) == WVLN_OK);
  const json r = take(rep);
  CHECK(r.at("pages") == 30);
  CHECK(r.at("edges") == 84);

  char* info = nullptr;
  REQUIRE(wvln_graph_info(g, &info) == WVLN_OK);
  const json i = take(info);
  CHECK(i.at("pages") == 30);
  const std::string home = i.at("homepage_id");

  const std::string path = work() + "/graph.json";
  REQUIRE(wvln_graph_save(g, path.c_str()) == WVLN_OK);
  wvln_graph* back = nullptr;
  REQUIRE(wvln_graph_load(path.c_str(), &back) == WVLN_OK);
  REQUIRE(wvln_graph_info(back, &info) == WVLN_OK);
  CHECK(take(info) == i);

  char* sp = nullptr;
  REQUIRE(wvln_graph_shortest_path(g, home.c_str(), home.c_str(), &sp) == WVLN_OK);
  CHECK(take(sp) == json::array({home}));
  CHECK(wvln_graph_shortest_path(g, home.c_str(), "no-such-page", &sp) == WVLN_ERR_NOT_FOUND);

  char* paths = nullptr;
  REQUIRE(wvln_pathgen(g, 100, 0, &paths) == WVLN_OK);
  const json p = take(paths);
  CHECK(p.size() == 24);
  for (const auto& e : p) CHECK(e.at("path").size() >= 3);
  wvln_graph_free(back);
  wvln_graph_free(g);
}

TEST_CASE("dataset generation") {
  wvln_graph* g = nullptr;
  REQUIRE(wvln_graph_ingest(site().site_dir.c_str(), &g, nullptr) == WVLN_OK);
  const std::string out = work() + "/records2.jsonl";
  const json opts{{"n_paths", 100},
                  {"out", out},
                  {"llm", {{"mock_dir", site().mock_dir}}},
                  {"captions", site().site_dir + "/captions.json"}};
  char* rep = nullptr;
  REQUIRE(wvln_qagen(g, opts.dump().c_str(), &rep) == WVLN_OK);
  const json r = take(rep);
  CHECK(r.at("records") == 68);
  CHECK(r.at("splits") == json{{"train", 40}, {"val", 7}, {"test", 21}});
  CHECK(r.at("prompts_sent") == 24);
  CHECK(fs::is_regular_file(out));

  char* sample = nullptr;
  REQUIRE(wvln_quality_sample(out.c_str(), 5, 1, &sample) == WVLN_OK);
  CHECK(take(sample).size() == 5);
  CHECK(wvln_qagen(g, R"({"n_paths": 3})", &rep) == WVLN_ERR_PARSE);
  wvln_graph_free(g);
}

TEST_CASE("episodes through the C interface") {
  wvln_graph* g = nullptr;
  REQUIRE(wvln_graph_ingest(site().site_dir.c_str(), &g, nullptr) == WVLN_OK);
  const json rec = first_record();
  wvln_episode* ep = nullptr;
  REQUIRE(wvln_episode_reset(g, rec.dump().c_str(), 0, &ep) == WVLN_OK);

  const auto& path = rec.at("path");
  int done = 0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    char* obs = nullptr;
    REQUIRE(wvln_episode_observe(ep, &obs) == WVLN_OK);
    const json o = take(obs);
    CHECK(o.at("page_id") == path[i]);
    CHECK(o.at("candidates").back().at("kind") == "stop");
    std::size_t idx = 0;
    while (o.at("candidates")[idx].at("target_page_id") != path[i + 1]) ++idx;
    const std::size_t count = o.at("candidates").size();
    CHECK(wvln_episode_step(ep, count, &done) == WVLN_ERR_INVALID_ARGUMENT);
    CHECK(std::string(wvln_last_error_kind()) == "InvalidActionIndex");
    REQUIRE(wvln_episode_step(ep, idx, &done) == WVLN_OK);
    CHECK(done == 0);
  }
  char* obs = nullptr;
  REQUIRE(wvln_episode_observe(ep, &obs) == WVLN_OK);
  const json last = take(obs);
  REQUIRE(wvln_episode_step(ep, last.at("candidates").size() - 1, &done) == WVLN_OK);
  CHECK(done == 1);
  CHECK(wvln_episode_step(ep, 0, &done) == WVLN_ERR_STATE);
  CHECK(std::string(wvln_last_error_kind()) == "EpisodeFinished");

  char* traj = nullptr;
  REQUIRE(wvln_episode_finish(ep, "twelve", &traj) == WVLN_OK);
  const json t = take(traj);
  CHECK(t.at("visited") == path);
  CHECK(t.at("answer") == "twelve");
  wvln_episode_free(ep);

  json bad = rec;
  bad["path"].push_back("nowhere");
  CHECK(wvln_episode_reset(g, bad.dump().c_str(), 0, &ep) == WVLN_ERR_INVALID_ARGUMENT);
  CHECK(std::string(wvln_last_error_kind()) == "RecordGraphMismatch");
  wvln_graph_free(g);
}

TEST_CASE("evaluation, reports and training") {
  char* rep = nullptr;
  REQUIRE(wvln_eval(config().c_str(), "oracle", "test", "oracle-test", &rep) == WVLN_OK);
  const json r = take(rep);
  CHECK(r.at("n") == 21);
  CHECK(r.at("sr") == 1.0);
  CHECK(r.at("spl") == 1.0);
  CHECK(r.at("failures").empty());
  CHECK(r.at("table").get<std::string>().find("oracle/test") != std::string::npos);

  char* again = nullptr;
  const std::string log = work() + "/runs/oracle-test/trajectories.jsonl";
  REQUIRE(wvln_report_from_log(config().c_str(), log.c_str(), &again) == WVLN_OK);
  CHECK(take(again).at("sr") == 1.0);
  CHECK(wvln_eval(config().c_str(), "psychic", "test", "x", &rep) == WVLN_ERR_INVALID_ARGUMENT);

  const std::string small =
      config({{"model", {{"dim", 16}, {"heads", 2}, {"ff", 32}, {"n_init", 1}, {"n_nav", 1}, {"n_ans", 1}}},
              {"train", {{"iterations", 3}, {"batch_size", 2}}}});
  const std::string ckpt = work() + "/model.ckpt";
  char* summary = nullptr;
  REQUIRE(wvln_train(small.c_str(), ckpt.c_str(), nullptr, &summary) == WVLN_OK);
  const json s = take(summary);
  CHECK(s.at("iterations") == 3);
  CHECK(s.at("records") == 40);
  CHECK(fs::is_regular_file(ckpt));

  json with_ckpt = json::parse(small);
  with_ckpt["checkpoint"] = ckpt;
  REQUIRE(wvln_eval(with_ckpt.dump().c_str(), "learned", "val", "learned-val", &rep) == WVLN_OK);
  CHECK(take(rep).at("n") == 7);

  const std::string tiny =
      config({{"model", {{"dim", 8}, {"heads", 2}, {"ff", 16}, {"n_init", 1}, {"n_nav", 1}, {"n_ans", 1}}}});
  char* gc = nullptr;
  REQUIRE(wvln_gradcheck(tiny.c_str(), R"({"min_coords": 30, "per_tensor": 1})", &gc) == WVLN_OK);
  const json g = take(gc);
  CHECK(g.at("coords_checked").get<int>() >= 30);
  CHECK(g.at("max_relative_error").get<double>() <= 1e-4);
}

TEST_CASE("HTTP service lifecycle") {
  wvln_service* svc = nullptr;
  int port = 0;
  REQUIRE(wvln_service_start(config({{"serve", {{"port", 0}}}}).c_str(), &svc, &port) == WVLN_OK);
  CHECK(port > 0);
  httplib::Client client("127.0.0.1", port);
  const json rec = first_record();
  auto res = client.Post("/sessions", json{{"record_id", rec.at("record_id")}}.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const std::string sid = json::parse(res->body).at("session_id");
  auto obs = client.Get("/sessions/" + sid + "/observation");
  REQUIRE(obs);
  CHECK(json::parse(obs->body).at("page_id") == rec.at("path")[0]);
  wvln_service_stop(svc);
  CHECK_FALSE(client.Get("/sessions/" + sid + "/observation"));
  wvln_service_stop(nullptr);
}
