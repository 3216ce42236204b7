#include <filesystem>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "webvln/service.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that clashes with it.
#include <httplib.h>

using namespace webvln;
using nlohmann::json;

namespace {

struct Running {
  GraphSet graphs;
  Taxonomy taxonomy;
  std::unique_ptr<Service> service;
  std::unique_ptr<httplib::Client> client;
  std::string dir;

  explicit Running(const std::string& token = "") {
    const auto& fx = testutil::fixture();
    graphs.add(fx.graph);
    dir = testutil::scratch("service");
    ServiceConfig c;
    c.settings.port = 0;
    c.settings.token = token;
    c.reports_dir = dir + "/runs";
    c.session_log = dir + "/sessions.jsonl";
    service = std::make_unique<Service>(graphs, fx.records, taxonomy, c);
    const int port = service->start();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  httplib::Result post(const std::string& path, const json& body, const httplib::Headers& h = {}) {
    return client->Post(path, h, body.dump(), "application/json");
  }
};

json body(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_SUITE("service") {
  TEST_CASE("an episode over HTTP matches the simulator") {
    Running srv;
    const auto& fx = testutil::fixture();
    const EpisodeRecord& rec = fx.records.front();

    auto created = srv.post("/sessions", {{"record_id", rec.record_id}, {"owner", "tester"}});
    REQUIRE(created);
    CHECK(created->status == 201);
    const std::string sid = body(created).at("session_id");
    CHECK(body(created).at("question") == rec.question);
    CHECK(srv.service->session_count() == 1);

    auto obs = srv.client->Get("/sessions/" + sid + "/observation");
    REQUIRE(obs);
    CHECK(obs->status == 200);
    CHECK(body(obs).at("page_id") == fx.graph.homepage_id());
    CHECK(body(obs).at("candidates").back().at("kind") == "stop");

    std::vector<std::size_t> actions;
    for (std::size_t i = 0; i + 1 < rec.path.size(); ++i) actions.push_back(*fx.graph.button_index(rec.path[i], rec.path[i + 1]));
    actions.push_back(fx.graph.page(rec.target_page_id()).buttons.size());
    json last;
    for (auto a : actions) {
      auto r = srv.post("/sessions/" + sid + "/action", {{"index", a}});
      REQUIRE(r);
      CHECK(r->status == 200);
      last = body(r);
    }
    CHECK(last.at("done") == true);

    auto late = srv.post("/sessions/" + sid + "/action", {{"index", 0}});
    CHECK(late->status == 409);

    auto ans = srv.post("/sessions/" + sid + "/answer", {{"text", rec.answer}});
    REQUIRE(ans);
    CHECK(ans->status == 200);
    const json a = body(ans);
    CHECK(a.at("scores").at("success") == true);
    CHECK(a.at("scores").at("spl") == 1.0);
    const Trajectory t = a.at("trajectory").get<Trajectory>();
    const EpisodeState replayed = replay(fx.graph, rec, t.action_indices);
    CHECK(replayed.visited == t.visited);
    CHECK(t.visited == rec.path);
    CHECK(srv.post("/sessions/" + sid + "/answer", {{"text", "again"}})->status == 409);

    const auto logged = read_jsonl(srv.dir + "/sessions.jsonl");
    REQUIRE(logged.size() == 1);
    CHECK(logged[0].at("owner") == "tester");
    CHECK(logged[0].at("session_id") == sid);
  }

  TEST_CASE("request errors") {
    Running srv;
    const auto& rec = testutil::fixture().records.front();
    const std::string sid = body(srv.post("/sessions", {{"record_id", rec.record_id}})).at("session_id");
    const std::size_t count = testutil::fixture().graph.page(rec.path[0]).buttons.size() + 1;

    auto bad = srv.post("/sessions/" + sid + "/action", {{"index", count}});
    CHECK(bad->status == 400);
    CHECK(body(bad).at("candidate_count") == count);
    CHECK(srv.post("/sessions/" + sid + "/action", {{"index", -1}})->status == 400);
    CHECK(srv.post("/sessions/" + sid + "/action", {{"index", "one"}})->status == 400);
    CHECK(srv.client->Post("/sessions/" + sid + "/action", "{oops", "application/json")->status == 400);

    CHECK(srv.post("/sessions/" + sid + "/answer", {{"text", "early"}})->status == 409);
    CHECK(srv.client->Get("/sessions/nope/observation")->status == 404);
    CHECK(srv.post("/sessions/nope/action", {{"index", 0}})->status == 404);
    CHECK(srv.post("/sessions", {{"record_id", "missing"}})->status == 404);
    CHECK(srv.post("/sessions", {{"split", "nonexistent"}})->status == 400);

    auto random = srv.post("/sessions", {{"split", "val"}});
    CHECK(random->status == 201);
    const std::string rid = body(random).at("record_id");
    bool in_val = false;
    for (const auto& r : testutil::fixture().records) in_val = in_val || (r.record_id == rid && r.split == "val");
    CHECK(in_val);
  }

  TEST_CASE("reports and assets") {
    Running srv;
    std::filesystem::create_directories(srv.dir + "/runs/r1");
    write_file(srv.dir + "/runs/r1/report.json", R"({"n": 3})");
    auto rep = srv.client->Get("/reports/r1");
    REQUIRE(rep);
    CHECK(rep->status == 200);
    CHECK(body(rep).at("n") == 3);
    CHECK(srv.client->Get("/reports/r2")->status == 404);
    CHECK(srv.client->Get("/reports/..")->status == 404);

    const auto& rec = testutil::fixture().records.front();
    const std::string sid = body(srv.post("/sessions", {{"record_id", rec.record_id}})).at("session_id");
    const json obs = body(srv.client->Get("/sessions/" + sid + "/observation"));
    const std::string shot = obs.at("screenshot");
    auto img = srv.client->Get(shot);
    REQUIRE(img);
    CHECK(img->status == 200);
    CHECK(img->get_header_value("Content-Type") == "image/png");
    CHECK(img->body.substr(1, 3) == "PNG");
    CHECK(srv.client->Get("/assets/_/../site.json")->status == 404);
    CHECK(srv.client->Get("/assets/_/pages/index.html")->status == 404);
  }

  TEST_CASE("shared token") {
    Running srv("s3cret");
    const auto& rec = testutil::fixture().records.front();
    CHECK(srv.post("/sessions", {{"record_id", rec.record_id}})->status == 401);
    CHECK(srv.post("/sessions", {{"record_id", rec.record_id}}, {{"Authorization", "Bearer wrong"}})->status == 401);
    CHECK(srv.post("/sessions", {{"record_id", rec.record_id}}, {{"Authorization", "Bearer s3cret"}})->status == 201);
    CHECK(srv.post("/sessions", {{"record_id", rec.record_id}}, {{"X-Webvln-Token", "s3cret"}})->status == 201);
    CHECK(srv.client->Get("/reports/x")->status == 401);
  }
}
