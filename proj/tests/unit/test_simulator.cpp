#include <functional>

#include <doctest.h>

#include "helpers.hpp"
#include "webvln/error.hpp"
#include "webvln/json_io.hpp"
#include "webvln/rng.hpp"
#include "webvln/simulator.hpp"

using namespace webvln;

namespace {

std::string kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return "none";
}

// home -> {A, B, C, D}, A -> T, T -> A (2-page cycle for forced stops).
NavGraph sample_graph() {
  return testutil::make_graph({{"home", {"A", "B", "C", "D"}}, {"A", {"T"}}, {"B", {}}, {"C", {}}, {"D", {}},
                               {"T", {"A"}}});
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("reset starts at the homepage") {
    const auto g = sample_graph();
    const auto r = testutil::make_record("r1", {"home", "A", "T"});
    const auto s = reset(g, r);
    CHECK(s.current_page_id == "home");
    CHECK(s.t == 0);
    CHECK_FALSE(s.done);
    CHECK(s.history.empty());
    CHECK(s.visited == std::vector<PageId>{"home"});
    CHECK(reset(g, r) == s);
  }

  TEST_CASE("records that do not fit the graph are rejected") {
    const auto g = sample_graph();
    CHECK(kind_of([&] { reset(g, testutil::make_record("r", {"home", "T", "A"})); }) == "RecordGraphMismatch");
    CHECK(kind_of([&] { reset(g, testutil::make_record("r", {"A", "T", "A"})); }) == "RecordGraphMismatch");
    CHECK(kind_of([&] { reset(g, testutil::make_record("r", {"home", "A"})); }) == "RecordGraphMismatch");
    CHECK(kind_of([&] { reset(g, testutil::make_record("r", {"home", "Z", "T"})); }) == "RecordGraphMismatch");
  }

  TEST_CASE("observation lists buttons then stop") {
    const auto g = sample_graph();
    auto s = reset(g, testutil::make_record("r", {"home", "A", "T"}));
    const auto obs = observe(s, g);
    CHECK(obs.page_id == "home");
    REQUIRE(obs.candidates.size() == 5);
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& c = std::get<ClickButton>(obs.candidates[i]);
      CHECK(c.button_index == i);
      CHECK(c.button == g.page("home").buttons[i]);
      CHECK(g.contains(c.button.target_page_id));
    }
    CHECK(is_stop(obs.candidates.back()));
    CHECK(obs.stop_index() == 4);
    CHECK(observe(s, g) == obs);

    s = step(s, 1, g);  // B has no buttons
    const auto only = observe(s, g);
    REQUIRE(only.candidates.size() == 1);
    CHECK(is_stop(only.candidates[0]));
  }

  TEST_CASE("click and stop") {
    const auto g = testutil::make_graph({{"home", {"A"}}, {"A", {"T"}}, {"T", {}}});
    auto s = reset(g, testutil::make_record("r", {"home", "A", "T"}));
    s = step(s, 0, g);
    CHECK(s.current_page_id == "A");
    CHECK(s.t == 1);
    CHECK(s.history == std::vector<HistoryEntry>{{"home", 0}});
    s = step(s, 0, g);
    s = step(s, 0, g);  // T has no buttons: index 0 is the stop
    CHECK(s.done);
    CHECK_FALSE(s.forced_stop);
    CHECK(s.t == 2);
    const auto tr = finish_with_answer(s, "the price is $12");
    CHECK(tr.stopped_page_id == "T");
    CHECK(tr.answer == std::optional<std::string>("the price is $12"));
    CHECK(tr.visited == std::vector<PageId>{"home", "A", "T"});
    CHECK(tr.action_indices == std::vector<std::size_t>{0, 0, 0});
    CHECK(tr.action_indices.size() == tr.transitions() + 1);
  }

  TEST_CASE("invalid actions and finished episodes") {
    const auto g = sample_graph();
    auto s = reset(g, testutil::make_record("r", {"home", "A", "T"}));
    CHECK(kind_of([&] { step(s, 5, g); }) == "InvalidActionIndex");
    CHECK(kind_of([&] { finish_with_answer(s, "x"); }) == "EpisodeNotFinished");
    s = step(s, 4, g);
    CHECK(kind_of([&] { step(s, 0, g); }) == "EpisodeFinished");
    CHECK(kind_of([&] { observe(s, g); }) == "EpisodeFinished");
    const auto tr = finish_with_answer(s, "");
    CHECK(tr.answer == std::optional<std::string>(""));
    CHECK(tr.stopped_page_id == "home");
  }

  TEST_CASE("ten clicks on a two-page cycle force a stop") {
    const auto g = sample_graph();
    auto s = reset(g, testutil::make_record("r", {"home", "A", "T"}), 10);
    s = step(s, 0, g);  // home -> A
    int clicks = 1;
    while (!s.done) {
      s = step(s, 0, g);
      ++clicks;
    }
    CHECK(clicks == 10);
    CHECK(s.t == 10);
    CHECK(s.forced_stop);
    const auto tr = finish_with_answer(s, "x");
    CHECK(tr.forced_stop);
    CHECK(tr.stopped_page_id == s.current_page_id);
    CHECK(tr.action_indices.size() == tr.transitions());
  }

  TEST_CASE("replay reproduces visited pages for random legal sequences") {
    const auto g = sample_graph();
    const auto r = testutil::make_record("r", {"home", "A", "T"});
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      auto s = reset(g, r);
      while (!s.done) s = step(s, uniform_index(rng, observe(s, g).candidates.size()), g);
      const auto tr = finish_with_answer(s, "");
      for (std::size_t i = 0; i + 1 < tr.visited.size(); ++i) {
        CHECK(g.button_index(tr.visited[i], tr.visited[i + 1]).has_value());
      }
      const auto again = replay(g, r, tr.action_indices);
      CHECK(again == s);
    }
  }

  TEST_CASE("trajectory JSON lines round trip") {
    Trajectory t{"r9", {"home", "A"}, {0, 1}, std::string("$12"), "A", false};
    nlohmann::json j = t;
    CHECK(j.at("record_id") == "r9");
    CHECK(j.at("stopped_page_id") == "A");
    CHECK(j.get<Trajectory>() == t);
    const std::string dir = testutil::scratch("traj");
    write_jsonl(dir + "/t.jsonl", {j, j});
    CHECK(load_trajectories(dir + "/t.jsonl") == std::vector<Trajectory>{t, t});
  }

  TEST_CASE("fixture records all validate") {
    const auto& fx = testutil::fixture();
    REQUIRE_FALSE(fx.records.empty());
    for (const auto& r : fx.records) CHECK_NOTHROW(validate_record(r, fx.graph));
  }
}
