#include <cmath>
#include <functional>

#include <doctest.h>

#include "helpers.hpp"
#include "webvln/error.hpp"
#include "webvln/metrics.hpp"
#include "webvln/rng.hpp"

using namespace webvln;

namespace {

// home -> A -> B -> T and a shortcut home -> S -> T (d* = 2).
NavGraph nav_graph() {
  return testutil::make_graph({{"home", {"A", "S"}}, {"A", {"B"}}, {"B", {"T"}}, {"S", {"T"}}, {"T", {"home"}}});
}

Trajectory traj(const std::string& id, std::vector<PageId> visited, std::string answer = "") {
  Trajectory t;
  t.record_id = id;
  t.visited = std::move(visited);
  t.stopped_page_id = t.visited.back();
  t.answer = std::move(answer);
  return t;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("exact shortest path gives perfect scores") {
    const auto g = testutil::make_graph({{"home", {"A"}}, {"A", {"B"}}, {"B", {"T"}}, {"T", {}}});
    const auto recs = index_records({testutil::make_record("r", {"home", "A", "B", "T"})});
    const auto s = nav_metrics({traj("r", {"home", "A", "B", "T"})}, recs, g);
    CHECK(s.sr == 1.0);
    CHECK(s.osr == 1.0);
    CHECK(s.spl == 1.0);
    CHECK(s.tl == 3.0);
  }

  TEST_CASE("passing the target without stopping there") {
    const auto g = nav_graph();
    const auto recs = index_records({testutil::make_record("r", {"home", "S", "T"})});
    const auto s = nav_metrics({traj("r", {"home", "S", "T", "home"})}, recs, g);
    CHECK(s.sr == 0.0);
    CHECK(s.osr == 1.0);
    CHECK(s.spl == 0.0);
  }

  TEST_CASE("SPL halves when the trajectory is twice as long") {
    const auto g = testutil::make_graph(
        {{"home", {"S", "A"}}, {"S", {"T"}}, {"A", {"B"}}, {"B", {"C"}}, {"C", {"T"}}, {"T", {}}});
    const auto recs = index_records({testutil::make_record("r", {"home", "S", "T"})});
    const auto s = nav_metrics({traj("r", {"home", "A", "B", "C", "T"})}, recs, g);
    CHECK(s.sr == 1.0);
    CHECK(s.spl == doctest::Approx(0.5));
    CHECK(s.tl == 4.0);
  }

  TEST_CASE("unknown record ids") {
    const auto g = nav_graph();
    try {
      (void)nav_metrics({traj("missing", {"home"})}, {}, g);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == "UnknownRecord");
    }
  }

  TEST_CASE("empty trajectory set scores zero") {
    const auto s = nav_metrics({}, {}, nav_graph());
    CHECK(s.sr == 0.0);
    CHECK(s.tl == 0.0);
  }

  TEST_CASE("SR <= OSR and SPL <= SR on random trajectories") {
    const auto g = nav_graph();
    const auto recs = index_records({testutil::make_record("r", {"home", "S", "T"})});
    Rng rng(8);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Trajectory> ts;
      for (std::size_t k = 0, n = 1 + uniform_index(rng, 6); k < n; ++k) {
        std::vector<PageId> v{"home"};
        for (std::size_t s = 0, len = uniform_index(rng, 7); s < len; ++s) {
          const auto& b = g.page(v.back()).buttons;
          v.push_back(b[uniform_index(rng, b.size())].target_page_id);
        }
        ts.push_back(traj("r", v));
      }
      const auto s = nav_metrics(ts, recs, g);
      CHECK(s.sr <= s.osr);
      CHECK(s.spl <= s.sr + 1e-12);
      CHECK(s.spl >= 0.0);
    }
  }

  TEST_CASE("per-episode scores") {
    const auto g = nav_graph();
    const auto rec = testutil::make_record("r", {"home", "S", "T"}, "twelve dollars");
    Taxonomy empty;
    const auto s = score_episode(traj("r", {"home", "A", "B", "T"}, "twelve dollars"), rec, g, empty);
    CHECK(s.success);
    CHECK(s.oracle_success);
    CHECK(s.tl == 3);
    CHECK(s.spl == doctest::Approx(2.0 / 3.0));
    CHECK(s.wups09 == 1.0);
    CHECK(s.wups00 == 1.0);
    const auto miss = score_episode(traj("r", {"home", "A"}, "nine"), rec, g, empty);
    CHECK_FALSE(miss.success);
    CHECK(miss.spl == 0.0);
    CHECK(miss.wups00 == 0.0);
  }

  TEST_CASE("BLEU and ROUGE-L on identical and disjoint sentences") {
    CHECK(bleu("the price is twelve", "the price is twelve", 1) == doctest::Approx(1.0));
    CHECK(bleu("the price is twelve", "the price is twelve", 4) == doctest::Approx(1.0));
    CHECK(rouge_l("the price is twelve", "the price is twelve") == doctest::Approx(1.0));
    CHECK(bleu("red wool", "blue cotton", 1) == 0.0);
    CHECK(rouge_l("red wool", "blue cotton") == 0.0);
  }

  TEST_CASE("hand-evaluated brevity penalty") {
    CHECK(bleu("the price is twelve", "the price is twelve dollars", 1) ==
          doctest::Approx(std::exp(1.0 - 5.0 / 4.0)).epsilon(1e-12));
    CHECK(bleu("the price is twelve", "the price is twelve dollars", 1) == doctest::Approx(0.7788).epsilon(1e-4));
    CHECK(bleu("a b c d e", "a b c d e f", 4) == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
    // Longer candidates pay no brevity penalty; unigram precision 4/5.
    CHECK(bleu("the price is twelve now", "the price is twelve", 1) == doctest::Approx(0.8));
  }

  TEST_CASE("corpus BLEU pools counts across pairs") {
    // Unigrams: 2/2 + 1/2 matched = 3/4; lengths 4 vs 4.
    CHECK(corpus_bleu({{"red sock", "red sock"}, {"blue hat", "blue cap"}}, 1) == doctest::Approx(0.75));
    CHECK_THROWS_AS(corpus_bleu({{"a", "a"}}, 0), Error);
  }

  TEST_CASE("ROUGE-L F-measure with beta 1.2") {
    // LCS 3, precision 1, recall 0.6.
    const double p = 1.0, r = 0.6, b2 = 1.44;
    CHECK(rouge_l("the cat sat", "the cat sat on mat") == doctest::Approx((1 + b2) * p * r / (r + b2 * p)));
    CHECK(rouge_l("", "") == 1.0);
    CHECK(rouge_l("", "x") == 0.0);
  }

  TEST_CASE("report aggregates and serialises") {
    const auto g = nav_graph();
    const auto tax = Taxonomy::load({std::string(WEBVLN_TEST_DATA) + "/toy_taxonomy.json"});
    const auto recs = index_records({testutil::make_record("r1", {"home", "S", "T"}, "dog"),
                                     testutil::make_record("r2", {"home", "A", "B"}, "cat")});
    const std::vector<Trajectory> ts{traj("r1", {"home", "S", "T"}, "dog"), traj("r2", {"home", "S"}, "dog")};
    const auto rep = compute_report(ts, recs, g, tax);
    CHECK(rep.n == 2);
    CHECK(rep.nav.sr == 0.5);
    CHECK(rep.nav.osr == 0.5);
    CHECK(rep.nav.spl == 0.5);
    CHECK(rep.nav.tl == 1.5);
    CHECK(rep.wups00 == doctest::Approx((1.0 + 2.0 / 3.0) / 2));
    CHECK(rep.wups09 == doctest::Approx((1.0 + 0.2 / 3.0) / 2));
    CHECK(rep.bleu1 == doctest::Approx(0.5));
    CHECK(rep.rouge_l == doctest::Approx(0.5));

    const auto back = report_from_json(report_to_json(rep));
    CHECK(back.n == rep.n);
    CHECK(back.nav.spl == rep.nav.spl);
    CHECK(back.wups09 == rep.wups09);
    CHECK(back.rouge_l == rep.rouge_l);

    const std::string table = report_to_table(rep, "oracle");
    CHECK(table.find("SR") < table.find("OSR"));
    CHECK(table.find("SPL") < table.find("TL"));
    CHECK(table.find("TL") < table.find("WUPS0.9"));
    CHECK(table.find("WUPS0.9") < table.find("WUPS0.0"));
    CHECK(table.find("oracle") != std::string::npos);
    CHECK(table.find("50.00") != std::string::npos);
  }

  TEST_CASE("metrics are pure") {
    const auto g = nav_graph();
    const auto recs = index_records({testutil::make_record("r1", {"home", "S", "T"}, "dog")});
    const std::vector<Trajectory> ts{traj("r1", {"home", "A", "B", "T"}, "a dog")};
    const Taxonomy tax;
    CHECK(report_to_json(compute_report(ts, recs, g, tax)) == report_to_json(compute_report(ts, recs, g, tax)));
  }
}
