#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "webvln/datagen.hpp"
#include "webvln/fixture.hpp"
#include "webvln/json_io.hpp"
#include "webvln/llm_client.hpp"
#include "webvln/site_graph.hpp"

namespace testutil {

namespace fs = std::filesystem;

// Fresh per-process scratch directory.
inline std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("webvln-unit-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

// Graph from an adjacency list; button i of page u is labelled "to <target>".
inline webvln::NavGraph make_graph(const std::vector<std::pair<std::string, std::vector<std::string>>>& adjacency,
                                   const std::string& home = {}) {
  std::vector<webvln::WebPage> pages;
  for (const auto& [id, targets] : adjacency) {
    webvln::WebPage p;
    p.page_id = id;
    p.word_list = {id};
    for (std::size_t i = 0; i < targets.size(); ++i) {
      webvln::Button b;
      b.button_id = id + "#" + std::to_string(i);
      b.description = "to " + targets[i];
      b.target_page_id = targets[i];
      p.buttons.push_back(b);
    }
    pages.push_back(std::move(p));
  }
  const std::string h = home.empty() ? adjacency.front().first : home;
  return webvln::NavGraph::build(std::move(pages), h);
}

inline webvln::EpisodeRecord make_record(const std::string& id, std::vector<std::string> path,
                                         const std::string& answer = "twelve dollars") {
  webvln::EpisodeRecord r;
  r.record_id = id;
  r.question = "what is on " + path.back();
  r.answer = answer;
  r.path = std::move(path);
  r.split = "train";
  return r;
}

// The 30-page fixture shop, ingested, with records from the canned LLM.
struct FixtureData {
  webvln::FixtureSite site;
  webvln::NavGraph graph;
  std::vector<webvln::EpisodeRecord> records;
  std::string records_path;
};

inline const FixtureData& fixture() {
  static const FixtureData data = [] {
    FixtureData d;
    const std::string dir = scratch("fixture");
    d.site = webvln::write_fixture_site(dir + "/site");
    d.graph = webvln::load_site(d.site.site_dir);
    webvln::MockLlmClient llm(d.site.mock_dir);
    webvln::SidecarCaptioner captioner(d.site.site_dir + "/captions.json");
    const auto paths = webvln::sample_paths(d.graph, 100, 0);
    d.records = webvln::generate_records(d.graph, paths, llm, &captioner, webvln::GenerationOptions{});
    d.records_path = dir + "/records.jsonl";
    webvln::save_records(d.records_path, d.records);
    return d;
  }();
  return data;
}

}  // namespace testutil
