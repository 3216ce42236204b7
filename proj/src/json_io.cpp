#include "webvln/json_io.hpp"

#include <fstream>
#include <sstream>

#include "webvln/error.hpp"

using nlohmann::json;

namespace webvln {

void to_json(json& j, const Button& b) {
  j = json{{"button_id", b.button_id},
           {"description", b.description},
           {"image_ref", b.image_ref},
           {"target_page_id", b.target_page_id}};
}

void from_json(const json& j, Button& b) {
  b.button_id = j.at("button_id").get<std::string>();
  b.description = j.value("description", std::string());
  b.image_ref = j.value("image_ref", std::string());
  b.target_page_id = j.at("target_page_id").get<std::string>();
}

void to_json(json& j, const WebPage& p) {
  j = json{{"page_id", p.page_id},       {"source_path", p.source_path}, {"screenshot_ref", p.screenshot_ref},
           {"buttons", p.buttons},       {"word_list", p.word_list},     {"captions", p.captions},
           {"text_blocks", p.text_blocks}};
}

void from_json(const json& j, WebPage& p) {
  p.page_id = j.at("page_id").get<std::string>();
  p.source_path = j.value("source_path", std::string());
  p.screenshot_ref = j.value("screenshot_ref", std::string());
  p.buttons = j.value("buttons", std::vector<Button>{});
  p.word_list = j.value("word_list", std::vector<std::string>{});
  p.captions = j.value("captions", std::vector<std::string>{});
  p.text_blocks = j.value("text_blocks", std::vector<std::string>{});
}

void to_json(json& j, const EpisodeRecord& r) {
  j = json{{"record_id", r.record_id}, {"site_id", r.site_id}, {"question", r.question},
           {"description", r.description}, {"answer", r.answer}, {"path", r.path},
           {"target_page_id", r.path.empty() ? std::string() : r.path.back()}, {"split", r.split}};
}

void from_json(const json& j, EpisodeRecord& r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.site_id = j.value("site_id", std::string());
  r.question = j.at("question").get<std::string>();
  r.description = j.value("description", std::string());
  r.answer = j.value("answer", std::string());
  r.path = j.at("path").get<std::vector<PageId>>();
  r.split = j.value("split", std::string());
}

void to_json(json& j, const Trajectory& t) {
  j = json{{"record_id", t.record_id},
           {"visited", t.visited},
           {"action_indices", t.action_indices},
           {"stopped_page_id", t.stopped_page_id},
           {"answer", t.answer ? json(*t.answer) : json(nullptr)},
           {"forced_stop", t.forced_stop}};
}

void from_json(const json& j, Trajectory& t) {
  t.record_id = j.at("record_id").get<std::string>();
  t.visited = j.at("visited").get<std::vector<PageId>>();
  t.action_indices = j.at("action_indices").get<std::vector<std::size_t>>();
  t.stopped_page_id = j.at("stopped_page_id").get<std::string>();
  if (j.contains("answer") && !j.at("answer").is_null()) {
    t.answer = j.at("answer").get<std::string>();
  } else {
    t.answer.reset();
  }
  t.forced_stop = j.value("forced_stop", false);
}

std::vector<json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "IoError", "cannot open " + path);
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::kParse, "ParseError", path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::string& path, const std::vector<json>& rows) {
  std::ostringstream out;
  for (const auto& r : rows) out << r.dump() << '\n';
  write_file(path, out.str());
}

void append_jsonl(const std::string& path, const json& row) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorCode::kIo, "IoError", "cannot append to " + path);
  out << row.dump() << '\n';
}

std::vector<EpisodeRecord> load_records(const std::string& path) {
  std::vector<EpisodeRecord> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<EpisodeRecord>());
  return out;
}

void save_records(const std::string& path, const std::vector<EpisodeRecord>& records) {
  std::vector<json> rows(records.begin(), records.end());
  write_jsonl(path, rows);
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::vector<Trajectory> out;
  for (const auto& row : read_jsonl(path)) out.push_back(row.get<Trajectory>());
  return out;
}

}  // namespace webvln
