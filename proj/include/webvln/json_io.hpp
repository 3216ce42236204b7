#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "webvln/simulator.hpp"

namespace webvln {

void to_json(nlohmann::json& j, const Button& b);
void from_json(const nlohmann::json& j, Button& b);
void to_json(nlohmann::json& j, const WebPage& p);
void from_json(const nlohmann::json& j, WebPage& p);
void to_json(nlohmann::json& j, const EpisodeRecord& r);
void from_json(const nlohmann::json& j, EpisodeRecord& r);

// Trajectory log line: {record_id, visited, action_indices, stopped_page_id, answer, forced_stop}.
void to_json(nlohmann::json& j, const Trajectory& t);
void from_json(const nlohmann::json& j, Trajectory& t);

std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
void append_jsonl(const std::string& path, const nlohmann::json& row);

std::vector<EpisodeRecord> load_records(const std::string& path);
void save_records(const std::string& path, const std::vector<EpisodeRecord>& records);
std::vector<Trajectory> load_trajectories(const std::string& path);

}  // namespace webvln
